//! JSON matrix files: `{"rows", "cols", "data": [[re, im], ...], "name"?}`,
//! row-major.

use std::fs;
use std::path::Path;

use qpp_core::{CMatrix, C64};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// On-disk matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    /// Row count.
    pub rows: usize,
    /// Column count.
    pub cols: usize,
    /// `[re, im]` pairs in row-major order.
    pub data: Vec<[f64; 2]>,
    /// Optional label.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

impl MatrixFile {
    /// Wraps a matrix.
    pub fn from_matrix(m: &CMatrix, name: Option<&str>) -> Self {
        MatrixFile {
            rows: m.rows(),
            cols: m.cols(),
            data: m.data().iter().map(|z| [z.re, z.im]).collect(),
            name: name.map(str::to_owned),
        }
    }

    /// Validates and converts.
    pub fn to_matrix(&self) -> Result<CMatrix, CliError> {
        if self.data.len() != self.rows * self.cols {
            return Err(CliError::Usage(format!(
                "matrix data has {} entries, expected {}x{}",
                self.data.len(),
                self.rows,
                self.cols
            )));
        }
        if self.data.iter().flatten().any(|x| !x.is_finite()) {
            return Err(CliError::Usage("matrix has non-finite entries".into()));
        }
        let data = self.data.iter().map(|&[re, im]| C64::new(re, im)).collect();
        CMatrix::from_vec(self.rows, self.cols, data).map_err(|e| CliError::Usage(e.to_string()))
    }

    /// Parses JSON text.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("bad matrix file: {e}")))
    }

    /// Canonical text: pretty JSON, shortest round-trip numbers, trailing
    /// newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("matrix serializes");
        s.push('\n');
        s
    }

    /// Writes [`Self::to_json`] to `path`.
    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        fs::write(path, self.to_json())
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }
}

/// A matrix read from disk together with the file's name and digest.
#[derive(Clone, Debug)]
pub struct LoadedMatrix {
    /// Path as given.
    pub file: String,
    /// Hex SHA-256 of the raw bytes.
    pub sha256: String,
    /// Parsed contents.
    pub matrix: CMatrix,
}

/// Hex SHA-256 digest.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Reads and validates a matrix file.
pub fn load(path: &Path) -> Result<LoadedMatrix, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let matrix = MatrixFile::parse(text)?.to_matrix()?;
    Ok(LoadedMatrix {
        file: path.display().to_string(),
        sha256: sha256_hex(&bytes),
        matrix,
    })
}

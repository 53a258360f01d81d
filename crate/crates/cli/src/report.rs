//! The single JSON document every command produces.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use qpp_core::{CMatrix, Check, QppError, Relation, Tolerances};
use serde::Serialize;
use serde_json::Value;

use crate::matrix_file::{sha256_hex, LoadedMatrix, MatrixFile};

/// An input file reference.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InputRef {
    /// Path as given on the command line.
    pub file: String,
    /// Hex SHA-256 of its bytes.
    pub sha256: String,
}

/// Tolerances as recorded in a report.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TolRecord {
    /// Identity residual threshold.
    pub eq_tol: f64,
    /// Relative rank cutoff.
    pub rank_rel_tol: f64,
    /// Spectral margin.
    pub spec_tol: f64,
}

impl From<&Tolerances> for TolRecord {
    fn from(t: &Tolerances) -> Self {
        TolRecord {
            eq_tol: t.eq_tol,
            rank_rel_tol: t.rank_rel_tol,
            spec_tol: t.spec_tol,
        }
    }
}

/// One row of the checks table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckRow {
    /// Fixed identifier.
    pub name: String,
    /// Measured value.
    pub residual: f64,
    /// Bound.
    pub threshold: f64,
    /// `le` (residual at most threshold) or `gt` (strictly above).
    pub relation: &'static str,
    /// Outcome.
    pub pass: bool,
    /// Number of aggregated samples, for sweep reports.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

impl From<&Check> for CheckRow {
    fn from(c: &Check) -> Self {
        CheckRow {
            name: c.name.clone(),
            residual: c.value,
            threshold: c.bound,
            relation: c.relation.as_str(),
            pass: c.pass,
            samples: None,
        }
    }
}

/// Overall outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    /// Every check passed.
    Pass,
    /// At least one check failed.
    Fail,
}

/// Report document.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    /// Subcommand name.
    pub command: String,
    /// Input files.
    pub inputs: Vec<InputRef>,
    /// Tolerances in force.
    pub tolerances: TolRecord,
    /// Checks, in a fixed order.
    pub checks: Vec<CheckRow>,
    /// Scalar and structural results.
    pub values: BTreeMap<String, Value>,
    /// Matrix results.
    pub outputs: Vec<MatrixFile>,
    /// `pass` iff every check passes.
    pub verdict: Verdict,
}

impl Report {
    /// Empty report.
    pub fn new(command: &str, inputs: &[&LoadedMatrix], tol: &Tolerances) -> Self {
        Report {
            command: command.to_owned(),
            inputs: inputs
                .iter()
                .map(|m| InputRef {
                    file: m.file.clone(),
                    sha256: m.sha256.clone(),
                })
                .collect(),
            tolerances: tol.into(),
            checks: Vec::new(),
            values: BTreeMap::new(),
            outputs: Vec::new(),
            verdict: Verdict::Pass,
        }
    }

    /// Appends checks.
    pub fn extend_checks<'a>(&mut self, checks: impl IntoIterator<Item = &'a Check>) {
        self.checks.extend(checks.into_iter().map(CheckRow::from));
        self.refresh();
    }

    /// Appends one check.
    pub fn check(&mut self, c: Check) {
        self.extend_checks([&c]);
    }

    /// Records a failed computation as a failing check named after the error
    /// kind.
    pub fn error(&mut self, e: &QppError) {
        self.checks.push(CheckRow {
            name: e.kind().to_owned(),
            residual: error_residual(e),
            threshold: 0.0,
            relation: Relation::AtMost.as_str(),
            pass: false,
            samples: None,
        });
        self.values
            .insert("error".into(), Value::String(e.to_string()));
        self.refresh();
    }

    /// Adds a named matrix output.
    pub fn output(&mut self, name: &str, m: &CMatrix) {
        self.outputs.push(MatrixFile::from_matrix(m, Some(name)));
    }

    /// Adds a named value.
    pub fn value(&mut self, name: &str, v: impl Into<Value>) {
        self.values.insert(name.to_owned(), v.into());
    }

    fn refresh(&mut self) {
        self.verdict = if self.checks.iter().all(|c| c.pass) {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
    }

    /// `true` when the verdict is pass.
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// Pretty JSON with trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// SHA-256 of [`Self::to_json`].
    pub fn digest(&self) -> String {
        sha256_hex(self.to_json().as_bytes())
    }

    /// Plain-text summary.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "command: {}", self.command);
        for i in &self.inputs {
            let _ = writeln!(s, "input: {} ({})", i.file, &i.sha256[..12]);
        }
        for (k, v) in &self.values {
            let _ = writeln!(s, "{k}: {v}");
        }
        for m in &self.outputs {
            let _ = writeln!(
                s,
                "output: {} ({}x{})",
                m.name.as_deref().unwrap_or("?"),
                m.rows,
                m.cols
            );
        }
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        for c in &self.checks {
            let op = if c.relation == "gt" { ">" } else { "<=" };
            let _ = writeln!(
                s,
                "{} {:width$}  {:.3e} {op} {:.3e}",
                if c.pass { "ok  " } else { "FAIL" },
                c.name,
                c.residual,
                c.threshold,
            );
        }
        let _ = writeln!(
            s,
            "verdict: {}",
            if self.passed() { "pass" } else { "fail" }
        );
        let _ = writeln!(s, "report_sha256: {}", self.digest());
        s
    }
}

fn error_residual(e: &QppError) -> f64 {
    match *e {
        QppError::NotHermitian { residual }
        | QppError::NotProjection { residual }
        | QppError::NotIdempotent { residual }
        | QppError::NotQuasiPair { residual }
        | QppError::CrossCheckFailure { residual, .. }
        | QppError::InvariantViolation { residual, .. }
        | QppError::NotSquareZero { residual }
        | QppError::NotQuadratic { residual } => residual,
        QppError::SpectrumViolation { eigenvalue } => eigenvalue,
        QppError::IllConditioned { min_singular, .. } => min_singular,
        QppError::IsProjection { norm } => norm,
        _ => f64::NAN,
    }
}

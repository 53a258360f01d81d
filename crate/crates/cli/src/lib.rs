//! File formats, reports and subcommands of the `qpp` tool.
//!
//! Exit codes: 0 when every check passes, 1 when a mathematical check fails,
//! 2 for usage and parse errors.
#![deny(missing_docs)]

pub mod commands;
pub mod matrix_file;
pub mod report;
pub mod suites;

use std::fmt;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use qpp_core::{Tolerances, C64};

use crate::commands::Mode;
use crate::report::Report;

/// Failures that are not mathematical.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad arguments, unreadable or malformed input.
    Usage(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(s) => write!(f, "{s}"),
        }
    }
}

impl std::error::Error for CliError {}

/// Exit code for a passing report.
pub const EXIT_PASS: i32 = 0;
/// Exit code when a check fails.
pub const EXIT_FAIL: i32 = 1;
/// Exit code for usage and parse errors.
pub const EXIT_USAGE: i32 = 2;

/// Command line.
#[derive(Debug, Parser)]
#[command(
    name = "qpp",
    version,
    about = "Idempotents, quasi-projection pairs and their block forms"
)]
pub struct Cli {
    /// Residual threshold for operator identities.
    #[arg(long, global = true, env = "QPP_EQ_TOL")]
    pub eq_tol: Option<f64>,
    /// Relative singular-value cutoff for numerical rank.
    #[arg(long, global = true, env = "QPP_RANK_TOL")]
    pub rank_tol: Option<f64>,
    /// Margin around the forbidden interval (0, 1).
    #[arg(long, global = true, env = "QPP_SPEC_TOL")]
    pub spec_tol: Option<f64>,
    /// Also write every output matrix to this directory.
    #[arg(long, global = true)]
    pub emit_dir: Option<PathBuf>,
    /// Print the JSON report instead of the text summary.
    #[arg(long, global = true)]
    pub json: bool,
    /// Subcommand.
    #[command(subcommand)]
    pub command: Command,
}

/// Subcommands.
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Projections, matched/supplementary projections and norms of an idempotent.
    Analyze {
        /// Idempotent `Q`.
        q: PathBuf,
    },
    /// Block decomposition of a pair `(P, Q)`, or of `(m(Q), Q)` in matched4 mode.
    Decompose {
        /// Decomposition to compute.
        #[arg(long, value_enum)]
        mode: Mode,
        /// `[P.json] Q.json`; matched4 uses only the last file.
        #[arg(num_args = 1..=2, required = true)]
        files: Vec<PathBuf>,
    },
    /// Rebuilds `Q` from its matched and supplementary projections.
    Reconstruct {
        /// `m(Q)`.
        m: PathBuf,
        /// `s(Q)`.
        s: PathBuf,
    },
    /// Unitary canonical form of a quadratic operator.
    Quadratic {
        /// The operator `T`.
        t: PathBuf,
        /// First root as `RE,IM` (or `RE`).
        #[arg(long, value_parser = parse_complex, requires = "b", allow_hyphen_values = true)]
        a: Option<C64>,
        /// Second root as `RE,IM` (or `RE`).
        #[arg(long, value_parser = parse_complex, requires = "a", allow_hyphen_values = true)]
        b: Option<C64>,
    },
    /// Seeded random sweep over every invariant of a suite.
    Verify {
        /// all, core, decomp, supp or quad.
        #[arg(long, default_value = "all")]
        suite: String,
        /// Base seed.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Trials per suite.
        #[arg(long, default_value_t = 50)]
        trials: usize,
        /// Inclusive dimension range `LO..HI` (or a single size).
        #[arg(long, default_value = "2..8", value_parser = parse_dims)]
        dims: RangeInclusive<usize>,
    },
}

/// Parses `RE,IM` or `RE`.
pub fn parse_complex(s: &str) -> Result<C64, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |x: &str| x.parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
    let z = match parts.as_slice() {
        [re] => C64::new(num(re)?, 0.0),
        [re, im] => C64::new(num(re)?, num(im)?),
        _ => return Err(format!("expected RE,IM, got {s:?}")),
    };
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err("root must be finite".into())
    }
}

/// Parses `LO..HI` (inclusive), `LO..=HI` or `N`.
pub fn parse_dims(s: &str) -> Result<RangeInclusive<usize>, String> {
    let num = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("{x:?}: {e}"));
    let (lo, hi) = match s.split_once("..") {
        Some((lo, hi)) => (num(lo)?, num(hi.strip_prefix('=').unwrap_or(hi))?),
        None => {
            let n = num(s)?;
            (n, n)
        }
    };
    if lo == 0 || lo > hi {
        return Err(format!("bad dimension range {s:?}"));
    }
    Ok(lo..=hi)
}

impl Cli {
    /// Tolerances from flags or environment, over the defaults.
    pub fn tolerances(&self) -> Result<Tolerances, CliError> {
        let d = Tolerances::default();
        Tolerances {
            eq_tol: self.eq_tol.unwrap_or(d.eq_tol),
            rank_rel_tol: self.rank_tol.unwrap_or(d.rank_rel_tol),
            spec_tol: self.spec_tol.unwrap_or(d.spec_tol),
        }
        .validated()
        .map_err(|e| CliError::Usage(e.to_string()))
    }
}

fn load(p: &Path) -> Result<matrix_file::LoadedMatrix, CliError> {
    matrix_file::load(p)
}

/// Executes a parsed command line.
pub fn execute(cli: &Cli) -> Result<Report, CliError> {
    let tol = cli.tolerances()?;
    match &cli.command {
        Command::Analyze { q } => commands::analyze(&load(q)?, &tol),
        Command::Decompose { mode, files } => {
            let q = load(files.last().expect("clap requires a file"))?;
            let p = match (mode, files.len()) {
                (Mode::Matched4, _) => None,
                (_, 2) => Some(load(&files[0])?),
                _ => {
                    return Err(CliError::Usage(
                        "modes 2x2 and 6x6 need P.json and Q.json".into(),
                    ))
                }
            };
            commands::decompose(p.as_ref(), &q, *mode, &tol)
        }
        Command::Reconstruct { m, s } => commands::reconstruct(&load(m)?, &load(s)?, &tol),
        Command::Quadratic { t, a, b } => {
            let roots = a.zip(*b);
            commands::quadratic(&load(t)?, roots, &tol)
        }
        Command::Verify {
            suite,
            seed,
            trials,
            dims,
        } => commands::verify(suite, *seed, *trials, dims.clone(), &tol),
    }
}

/// Writes the report's matrices to `dir` as `<name>.json`.
pub fn emit(report: &Report, dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Usage(format!("{}: {e}", dir.display())))?;
    for m in &report.outputs {
        let name = m.name.as_deref().unwrap_or("output");
        m.write(&dir.join(format!("{name}.json")))?;
    }
    Ok(())
}

/// Runs the tool on already-parsed arguments, printing to stdout/stderr, and
/// returns the exit code.
pub fn run(cli: &Cli) -> i32 {
    let report = match execute(cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("qpp: {e}");
            return EXIT_USAGE;
        }
    };
    if let Some(dir) = &cli.emit_dir {
        if let Err(e) = emit(&report, dir) {
            eprintln!("qpp: {e}");
            return EXIT_USAGE;
        }
    }
    if cli.json {
        print!("{}", report.to_json());
    } else {
        print!("{}", report.to_text());
    }
    if report.passed() {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_roots_and_ranges() {
        assert_eq!(parse_complex("1.5,-2").unwrap(), C64::new(1.5, -2.0));
        assert_eq!(parse_complex("3").unwrap(), C64::new(3.0, 0.0));
        assert!(parse_complex("1,2,3").is_err());
        assert_eq!(parse_dims("2..8").unwrap(), 2..=8);
        assert_eq!(parse_dims("2..=8").unwrap(), 2..=8);
        assert_eq!(parse_dims("5").unwrap(), 5..=5);
        assert!(parse_dims("8..2").is_err());
        assert!(parse_dims("0..2").is_err());
    }

    #[test]
    fn flags_parse() {
        let cli =
            Cli::try_parse_from(["qpp", "--eq-tol", "1e-7", "verify", "--trials", "3"]).unwrap();
        assert_eq!(cli.tolerances().unwrap().eq_tol, 1e-7);
        assert!(Cli::try_parse_from(["qpp", "quadratic", "t.json", "--a", "1"]).is_err());
        let cli =
            Cli::try_parse_from(["qpp", "quadratic", "t.json", "--a", "-1,2", "--b", "0"]).unwrap();
        assert!(matches!(cli.command, Command::Quadratic { a: Some(_), .. }));
    }
}

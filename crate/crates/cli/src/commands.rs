//! One function per subcommand. Each returns a [`Report`]; mathematical
//! failures are recorded in it, usage problems are returned as errors.

use std::ops::RangeInclusive;
use std::time::Instant;

use qpp_core::decomp::{self, canonical_2x2, halmos_6x6, matched_4x4, unitarity_criteria};
use qpp_core::idempotent::{
    abs_qstar_pinv, idempotent_residual, is_idempotent, is_projection, matched_norms,
    matched_projection, matched_via_block, null_projection, range_projection,
};
use qpp_core::numkit::{self, operator_norm};
use qpp_core::quadop::{detect_quadratic, quadratic_canonical};
use qpp_core::supp::{reconstruct_idempotent, supplementary_projection, supplementary_via_formula};
use qpp_core::{CMatrix, Check, QppError, Tolerances, C64};
use serde_json::json;

use crate::matrix_file::LoadedMatrix;
use crate::report::Report;
use crate::suites::{self, Suite};
use crate::CliError;

/// Decomposition flavour for `decompose`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    /// Canonical 2×2 form over `R(P) ⊕ N(P)`.
    #[value(name = "2x2")]
    TwoByTwo,
    /// Six-space decomposition.
    #[value(name = "6x6")]
    SixBySix,
    /// Matched-pair 4×4 form of `(m(Q), Q)`.
    #[value(name = "matched4")]
    Matched4,
}

fn dist(a: &CMatrix, b: &CMatrix) -> f64 {
    operator_norm(&(a - b))
}

fn idempotent_gate(r: &mut Report, q: &CMatrix, tol: &Tolerances) -> Result<(), QppError> {
    if !q.is_square() {
        return Err(QppError::ShapeMismatch {
            op: "idempotent",
            found: q.shape(),
        });
    }
    let nq = operator_norm(q);
    let res = idempotent_residual(q);
    if !is_idempotent(q, tol) {
        return Err(QppError::NotIdempotent { residual: res });
    }
    r.check(Check::at_most(
        "idempotent",
        res,
        tol.eq_tol * (1.0 + nq * nq),
    ));
    Ok(())
}

// Shape problems are usage errors; everything else lands in the report.
fn settle(mut r: Report, outcome: Result<(), QppError>) -> Result<Report, CliError> {
    match outcome {
        Ok(()) => Ok(r),
        Err(e @ (QppError::ShapeMismatch { .. } | QppError::NonFinite | QppError::BadSpec(_))) => {
            Err(CliError::Usage(e.to_string()))
        }
        Err(e) => {
            r.error(&e);
            Ok(r)
        }
    }
}

/// `qpp analyze Q.json`.
pub fn analyze(q_in: &LoadedMatrix, tol: &Tolerances) -> Result<Report, CliError> {
    let mut r = Report::new("analyze", &[q_in], tol);
    let q = &q_in.matrix;
    let outcome = (|| {
        idempotent_gate(&mut r, q, tol)?;
        let projection = is_projection(q, tol);
        r.value("norm", operator_norm(q));
        r.value("is_projection", projection);
        let pr = range_projection(q, tol)?;
        let pn = null_projection(q, tol)?;
        let m = matched_projection(q, tol)?;
        let s = supplementary_projection(q, tol)?;
        let pinv = abs_qstar_pinv(q, tol)?;
        r.output("range_projection", &pr);
        r.output("null_projection", &pn);
        r.output("matched_projection", &m);
        r.output("supplementary_projection", &s);
        r.output("abs_qstar_pinv", &pinv);
        r.check(Check::at_most(
            "matched_is_projection",
            numkit::projection_residual(&m),
            1e-8,
        ));
        r.check(Check::at_most(
            "supplementary_is_projection",
            numkit::projection_residual(&s),
            1e-8,
        ));
        r.check(Check::at_most(
            "matched_via_block",
            dist(&matched_via_block(q, tol)?, &m),
            1e-8,
        ));
        r.check(Check::at_most(
            "supplementary_via_formula",
            dist(&supplementary_via_formula(q, &m, tol)?, &s),
            1e-8,
        ));
        r.check(Check::at_most(
            "reconstruct",
            dist(&reconstruct_idempotent(&m, &s, tol)?, q),
            1e-8,
        ));
        if !projection {
            let norms = matched_norms(q, tol)?;
            r.value("norm_m_minus_q", norms.norm_pq_diff);
            r.value("norm_m_minus_q_squared", norms.norm_sq_diff);
            r.value("shared_norm", norms.norm_t1);
            r.value("coupling_norm", norms.coupling_norm);
            r.extend_checks(&norms.checks);
        }
        Ok(())
    })();
    settle(r, outcome)
}

/// `qpp decompose --mode … [P.json] Q.json`.
pub fn decompose(
    p_in: Option<&LoadedMatrix>,
    q_in: &LoadedMatrix,
    mode: Mode,
    tol: &Tolerances,
) -> Result<Report, CliError> {
    let inputs: Vec<&LoadedMatrix> = p_in.into_iter().chain([q_in]).collect();
    let mut r = Report::new("decompose", &inputs, tol);
    let q = &q_in.matrix;
    let p = match (mode, p_in) {
        (Mode::Matched4, _) => None,
        (_, Some(p)) => Some(&p.matrix),
        (_, None) => return Err(CliError::Usage("modes 2x2 and 6x6 need P and Q".into())),
    };
    if let Some(p) = p {
        if p.shape() != q.shape() || !q.is_square() {
            return Err(CliError::Usage(format!(
                "P is {}x{} but Q is {}x{}",
                p.rows(),
                p.cols(),
                q.rows(),
                q.cols()
            )));
        }
    }
    let scale = 1.0 + operator_norm(q);
    r.value(
        "mode",
        match mode {
            Mode::TwoByTwo => "2x2",
            Mode::SixBySix => "6x6",
            Mode::Matched4 => "matched4",
        },
    );
    let outcome = (|| {
        match (mode, p) {
            (Mode::TwoByTwo, Some(p)) => {
                let c = canonical_2x2(p, q, tol)?;
                r.output("a", &c.a);
                r.output("u", &c.u);
                r.output("q0", &c.q0);
                r.output("range_basis", &c.range_p.basis);
                r.output("null_basis", &c.null_p.basis);
                r.value("dims", json!([c.range_p.dim(), c.null_p.dim()]));
                let u = unitarity_criteria(&c, tol);
                r.value("u_unitary", u.u_unitary);
                r.extend_checks(&c.checks(tol)?);
                r.check(Check::holds("unitarity_criteria_agree", u.all_equal()));
                r.check(Check::at_most(
                    "round_trip",
                    dist(&decomp::assemble_canonical(&c, tol)?, q),
                    1e-9 * scale,
                ));
            }
            (Mode::SixBySix, Some(p)) => {
                let six = halmos_6x6(p, q, tol)?;
                r.value("dims", json!(six.dims()));
                r.output("a", &six.a);
                r.output("u", &six.u);
                r.output("frame", &six.frame());
                r.extend_checks(&six.checks(p, q, tol)?);
            }
            _ => {
                idempotent_gate(&mut r, q, tol)?;
                let six = matched_4x4(q, tol)?;
                let m = matched_projection(q, tol)?;
                let (s_block, s) = decomp::supplementary_4x4(q, tol)?;
                let (pr, pn) = decomp::matched_range_null_4x4(q, tol)?;
                r.value("dims", json!(six.dims()));
                r.output("a", &six.a);
                r.output("u", &six.u);
                r.output("s", &s_block);
                r.output("frame", &six.frame());
                r.extend_checks(&six.checks(&m, q, tol)?);
                r.check(Check::at_most(
                    "range_4x4",
                    dist(&pr, &range_projection(q, tol)?),
                    1e-8,
                ));
                r.check(Check::at_most(
                    "null_4x4",
                    dist(&pn, &null_projection(q, tol)?),
                    1e-8,
                ));
                r.check(Check::at_most(
                    "supplementary_4x4",
                    dist(&s, &supplementary_projection(q, tol)?),
                    1e-8,
                ));
            }
        }
        Ok(())
    })();
    settle(r, outcome)
}

/// `qpp reconstruct mQ.json sQ.json`.
pub fn reconstruct(
    m_in: &LoadedMatrix,
    s_in: &LoadedMatrix,
    tol: &Tolerances,
) -> Result<Report, CliError> {
    let mut r = Report::new("reconstruct", &[m_in, s_in], tol);
    let (m, s) = (&m_in.matrix, &s_in.matrix);
    if m.shape() != s.shape() || !m.is_square() {
        return Err(CliError::Usage(
            "mQ and sQ must be square and of equal size".into(),
        ));
    }
    let outcome = (|| {
        let q = reconstruct_idempotent(m, s, tol)?;
        r.output("q", &q);
        let nq = operator_norm(&q);
        r.check(Check::at_most(
            "idempotent",
            idempotent_residual(&q),
            tol.eq_tol * (1.0 + nq * nq),
        ));
        r.check(Check::at_most(
            "matched_round_trip",
            dist(&matched_projection(&q, tol)?, m),
            1e-8,
        ));
        r.check(Check::at_most(
            "supplementary_round_trip",
            dist(&supplementary_projection(&q, tol)?, s),
            1e-8,
        ));
        Ok(())
    })();
    settle(r, outcome)
}

fn complex_json(z: C64) -> serde_json::Value {
    json!([z.re, z.im])
}

/// `qpp quadratic T.json [--a re,im --b re,im]`.
pub fn quadratic(
    t_in: &LoadedMatrix,
    roots: Option<(C64, C64)>,
    tol: &Tolerances,
) -> Result<Report, CliError> {
    let mut r = Report::new("quadratic", &[t_in], tol);
    let t = &t_in.matrix;
    if !t.is_square() {
        return Err(CliError::Usage("T must be square".into()));
    }
    let outcome = (|| {
        let (a, b) = match roots {
            Some(ab) => ab,
            None => detect_quadratic(t, tol)?,
        };
        r.value("roots_detected", roots.is_none());
        let form = quadratic_canonical(t, a, b, tol)?;
        r.value("a", complex_json(form.a));
        r.value("b", complex_json(form.b));
        r.value("dims", json!([form.dims.0, form.dims.1, form.dims.2]));
        r.output("w", &form.w);
        r.output("b_block", &form.b_block);
        r.output("canonical", &form.canonical_matrix());
        r.check(Check::at_most(
            "w_unitary",
            form.unitarity_residual(),
            1e-10,
        ));
        r.check(Check::at_most(
            "reassembly",
            form.residual(t),
            1e-9 * (1.0 + operator_norm(t)),
        ));
        if form.dims.2 > 0 {
            let low = numkit::hermitian_eig(&form.b_block, tol)?.values[0];
            r.check(Check::above("b_positive", low, 0.0));
        }
        Ok(())
    })();
    settle(r, outcome)
}

/// `qpp verify --suite … --seed … --trials … --dims LO..HI`.
pub fn verify(
    suite: &str,
    seed: u64,
    trials: usize,
    dims: RangeInclusive<usize>,
    tol: &Tolerances,
) -> Result<Report, CliError> {
    let suites =
        Suite::parse(suite).ok_or_else(|| CliError::Usage(format!("unknown suite {suite:?}")))?;
    if trials == 0 {
        return Err(CliError::Usage(
            QppError::BadSpec("trials must be at least 1").to_string(),
        ));
    }
    if dims.is_empty() || *dims.start() == 0 {
        return Err(CliError::Usage(
            QppError::BadSpec("dims must be a non-empty range of positive sizes").to_string(),
        ));
    }
    let started = Instant::now();
    let sweep = suites::sweep(&suites, seed, trials, &dims, tol);
    let mut r = Report::new("verify", &[], tol);
    r.value("suite", suite);
    r.value("seed", seed);
    r.value("trials", trials);
    r.value("dims", json!([dims.start(), dims.end()]));
    r.value("failures", sweep.failures);
    r.checks = sweep.rows;
    // Recompute the verdict through the public path.
    r.extend_checks(&[]);
    eprintln!(
        "verify: {} checks in {:.2?}",
        r.checks.len(),
        started.elapsed()
    );
    Ok(r)
}

//! The supplementary projection `s(Q) = m(2P_R(Q) − Q)` and the
//! reconstruction of an idempotent from `(m(Q), s(Q))`.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::check::Check;
use crate::error::{QppError, Result};
use crate::gen;
use crate::idempotent::{self, abs_qstar, abs_qstar_pinv, matched_projection, range_projection};
use crate::matrix::{CMatrix, C64};
use crate::numkit::{self, operator_norm, Tolerances};

const ONE: C64 = C64::new(1.0, 0.0);
const COVARIANCE_SEED: u64 = 0x5eed_c0de;

/// Partial isometry data linking `P_R(Q)` and `s(Q)`:
/// `s(Q) = TT^† = VVᴴ` and `P_R(Q) = T^†T = VᴴV`.
#[derive(Clone, Debug, PartialEq)]
pub struct MvnWitnesses {
    /// `|Q*| + 2P_R(Q) − Qᴴ`.
    pub t: CMatrix,
    /// `(√2/2)·T·(|Q*|^†)^{1/2}(|Q*| + I)^{-1/2}`, a partial isometry.
    pub v: CMatrix,
}

fn require_idempotent(q: &CMatrix, tol: &Tolerances) -> Result<()> {
    if !q.is_square() {
        return Err(QppError::ShapeMismatch {
            op: "supp",
            found: q.shape(),
        });
    }
    if !q.is_finite() {
        return Err(QppError::NonFinite);
    }
    if !idempotent::is_idempotent(q, tol) {
        return Err(QppError::NotIdempotent {
            residual: idempotent::idempotent_residual(q),
        });
    }
    Ok(())
}

/// `s(Q) = m(2P_R(Q) − Q)`.
pub fn supplementary_projection(q: &CMatrix, tol: &Tolerances) -> Result<CMatrix> {
    require_idempotent(q, tol)?;
    let pr = range_projection(q, tol)?;
    matched_projection(&(&pr.scale_real(2.0) - q), tol)
}

/// `s(Q) = m(Q) + (I − Qᴴ)|Q*|^† + |Q*|^†(I − Q)`, checked against
/// [`supplementary_projection`].
pub fn supplementary_via_formula(q: &CMatrix, m: &CMatrix, tol: &Tolerances) -> Result<CMatrix> {
    require_idempotent(q, tol)?;
    if m.shape() != q.shape() {
        return Err(QppError::ShapeMismatch {
            op: "supplementary_via_formula",
            found: m.shape(),
        });
    }
    let pinv = abs_qstar_pinv(q, tol)?;
    let s = &(m + &(&q.adjoint().complement() * &pinv)) + &(&pinv * &q.complement());
    let s = s.hermitian_part();
    let residual = operator_norm(&(&s - &supplementary_projection(q, tol)?));
    if residual > 10.0 * tol.eq_tol {
        return Err(QppError::CrossCheckFailure {
            what: "supplementary projection",
            residual,
        });
    }
    Ok(s)
}

/// The witnesses `T` and `V` for the equivalence of `P_R(Q)` and `s(Q)`.
pub fn mvn_witnesses(q: &CMatrix, tol: &Tolerances) -> Result<MvnWitnesses> {
    require_idempotent(q, tol)?;
    let abs = abs_qstar(q);
    let pr = range_projection(q, tol)?;
    let t = &(&abs + &pr.scale_real(2.0)) - &q.adjoint();
    let pinv = abs_qstar_pinv(q, tol)?;
    let root_pinv = numkit::psd_sqrt_truncated(&pinv, 1.0, tol)?;
    let damp = numkit::hermitian_map(&abs, tol, |x| 1.0 / (1.0 + x.max(0.0)).sqrt())?;
    let v = CMatrix::product(&[&t, &root_pinv, &damp]).scale_real(core::f64::consts::FRAC_1_SQRT_2);
    Ok(MvnWitnesses { t, v })
}

impl MvnWitnesses {
    /// `T^†`; the non-zero singular values of `T` are at least 2, so
    /// the rank cutoff is anchored at `1 + ‖T‖`.
    pub fn t_pinv(&self, tol: &Tolerances) -> CMatrix {
        numkit::moore_penrose_floor(&self.t, 1.0 + operator_norm(&self.t), tol)
    }

    /// Checks the witness identities against `Q`.
    pub fn verify(&self, q: &CMatrix, tol: &Tolerances) -> Result<Vec<Check>> {
        let s = supplementary_projection(q, tol)?;
        let pr = range_projection(q, tol)?;
        let abs = abs_qstar(q);
        let tp = self.t_pinv(tol);
        let vh = self.v.adjoint();
        let d = |x: &CMatrix, y: &CMatrix| operator_norm(&(x - y));
        let gram = (&abs.shift(ONE) * &abs).scale_real(2.0);
        let scale = 1.0 + operator_norm(&gram);
        Ok(alloc::vec![
            Check::at_most("mvn_s_t", d(&s, &(&self.t * &tp)), tol.eq_tol),
            Check::at_most("mvn_s_v", d(&s, &(&self.v * &vh)), tol.eq_tol),
            Check::at_most("mvn_range_t", d(&pr, &(&tp * &self.t)), tol.eq_tol),
            Check::at_most("mvn_range_v", d(&pr, &(&vh * &self.v)), tol.eq_tol),
            Check::at_most(
                "mvn_gram",
                d(&(&self.t.adjoint() * &self.t), &gram),
                tol.eq_tol * scale
            ),
        ])
    }
}

/// `Q = ½C⁻¹[(C^{1/2} + s)(2m − I) + I − m]` with `C = (I − m − s)²`.
pub fn reconstruct_idempotent(m: &CMatrix, s: &CMatrix, tol: &Tolerances) -> Result<CMatrix> {
    if m.shape() != s.shape() || !m.is_square() {
        return Err(QppError::ShapeMismatch {
            op: "reconstruct_idempotent",
            found: s.shape(),
        });
    }
    for x in [m, s] {
        if !idempotent::is_projection(x, tol) {
            return Err(QppError::NotProjection {
                residual: numkit::projection_residual(x),
            });
        }
    }
    let x = (m + s).complement();
    let c = (&x * &x).hermitian_part();
    let root = numkit::psd_sqrt(&c, tol)?;
    let c_inv = numkit::inverse(&c, "(I - m - s)^2", tol)?;
    let inner = &(&(&root + s) * &m.reflection()) + &m.complement();
    Ok((&c_inv * &inner).scale_real(0.5))
}

fn quiet<T>(name: &str, r: Result<T>, out: &mut Vec<Check>) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(e) => {
            out.push(Check::holds(format!("{name}:{}", e.kind()), false));
            None
        }
    }
}

/// Property checks of `s(Q)` using a fixed internal unitary for covariance.
pub fn supplementary_properties(q: &CMatrix, tol: &Tolerances) -> Vec<Check> {
    let u = gen::random_unitary_from_seed(q.rows(), COVARIANCE_SEED);
    supplementary_properties_with(q, &u, tol)
}

/// Property checks of `s(Q)`:
/// (a) `s(2P_R − Q) = m(Q)` and `m(2P_R − Q) = s(Q)`,
/// (b) `‖s(Q) − m(Q)‖ ≤ ‖P_R − Q‖`,
/// (c) `s(I − Q) = I − s(Qᴴ)`,
/// (d) `s(UQUᴴ) = U s(Q) Uᴴ`,
/// (e) `s(Q) ≠ s(Qᴴ)` and `(s(Q), Q)` not a quasi-projection pair unless `Q`
/// is a projection.
///
/// Failures to compute are reported as failing checks.
pub fn supplementary_properties_with(q: &CMatrix, u: &CMatrix, tol: &Tolerances) -> Vec<Check> {
    let mut out = Vec::new();
    if quiet("idempotent", require_idempotent(q, tol), &mut out).is_none() {
        return out;
    }
    let d = |x: &CMatrix, y: &CMatrix| operator_norm(&(x - y));
    let eq = tol.eq_tol;
    let base = (|| -> Result<_> {
        let pr = range_projection(q, tol)?;
        let m = matched_projection(q, tol)?;
        let s = supplementary_projection(q, tol)?;
        Ok((pr, m, s))
    })();
    let Some((pr, m, s)) = quiet("base", base, &mut out) else {
        return out;
    };
    let swapped = &pr.scale_real(2.0) - q;
    if let Some(x) = quiet("swap_s", supplementary_projection(&swapped, tol), &mut out) {
        out.push(Check::at_most("swap_s_is_m", d(&x, &m), eq));
    }
    if let Some(x) = quiet("swap_m", matched_projection(&swapped, tol), &mut out) {
        out.push(Check::at_most("swap_m_is_s", d(&x, &s), eq));
    }
    out.push(Check::at_most("s_m_distance", d(&s, &m), d(&pr, q) + eq));
    let s_adj = quiet(
        "s_adjoint",
        supplementary_projection(&q.adjoint(), tol),
        &mut out,
    );
    if let (Some(sc), Some(sa)) = (
        quiet(
            "s_complement",
            supplementary_projection(&q.complement(), tol),
            &mut out,
        ),
        s_adj.as_ref(),
    ) {
        out.push(Check::at_most(
            "complement_rule",
            d(&sc, &sa.complement()),
            eq,
        ));
    }
    let moved = CMatrix::product(&[u, q, &u.adjoint()]);
    if let Some(x) = quiet(
        "covariance",
        supplementary_projection(&moved, tol),
        &mut out,
    ) {
        out.push(Check::at_most(
            "unitary_covariance",
            d(&x, &CMatrix::product(&[u, &s, &u.adjoint()])),
            eq,
        ));
    }
    let projection = idempotent::is_projection(q, tol);
    if let Some(sa) = s_adj {
        let gap = d(&s, &sa);
        out.push(if projection {
            Check::at_most("adjoint_split", gap, eq)
        } else {
            Check::above("adjoint_split", gap, tol.spec_tol)
        });
    }
    let pair = idempotent::quasi_pair_residual(&s, q);
    out.push(if projection {
        Check::at_most("s_pair_quasi", pair, eq)
    } else {
        Check::above("s_pair_quasi", pair, tol.spec_tol)
    });
    out
}

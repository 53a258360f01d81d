//! Idempotents, their range/null/matched projections and the norm identities
//! of quasi-projection pairs.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::check::{all_pass, Check};
use crate::error::{QppError, Result};
use crate::matrix::{CMatrix, C64};
use crate::numkit::{self, operator_norm, FnKind, Tolerances};

/// A projection `p` and an idempotent `q` with `qᴴ = (2p − I)q(2p − I)`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuasiPair {
    /// Orthogonal projection.
    pub p: CMatrix,
    /// Idempotent.
    pub q: CMatrix,
    /// Ambient dimension.
    pub dim: usize,
}

impl QuasiPair {
    /// Validates and wraps a pair.
    pub fn new(p: CMatrix, q: CMatrix, tol: &Tolerances) -> Result<Self> {
        let r = quasi_pair_check(&p, &q, tol)?;
        if r > quasi_scale(&q) * tol.eq_tol {
            return Err(QppError::NotQuasiPair { residual: r });
        }
        let dim = p.rows();
        Ok(QuasiPair { p, q, dim })
    }
}

/// `P(I−Q)`, `(I−P)Q`, `PQ(I−P)`, `(I−P)QP`.
#[derive(Clone, Debug, PartialEq)]
pub struct DefectOperators {
    /// `P(I − Q)`.
    pub t1: CMatrix,
    /// `(I − P)Q`.
    pub t2: CMatrix,
    /// `PQ(I − P)`.
    pub t3: CMatrix,
    /// `(I − P)QP`.
    pub t4: CMatrix,
}

/// Norms gathered by [`kkm_suite`] and [`matched_norms`].
#[derive(Clone, Debug, PartialEq)]
pub struct NormReport {
    /// `‖P − Q‖`.
    pub norm_pq_diff: f64,
    /// `‖(P − Q)²‖`.
    pub norm_sq_diff: f64,
    /// `‖P(I − Q)‖`, equal to `‖(I − Q)P‖`.
    pub norm_t1: f64,
    /// `‖(I − P)Q‖`, equal to `‖Q(I − P)‖`.
    pub norm_t2: f64,
    /// Every check passed.
    pub kkm_holds: bool,
    /// `‖(A − I)² + ℓ²(A)‖^{1/2}` for the coupling block `A` of the six-space
    /// decomposition, when that block is non-empty.
    pub coupling_norm: Option<f64>,
    /// Individual checks.
    pub checks: Vec<Check>,
}

fn square(q: &CMatrix, op: &'static str) -> Result<()> {
    if !q.is_square() {
        return Err(QppError::ShapeMismatch {
            op,
            found: q.shape(),
        });
    }
    if !q.is_finite() {
        return Err(QppError::NonFinite);
    }
    Ok(())
}

fn same_shape(p: &CMatrix, q: &CMatrix, op: &'static str) -> Result<()> {
    square(p, op)?;
    square(q, op)?;
    if p.shape() != q.shape() {
        return Err(QppError::ShapeMismatch {
            op,
            found: q.shape(),
        });
    }
    Ok(())
}

fn quasi_scale(q: &CMatrix) -> f64 {
    1.0 + operator_norm(q)
}

/// `‖Q² − Q‖`.
pub fn idempotent_residual(q: &CMatrix) -> f64 {
    operator_norm(&(&(q * q) - q))
}

/// `‖Q² − Q‖ ≤ eq_tol·(1 + ‖Q‖²)`.
pub fn is_idempotent(q: &CMatrix, tol: &Tolerances) -> bool {
    if !q.is_square() || !q.is_finite() {
        return false;
    }
    let n = operator_norm(q);
    idempotent_residual(q) <= tol.eq_tol * (1.0 + n * n)
}

/// Idempotent and `‖Q − Qᴴ‖ ≤ eq_tol·(1 + ‖Q‖)`.
pub fn is_projection(q: &CMatrix, tol: &Tolerances) -> bool {
    is_idempotent(q, tol) && operator_norm(&(q - &q.adjoint())) <= tol.eq_tol * quasi_scale(q)
}

/// `‖Qᴴ − (2P − I)Q(2P − I)‖`.
pub fn quasi_pair_residual(p: &CMatrix, q: &CMatrix) -> f64 {
    let r = p.reflection();
    operator_norm(&(&q.adjoint() - &CMatrix::product(&[&r, q, &r])))
}

fn quasi_pair_check(p: &CMatrix, q: &CMatrix, tol: &Tolerances) -> Result<f64> {
    same_shape(p, q, "is_quasi_pair")?;
    if !is_projection(p, tol) {
        return Err(QppError::NotProjection {
            residual: numkit::projection_residual(p),
        });
    }
    if !is_idempotent(q, tol) {
        return Err(QppError::NotIdempotent {
            residual: idempotent_residual(q),
        });
    }
    Ok(quasi_pair_residual(p, q))
}

/// Whether `(P, Q)` satisfies `Qᴴ = (2P − I)Q(2P − I)` within
/// `eq_tol·(1 + ‖Q‖)`.
pub fn is_quasi_pair(p: &CMatrix, q: &CMatrix, tol: &Tolerances) -> Result<bool> {
    let r = quasi_pair_check(p, q, tol)?;
    Ok(r <= tol.eq_tol * quasi_scale(q))
}

fn koliha_inverse(q: &CMatrix, tol: &Tolerances) -> Result<CMatrix> {
    let x = (q + &q.adjoint()).shift(C64::new(-1.0, 0.0));
    numkit::inverse(&x, "Q + Q* - I", tol)
}

/// Orthogonal projection onto `R(Q)`, as `Q(Q + Qᴴ − I)⁻¹`.
///
/// ```
/// # use qpp_core::{CMatrix, Tolerances};
/// # use qpp_core::idempotent::range_projection;
/// let q = CMatrix::real(&[[1.0, 1.0], [0.0, 0.0]]);
/// let pr = range_projection(&q, &Tolerances::default()).unwrap();
/// assert!((&pr - &CMatrix::diag_real(&[1.0, 0.0])).max_abs() < 1e-12);
/// ```
pub fn range_projection(q: &CMatrix, tol: &Tolerances) -> Result<CMatrix> {
    square(q, "range_projection")?;
    Ok((q * &koliha_inverse(q, tol)?).hermitian_part())
}

/// Orthogonal projection onto `N(Q)`, as `(Q − I)(Q + Qᴴ − I)⁻¹`.
pub fn null_projection(q: &CMatrix, tol: &Tolerances) -> Result<CMatrix> {
    square(q, "null_projection")?;
    let qi = q.shift(C64::new(-1.0, 0.0));
    Ok((&qi * &koliha_inverse(q, tol)?).hermitian_part())
}

/// `|Q*| = (QQᴴ)^{1/2}`, read off the left singular vectors of `Q`.
pub fn abs_qstar(q: &CMatrix) -> CMatrix {
    let d = numkit::svd(q);
    let mut us = d.u.clone();
    for j in 0..us.cols() {
        let s = d.sigma.get(j).copied().unwrap_or(0.0);
        for i in 0..us.rows() {
            us[(i, j)] *= s;
        }
    }
    (&us * &d.u.adjoint()).hermitian_part()
}

/// `|Q*|^†` computed twice: by SVD and as `(P_R(Q)·P_R(Q*)·P_R(Q))^{1/2}`.
/// The routes must agree within `10·eq_tol`.
pub fn abs_qstar_pinv(q: &CMatrix, tol: &Tolerances) -> Result<CMatrix> {
    square(q, "abs_qstar_pinv")?;
    let via_svd = numkit::moore_penrose(&abs_qstar(q), tol);
    let pr = range_projection(q, tol)?;
    let prs = range_projection(&q.adjoint(), tol)?;
    // Non-zero eigenvalues of the product are 1/σ² ≥ 1/‖Q‖², far above roundoff.
    let closed = numkit::psd_sqrt_truncated(
        &CMatrix::product(&[&pr, &prs, &pr]).hermitian_part(),
        1.0,
        tol,
    )?;
    let residual = operator_norm(&(&via_svd - &closed));
    if residual > 10.0 * tol.eq_tol {
        return Err(QppError::CrossCheckFailure {
            what: "pseudo-inverse of |Q*|",
            residual,
        });
    }
    Ok(via_svd)
}

/// `|Q*| = Q(2m(Q) − I)` and `|Q*|^† = |Q*|(Q + Qᴴ − I)⁻²`.
pub fn abs_qstar_via_matched(
    q: &CMatrix,
    m: &CMatrix,
    tol: &Tolerances,
) -> Result<(CMatrix, CMatrix)> {
    same_shape(q, m, "abs_qstar_via_matched")?;
    let abs = (q * &m.reflection()).hermitian_part();
    let k = koliha_inverse(q, tol)?;
    let pinv = CMatrix::product(&[&abs, &k, &k]).hermitian_part();
    Ok((abs, pinv))
}

/// The matched projection
/// `m(Q) = ½(|Q*| + Qᴴ)|Q*|^†(|Q*| + I)⁻¹(|Q*| + Q)`.
pub fn matched_projection(q: &CMatrix, tol: &Tolerances) -> Result<CMatrix> {
    square(q, "matched_projection")?;
    let abs = abs_qstar(q);
    let pinv = abs_qstar_pinv(q, tol)?;
    let one = C64::new(1.0, 0.0);
    let inv = numkit::inverse(&abs.shift(one), "|Q*| + I", tol)?;
    let left = &abs + &q.adjoint();
    let right = &abs + q;
    Ok(CMatrix::product(&[&left, &pinv, &inv, &right])
        .scale_real(0.5)
        .hermitian_part())
}

/// `m(Q)` via the 2×2 form of `Q` over `R(Q) ⊕ N(Qᴴ)`:
/// with `Q ≅ [[I, C], [0, 0]]` and `B = (CCᴴ + I)^{1/2}`,
/// `m = ½[[(B + I)B⁻¹, B⁻¹C], [CᴴB⁻¹, Cᴴ(B(B + I))⁻¹C]]`.
pub fn matched_via_block(q: &CMatrix, tol: &Tolerances) -> Result<CMatrix> {
    square(q, "matched_via_block")?;
    let n = q.rows();
    let nq = operator_norm(q);
    if nq <= 1.0 + tol.spec_tol {
        return Ok(q.clone());
    }
    let range = numkit::range_basis(q, tol);
    let null_adj = numkit::range_basis(&q.adjoint().complement(), tol);
    let (k, s) = (range.dim(), null_adj.dim());
    if k + s != n {
        return Err(QppError::DegenerateSplit {
            range_dim: k,
            null_dim: s,
        });
    }
    let c = CMatrix::product(&[&range.basis.adjoint(), q, &null_adj.basis]);
    let one = C64::new(1.0, 0.0);
    let b = numkit::psd_sqrt(&(&c * &c.adjoint()).shift(one), tol)?;
    let b_inv = numkit::inverse(&b, "(CC* + I)^(1/2)", tol)?;
    let bb_inv = numkit::inverse(&(&b * &b.shift(one)), "B(B + I)", tol)?;
    let top_left = &b.shift(one) * &b_inv;
    let top_right = &b_inv * &c;
    let bottom_left = &c.adjoint() * &b_inv;
    let bottom_right = CMatrix::product(&[&c.adjoint(), &bb_inv, &c]);
    let local =
        CMatrix::from_blocks(&top_left, &top_right, &bottom_left, &bottom_right).scale_real(0.5);
    let e = CMatrix::hstack(n, &[&range.basis, &null_adj.basis]);
    Ok(CMatrix::product(&[&e, &local, &e.adjoint()]).hermitian_part())
}

/// The idempotent with range `R(P_R)` and null space `R(P_N)`:
/// `(I − P_R·P_N)⁻¹·P_R·(I − P_R·P_N)`.
pub fn afriat_reconstruct(
    p_range: &CMatrix,
    p_null: &CMatrix,
    tol: &Tolerances,
) -> Result<CMatrix> {
    same_shape(p_range, p_null, "afriat_reconstruct")?;
    let x = (p_range * p_null).complement();
    let inv = numkit::inverse(&x, "I - P_R P_N", tol)?;
    Ok(CMatrix::product(&[&inv, p_range, &x]))
}

/// `P_R(P_R + λP_N)⁻¹` for `λ ≠ 0`.
pub fn ando_reconstruct(
    p_range: &CMatrix,
    p_null: &CMatrix,
    lambda: C64,
    tol: &Tolerances,
) -> Result<CMatrix> {
    same_shape(p_range, p_null, "ando_reconstruct")?;
    if lambda.norm() == 0.0 || !lambda.re.is_finite() || !lambda.im.is_finite() {
        return Err(QppError::BadSpec("lambda must be finite and non-zero"));
    }
    let inv = numkit::inverse(&(p_range + &p_null.scale(lambda)), "P_R + lambda P_N", tol)?;
    Ok(p_range * &inv)
}

/// The four defect operators of a pair.
pub fn defect_operators(p: &CMatrix, q: &CMatrix) -> Result<DefectOperators> {
    same_shape(p, q, "defect_operators")?;
    let ip = p.complement();
    Ok(DefectOperators {
        t1: p * &q.complement(),
        t2: &ip * q,
        t3: CMatrix::product(&[p, q, &ip]),
        t4: CMatrix::product(&[&ip, q, p]),
    })
}

/// `|‖P − Q‖ − max{‖P(I − Q)‖, ‖(I − P)Q‖}|` for two projections.
pub fn kkm_equality_residual(p: &CMatrix, q: &CMatrix) -> f64 {
    let lhs = operator_norm(&(p - q));
    let a = operator_norm(&(p * &q.complement()));
    let b = operator_norm(&(&p.complement() * q));
    (lhs - a.max(b)).abs()
}

// ‖(A − I)² + ℓ²(A)‖^{1/2}.
pub(crate) fn coupling_norm_of(a: &CMatrix, tol: &Tolerances) -> Result<f64> {
    let ell = numkit::func_calc(a, FnKind::Ell, tol)?;
    let ai = a.shift(C64::new(-1.0, 0.0));
    Ok(operator_norm(&(&(&ai * &ai) + &(&ell * &ell))).sqrt())
}

/// The two-sided KKM inequality and the paired-norm identities for a
/// quasi-projection pair; the exact KKM equality as well when both operators
/// are projections.
pub fn kkm_suite(p: &CMatrix, q: &CMatrix, tol: &Tolerances) -> Result<NormReport> {
    let r = quasi_pair_check(p, q, tol)?;
    let scale = quasi_scale(q);
    if r > tol.eq_tol * scale {
        return Err(QppError::NotQuasiPair { residual: r });
    }
    let ip = p.complement();
    let iq = q.complement();
    let diff = p - q;
    let norm_pq_diff = operator_norm(&diff);
    let norm_sq_diff = operator_norm(&(&diff * &diff));
    let t2 = operator_norm(&(&ip * q));
    let t2_swapped = operator_norm(&(q * &ip));
    let t1 = operator_norm(&(p * &iq));
    let t1_swapped = operator_norm(&(&iq * p));
    let slack = tol.eq_tol * scale;
    let top = t1.max(t2);

    let mut checks = vec![Check::at_most(
        "pair_norm_range",
        (t2 - t2_swapped).abs(),
        slack,
    )];
    checks.push(Check::at_most(
        "pair_norm_null",
        (t1 - t1_swapped).abs(),
        slack,
    ));
    checks.push(Check::at_most("kkm_lower", norm_sq_diff - top, slack));
    checks.push(Check::at_most("kkm_upper", top - norm_pq_diff, slack));
    if is_projection(q, tol) {
        checks.push(Check::at_most(
            "kkm_equality",
            (norm_pq_diff - top).abs(),
            slack,
        ));
    }

    let mut coupling_norm = None;
    if let Ok(six) = crate::decomp::halmos_6x6(p, q, tol) {
        if six.a.rows() > 0 {
            let cn = coupling_norm_of(&six.a, tol)?;
            let ind = |d: usize| if d > 0 { 1.0 } else { 0.0 };
            let expected = ind(six.h[1].dim()).max(ind(six.h[2].dim())).max(cn);
            checks.push(Check::at_most(
                "kkm_max_via_blocks",
                (top - expected).abs(),
                slack,
            ));
            coupling_norm = Some(cn);
        }
    }
    Ok(NormReport {
        norm_pq_diff,
        norm_sq_diff,
        norm_t1: t1,
        norm_t2: t2,
        kkm_holds: all_pass(&checks),
        coupling_norm,
        checks,
    })
}

/// Closed-form norms of the matched pair `(m(Q), Q)` for a non-projection
/// idempotent.
pub fn matched_norms(q: &CMatrix, tol: &Tolerances) -> Result<NormReport> {
    square(q, "matched_norms")?;
    let nq = operator_norm(q);
    if nq <= 1.0 + tol.spec_tol {
        return Err(QppError::IsProjection { norm: nq });
    }
    let m = matched_projection(q, tol)?;
    let im = m.complement();
    let iq = q.complement();
    let mixed = [
        ("shared_norm_1", operator_norm(&(&im * q))),
        ("shared_norm_2", operator_norm(&(q * &im))),
        ("shared_norm_3", operator_norm(&(&iq * &m))),
        ("shared_norm_4", operator_norm(&(&m * &iq))),
    ];
    let shared = core::f64::consts::FRAC_1_SQRT_2 * (nq * (nq - 1.0)).sqrt();
    let diff = &m - q;
    let dist = operator_norm(&diff);
    let sq = operator_norm(&(&diff * &diff));
    let slack = tol.eq_tol * (1.0 + nq);

    let mut checks: Vec<Check> = mixed
        .iter()
        .map(|&(name, x)| Check::at_most(name, (x - shared).abs(), slack))
        .collect();
    checks.push(Check::at_most(
        "square_distance",
        (sq - (nq - 1.0) / 2.0).abs(),
        slack,
    ));
    let closed = 0.5 * (nq - 1.0 + (nq * nq - 1.0).sqrt());
    checks.push(Check::at_most("distance", (dist - closed).abs(), slack));
    let t = mixed[0].1;
    let r2 = core::f64::consts::SQRT_2;
    checks.push(Check::above("strict_chain_1", t - r2 * sq, tol.spec_tol));
    checks.push(Check::above("strict_chain_2", dist - t, tol.spec_tol));
    checks.push(Check::above("strict_chain_3", r2 * t - dist, tol.spec_tol));

    let six = crate::decomp::matched_4x4(q, tol)?;
    let cn = coupling_norm_of(&six.a, tol)?;
    let norm_a = operator_norm(&six.a);
    checks.push(Check::at_most("coupling_norm", (cn - shared).abs(), slack));
    checks.push(Check::at_most(
        "block_norm_bridge",
        (2.0 * norm_a - 1.0 - nq).abs(),
        slack,
    ));
    Ok(NormReport {
        norm_pq_diff: dist,
        norm_sq_diff: sq,
        norm_t1: mixed[3].1,
        norm_t2: t,
        kkm_holds: all_pass(&checks),
        coupling_norm: Some(cn),
        checks,
    })
}

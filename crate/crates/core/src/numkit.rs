//! Dense numerical kernel.
//!
//! Everything here is built on two Jacobi iterations: a cyclic two-sided one
//! for Hermitian eigenproblems and a one-sided (Hestenes) one for the SVD.
//! Both are slow for large `n` but accurate, dependency-free and deterministic,
//! which is what the rest of the crate needs at the sizes it works with.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{QppError, Result};
use crate::matrix::{CMatrix, C64};

const MAX_SWEEPS: usize = 80;

/// Numerical thresholds shared by every routine.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Residual threshold for operator identities.
    pub eq_tol: f64,
    /// Relative singular-value cutoff used to decide numerical rank.
    pub rank_rel_tol: f64,
    /// Margin around the forbidden spectral interval `(0, 1)` and for strict
    /// inequalities.
    pub spec_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            eq_tol: 1e-9,
            rank_rel_tol: 1e-10,
            spec_tol: 1e-8,
        }
    }
}

impl Tolerances {
    /// Returns `self` if every threshold is finite and strictly positive.
    pub fn validated(self) -> Result<Self> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if ok(self.eq_tol) && ok(self.rank_rel_tol) && ok(self.spec_tol) {
            Ok(self)
        } else {
            Err(QppError::BadSpec("tolerances must be finite and positive"))
        }
    }

    /// Singular values at or below this are treated as zero.
    ///
    /// `floor` lets a caller anchor the cutoff to the scale of the operators a
    /// matrix was computed from, so that pure roundoff in a product which is
    /// exactly zero does not count as rank.
    pub fn rank_cutoff(&self, sigma1: f64, floor: f64) -> f64 {
        self.rank_rel_tol * sigma1.max(floor)
    }
}

/// Scalar function applied by [`func_calc`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FnKind {
    /// `1` on `[1, ∞)`, `−1` on `(−∞, 0]`.
    F,
    /// `√|t|`.
    G,
    /// `−f(t)·√|t − 1|`.
    H,
    /// `√(t² − t)`.
    Ell,
}

impl FnKind {
    /// Evaluates the scalar function at a point of `(−∞, 0] ∪ [1, ∞)`.
    pub fn eval(self, t: f64) -> f64 {
        let sign = if t >= 1.0 { 1.0 } else { -1.0 };
        match self {
            FnKind::F => sign,
            FnKind::G => t.abs().sqrt(),
            FnKind::H => -sign * (t - 1.0).abs().sqrt(),
            FnKind::Ell => (t * t - t).max(0.0).sqrt(),
        }
    }
}

/// Orthonormal basis of a subspace of `C^ambient_dim`, stored as columns.
#[derive(Clone, Debug, PartialEq)]
pub struct SubspaceBasis {
    /// Dimension of the ambient space.
    pub ambient_dim: usize,
    /// `ambient_dim × k` isometry.
    pub basis: CMatrix,
}

impl SubspaceBasis {
    /// The zero subspace.
    pub fn empty(ambient_dim: usize) -> Self {
        SubspaceBasis {
            ambient_dim,
            basis: CMatrix::zeros(ambient_dim, 0),
        }
    }

    /// Wraps an isometry.
    pub fn new(basis: CMatrix) -> Self {
        SubspaceBasis {
            ambient_dim: basis.rows(),
            basis,
        }
    }

    /// Dimension of the subspace.
    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    /// Orthogonal projection onto the subspace.
    pub fn projector(&self) -> CMatrix {
        &self.basis * &self.basis.adjoint()
    }

    /// `Bᴴ·M·B`: the compression of `m` in this basis.
    pub fn compress(&self, m: &CMatrix) -> CMatrix {
        CMatrix::product(&[&self.basis.adjoint(), m, &self.basis])
    }

    /// `‖BᴴB − I‖`.
    pub fn orthonormality_residual(&self) -> f64 {
        let g = &self.basis.adjoint() * &self.basis;
        operator_norm(&(&g - &CMatrix::identity(self.dim())))
    }
}

/// Hermitian eigendecomposition `M = V·diag(values)·Vᴴ`.
#[derive(Clone, Debug)]
pub struct Eig {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Unitary matrix of eigenvectors, column `k` belonging to `values[k]`.
    pub vectors: CMatrix,
}

/// Full singular value decomposition `M = U·diag(sigma)·Vᴴ`.
#[derive(Clone, Debug)]
pub struct Svd {
    /// `rows × rows` unitary.
    pub u: CMatrix,
    /// `min(rows, cols)` singular values, descending.
    pub sigma: Vec<f64>,
    /// `cols × cols` unitary.
    pub v: CMatrix,
}

impl Svd {
    /// `U·Σ·Vᴴ`.
    pub fn reconstruct(&self) -> CMatrix {
        let (m, n) = (self.u.rows(), self.v.rows());
        let mut s = CMatrix::zeros(m, n);
        for (k, &x) in self.sigma.iter().enumerate() {
            s[(k, k)] = C64::new(x, 0.0);
        }
        CMatrix::product(&[&self.u, &s, &self.v.adjoint()])
    }
}

/// Polar factors `T = U·|T|`.
#[derive(Clone, Debug)]
pub struct Polar {
    /// Partial isometry with initial space `R(Tᴴ)`.
    pub u: CMatrix,
    /// `(TᴴT)^{1/2}`.
    pub abs: CMatrix,
}

fn check_square(m: &CMatrix, op: &'static str) -> Result<()> {
    if m.is_square() {
        Ok(())
    } else {
        Err(QppError::ShapeMismatch {
            op,
            found: m.shape(),
        })
    }
}

fn check_finite(m: &CMatrix) -> Result<()> {
    if m.is_finite() {
        Ok(())
    } else {
        Err(QppError::NonFinite)
    }
}

// Rotation (c, s, phase) that annihilates the off-diagonal entry `apq` of the
// Hermitian 2×2 [[app, apq], [conj(apq), aqq]] under G ↦ Gᴴ·A·G with
// G = [[c, s·ph], [−s·conj(ph), c]].
fn rotation(app: f64, aqq: f64, apq: C64) -> (f64, f64, C64) {
    let r = apq.norm();
    let ph = apq / r;
    let tau = (aqq - app) / (2.0 * r);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    (c, t * c, ph)
}

// Columns p, q of `m` ← [m_p, m_q]·G.
fn rotate_columns(m: &mut CMatrix, p: usize, q: usize, c: f64, s: f64, ph: C64) {
    let gpq = ph * s;
    let gqp = -ph.conj() * s;
    for i in 0..m.rows() {
        let (x, y) = (m[(i, p)], m[(i, q)]);
        m[(i, p)] = x * c + y * gqp;
        m[(i, q)] = x * gpq + y * c;
    }
}

// Rows p, q of `m` ← Gᴴ·[m_p; m_q].
fn rotate_rows(m: &mut CMatrix, p: usize, q: usize, c: f64, s: f64, ph: C64) {
    let gpq = ph * s;
    let gqp = -ph.conj() * s;
    for j in 0..m.cols() {
        let (x, y) = (m[(p, j)], m[(q, j)]);
        m[(p, j)] = x * c + y * gqp.conj();
        m[(q, j)] = x * gpq.conj() + y * c;
    }
}

// Makes the largest-modulus entry of column j real and positive; returns the
// phase factor that was applied.
fn normalize_column_phase(m: &mut CMatrix, j: usize) -> C64 {
    let mut best = 0usize;
    let mut best_abs = -1.0;
    for i in 0..m.rows() {
        let a = m[(i, j)].norm();
        // strict comparison with a relative slack so that near-ties resolve to
        // the first index regardless of roundoff
        if a > best_abs * (1.0 + 1e-12) {
            best = i;
            best_abs = a;
        }
    }
    if best_abs <= 0.0 {
        return C64::new(1.0, 0.0);
    }
    let z = m[(best, j)];
    let ph = z.conj() / z.norm();
    for i in 0..m.rows() {
        m[(i, j)] *= ph;
    }
    m[(best, j)] = C64::new(m[(best, j)].norm(), 0.0);
    ph
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues come back ascending; each eigenvector has its largest-modulus
/// component real and positive.
pub fn hermitian_eig(m: &CMatrix, tol: &Tolerances) -> Result<Eig> {
    check_square(m, "hermitian_eig")?;
    check_finite(m)?;
    let asym = (m - &m.adjoint()).frobenius_norm();
    if asym > tol.eq_tol * (1.0 + m.frobenius_norm()) {
        return Err(QppError::NotHermitian { residual: asym });
    }
    Ok(jacobi_eig(&m.hermitian_part()))
}

fn jacobi_eig(m: &CMatrix) -> Eig {
    let n = m.rows();
    let mut a = m.clone();
    let mut v = CMatrix::identity(n);
    let scale = a.frobenius_norm();
    let floor = scale * f64::EPSILON * 1e-3;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                if r <= floor || r <= f64::EPSILON * 0.5 * (app * aqq).abs().sqrt() {
                    continue;
                }
                let (c, s, ph) = rotation(app, aqq, apq);
                rotate_columns(&mut a, p, q, c, s, ph);
                rotate_rows(&mut a, p, q, c, s, ph);
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
                rotate_columns(&mut v, p, q, c, s, ph);
                rotated = true;
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = v.select_columns(&order);
    for j in 0..n {
        normalize_column_phase(&mut vectors, j);
    }
    Eig { values, vectors }
}

/// `V·diag(map(λ))·Vᴴ` for a Hermitian matrix with eigenpairs `(λ, V)`.
pub fn hermitian_map(m: &CMatrix, tol: &Tolerances, map: impl Fn(f64) -> f64) -> Result<CMatrix> {
    let e = hermitian_eig(m, tol)?;
    Ok(from_eig(&e, map))
}

impl Eig {
    /// `V·diag(map(λ))·Vᴴ`.
    pub fn map(&self, map: impl Fn(f64) -> f64) -> CMatrix {
        from_eig(self, map)
    }
}

fn from_eig(e: &Eig, map: impl Fn(f64) -> f64) -> CMatrix {
    let n = e.values.len();
    let mut scaled = e.vectors.clone();
    for (j, &x) in e.values.iter().enumerate() {
        let y = map(x);
        for i in 0..n {
            scaled[(i, j)] *= y;
        }
    }
    (&scaled * &e.vectors.adjoint()).hermitian_part()
}

/// Principal square root of a positive semidefinite matrix; small negative
/// eigenvalues from roundoff are clamped to zero.
pub fn psd_sqrt(m: &CMatrix, tol: &Tolerances) -> Result<CMatrix> {
    hermitian_map(m, tol, |x| x.max(0.0).sqrt())
}

/// Square root of a positive semidefinite matrix with eigenvalues below
/// `rank_rel_tol·max(λ_max, floor)` set to zero first.
///
/// Plain [`psd_sqrt`] turns an eigenvalue of roundoff size `ε` into `√ε`; this
/// variant is for matrices whose non-zero spectrum is known to be well
/// separated from zero.
pub fn psd_sqrt_truncated(m: &CMatrix, floor: f64, tol: &Tolerances) -> Result<CMatrix> {
    let e = hermitian_eig(m, tol)?;
    let top = e.values.last().copied().unwrap_or(0.0).max(0.0);
    let cut = tol.rank_cutoff(top, floor);
    Ok(from_eig(&e, |x| if x <= cut { 0.0 } else { x.sqrt() }))
}

/// Applies one of the scalar functions `f, g, h, ℓ` to a Hermitian matrix
/// whose spectrum avoids the open interval `(0, 1)`.
///
/// Eigenvalues within `spec_tol` of 0 or 1 are snapped to that endpoint first;
/// anything strictly inside the gap is rejected.
///
/// ```
/// # use qpp_core::{CMatrix, FnKind, Tolerances};
/// # use qpp_core::numkit::func_calc;
/// let f = func_calc(&CMatrix::diag_real(&[2.0, 0.0]), FnKind::F, &Tolerances::default()).unwrap();
/// assert!((&f - &CMatrix::diag_real(&[1.0, -1.0])).max_abs() < 1e-12);
/// ```
pub fn func_calc(a: &CMatrix, kind: FnKind, tol: &Tolerances) -> Result<CMatrix> {
    Ok(gap_eig(a, tol)?.map(|x| kind.eval(x)))
}

/// Eigendecomposition of a Hermitian matrix whose spectrum must avoid
/// `(0, 1)`, with eigenvalues within `spec_tol` of 0 or 1 snapped onto them.
pub fn gap_eig(a: &CMatrix, tol: &Tolerances) -> Result<Eig> {
    let e = hermitian_eig(a, tol)?;
    let st = tol.spec_tol;
    let mut clamped = Vec::with_capacity(e.values.len());
    for &x in &e.values {
        let y = if x.abs() <= st {
            0.0
        } else if (x - 1.0).abs() <= st {
            1.0
        } else if x > 0.0 && x < 1.0 {
            return Err(QppError::SpectrumViolation { eigenvalue: x });
        } else {
            x
        };
        clamped.push(y);
    }
    Ok(Eig {
        values: clamped,
        vectors: e.vectors,
    })
}

// One-sided Jacobi on the columns of `w` (rows ≥ cols). Returns the rotated
// columns and, if requested, the accumulated right rotation.
fn hestenes(mut w: CMatrix, want_v: bool) -> (CMatrix, Option<CMatrix>) {
    let n = w.cols();
    let mut v = if want_v {
        Some(CMatrix::identity(n))
    } else {
        None
    };
    let scale = w.frobenius_norm();
    let floor = scale * scale * f64::EPSILON * 1e-3;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, C64::new(0.0, 0.0));
                for i in 0..w.rows() {
                    let (x, y) = (w[(i, p)], w[(i, q)]);
                    alpha += x.norm_sqr();
                    beta += y.norm_sqr();
                    gamma += x.conj() * y;
                }
                let r = gamma.norm();
                if r <= floor || r <= f64::EPSILON * 0.5 * (alpha * beta).sqrt() {
                    continue;
                }
                let (c, s, ph) = rotation(alpha, beta, gamma);
                rotate_columns(&mut w, p, q, c, s, ph);
                if let Some(v) = v.as_mut() {
                    rotate_columns(v, p, q, c, s, ph);
                }
                rotated = true;
            }
        }
        if !rotated {
            break;
        }
    }
    (w, v)
}

fn column_norm(m: &CMatrix, j: usize) -> f64 {
    (0..m.rows())
        .map(|i| m[(i, j)].norm_sqr())
        .sum::<f64>()
        .sqrt()
}

// Orthogonalizes `v` against the first `k` columns of `q` (two passes).
fn project_out(q: &CMatrix, k: usize, v: &mut [C64]) {
    for _ in 0..2 {
        for j in 0..k {
            let mut d = C64::new(0.0, 0.0);
            for (i, &x) in v.iter().enumerate() {
                d += q[(i, j)].conj() * x;
            }
            for (i, x) in v.iter_mut().enumerate() {
                *x -= q[(i, j)] * d;
            }
        }
    }
}

fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

// Fills columns k.. of the m×m matrix `q` (whose first k columns are
// orthonormal) with standard basis vectors orthogonalized against what is
// already there, choosing the best-conditioned candidate each time.
fn complete_basis(q: &mut CMatrix, mut k: usize) {
    let m = q.rows();
    while k < m {
        let mut best: Option<(f64, Vec<C64>)> = None;
        for e in 0..m {
            let mut v = vec![C64::new(0.0, 0.0); m];
            v[e] = C64::new(1.0, 0.0);
            project_out(q, k, &mut v);
            let nv = vec_norm(&v);
            if best.as_ref().map_or(true, |(b, _)| nv > *b * (1.0 + 1e-12)) {
                best = Some((nv, v));
            }
        }
        let (nv, mut v) = best.expect("non-empty candidate set");
        for x in v.iter_mut() {
            *x /= nv;
        }
        q.set_column(k, &v);
        normalize_column_phase(q, k);
        k += 1;
    }
}

/// Full SVD. Singular values are descending; each right singular vector has
/// its largest-modulus component real and positive (the left one carries the
/// matching phase).
pub fn svd(m: &CMatrix) -> Svd {
    let (rows, cols) = m.shape();
    if rows < cols {
        let t = svd(&m.adjoint());
        // M = (Mᴴ)ᴴ = V'·Σ·U'ᴴ; re-impose the phase rule on the new V.
        let mut out = Svd {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        };
        for j in 0..rows {
            let ph = normalize_column_phase(&mut out.v, j);
            for i in 0..rows {
                out.u[(i, j)] *= ph;
            }
        }
        return out;
    }
    let (w, v) = hestenes(m.clone(), true);
    let v = v.expect("accumulated");
    let norms: Vec<f64> = (0..cols).map(|j| column_norm(&w, j)).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let sigma: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let mut v = v.select_columns(&order);
    let w = w.select_columns(&order);

    let s1 = sigma.first().copied().unwrap_or(0.0);
    let keep = f64::EPSILON * (rows.max(cols) as f64) * s1;
    let mut u = CMatrix::zeros(rows, rows);
    let mut k = 0;
    for (j, &s) in sigma.iter().enumerate() {
        if s <= keep || s == 0.0 {
            break;
        }
        let mut col: Vec<C64> = w.column(j).iter().map(|z| z / s).collect();
        project_out(&u, k, &mut col);
        let nc = vec_norm(&col);
        for x in col.iter_mut() {
            *x /= nc;
        }
        u.set_column(k, &col);
        k += 1;
    }
    complete_basis(&mut u, k);
    for j in 0..cols {
        let ph = normalize_column_phase(&mut v, j);
        if j < k {
            for i in 0..rows {
                u[(i, j)] *= ph;
            }
        }
    }
    Svd { u, sigma, v }
}

/// Singular values only, descending.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let w = if m.rows() < m.cols() {
        m.adjoint()
    } else {
        m.clone()
    };
    let (w, _) = hestenes(w, false);
    let mut s: Vec<f64> = (0..w.cols()).map(|j| column_norm(&w, j)).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Largest singular value (`0` for empty matrices).
pub fn operator_norm(m: &CMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Number of singular values above the cutoff `rank_rel_tol·max(σ₁, floor)`.
pub fn numerical_rank(sigma: &[f64], floor: f64, tol: &Tolerances) -> usize {
    let s1 = sigma.first().copied().unwrap_or(0.0);
    let cut = tol.rank_cutoff(s1, floor);
    sigma.iter().take_while(|&&s| s > 0.0 && s >= cut).count()
}

/// Moore-Penrose inverse by truncated SVD.
pub fn moore_penrose(m: &CMatrix, tol: &Tolerances) -> CMatrix {
    moore_penrose_floor(m, 0.0, tol)
}

/// [`moore_penrose`] with the rank cutoff anchored at `max(σ₁, floor)`.
pub fn moore_penrose_floor(m: &CMatrix, floor: f64, tol: &Tolerances) -> CMatrix {
    let d = svd(m);
    let r = numerical_rank(&d.sigma, floor, tol);
    let mut vs = d.v.column_range(0, r);
    for j in 0..r {
        let inv = 1.0 / d.sigma[j];
        for i in 0..vs.rows() {
            vs[(i, j)] *= inv;
        }
    }
    &vs * &d.u.column_range(0, r).adjoint()
}

/// Polar decomposition `T = U·|T|` with `UᴴU` the projection onto `R(Tᴴ)`.
pub fn polar_decomposition(t: &CMatrix, tol: &Tolerances) -> Polar {
    polar_decomposition_floor(t, 0.0, tol)
}

/// [`polar_decomposition`] with the rank cutoff anchored at `max(σ₁, floor)`.
pub fn polar_decomposition_floor(t: &CMatrix, floor: f64, tol: &Tolerances) -> Polar {
    let d = svd(t);
    let r = numerical_rank(&d.sigma, floor, tol);
    let ur = d.u.column_range(0, r);
    let vr = d.v.column_range(0, r);
    let u = &ur * &vr.adjoint();
    let mut vs = vr.clone();
    for j in 0..r {
        for i in 0..vs.rows() {
            vs[(i, j)] *= d.sigma[j];
        }
    }
    let abs = (&vs * &vr.adjoint()).hermitian_part();
    Polar { u, abs }
}

/// Orthonormal basis of the numerical column space (left singular vectors,
/// descending singular value).
pub fn range_basis(m: &CMatrix, tol: &Tolerances) -> SubspaceBasis {
    range_basis_floor(m, 0.0, tol)
}

/// [`range_basis`] with the rank cutoff anchored at `max(σ₁, floor)`.
pub fn range_basis_floor(m: &CMatrix, floor: f64, tol: &Tolerances) -> SubspaceBasis {
    let d = svd(m);
    let r = numerical_rank(&d.sigma, floor, tol);
    SubspaceBasis::new(d.u.column_range(0, r))
}

/// `max(‖P² − P‖, ‖P − Pᴴ‖)`.
pub fn projection_residual(p: &CMatrix) -> f64 {
    let idem = operator_norm(&(&(p * p) - p));
    let herm = operator_norm(&(p - &p.adjoint()));
    idem.max(herm)
}

/// Basis of `R(P1) ∩ R(P2)` for orthogonal projections `P1`, `P2`, read off
/// the eigenspace of `P1 + P2` at eigenvalue 2.
pub fn subspace_intersection(
    p1: &CMatrix,
    p2: &CMatrix,
    tol: &Tolerances,
) -> Result<SubspaceBasis> {
    check_square(p1, "subspace_intersection")?;
    if p1.shape() != p2.shape() {
        return Err(QppError::ShapeMismatch {
            op: "subspace_intersection",
            found: p2.shape(),
        });
    }
    for p in [p1, p2] {
        let r = projection_residual(p);
        let scale = 1.0 + operator_norm(p).powi(2);
        if !(r <= tol.eq_tol * scale) {
            return Err(QppError::NotProjection { residual: r });
        }
    }
    let e = hermitian_eig(&(p1 + p2).hermitian_part(), tol)?;
    let n = p1.rows();
    let idx: Vec<usize> = (0..n)
        .rev()
        .take_while(|&j| e.values[j] >= 2.0 - tol.spec_tol)
        .collect();
    Ok(SubspaceBasis::new(e.vectors.select_columns(&idx)))
}

/// Inverse by LU with partial pivoting, refused when the smallest singular
/// value is at most `eq_tol·max(1, σ₁)`.
pub fn inverse(m: &CMatrix, what: &'static str, tol: &Tolerances) -> Result<CMatrix> {
    check_square(m, what)?;
    check_finite(m)?;
    let n = m.rows();
    if n == 0 {
        return Ok(CMatrix::zeros(0, 0));
    }
    let s = singular_values(m);
    let smin = s[n - 1];
    if smin <= tol.eq_tol * s[0].max(1.0) {
        return Err(QppError::IllConditioned {
            what,
            min_singular: smin,
        });
    }
    let mut lu = m.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let mut piv = k;
        for i in k + 1..n {
            if lu[(i, k)].norm() > lu[(piv, k)].norm() {
                piv = i;
            }
        }
        if piv != k {
            perm.swap(k, piv);
            for j in 0..n {
                let t = lu[(k, j)];
                lu[(k, j)] = lu[(piv, j)];
                lu[(piv, j)] = t;
            }
        }
        let d = lu[(k, k)];
        for i in k + 1..n {
            let f = lu[(i, k)] / d;
            lu[(i, k)] = f;
            for j in k + 1..n {
                let t = lu[(k, j)];
                lu[(i, j)] -= f * t;
            }
        }
    }
    let mut inv = CMatrix::zeros(n, n);
    for col in 0..n {
        let mut x: Vec<C64> = (0..n)
            .map(|i| C64::new(if perm[i] == col { 1.0 } else { 0.0 }, 0.0))
            .collect();
        for i in 0..n {
            for j in 0..i {
                let t = lu[(i, j)] * x[j];
                x[i] -= t;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let t = lu[(i, j)] * x[j];
                x[i] -= t;
            }
            x[i] /= lu[(i, i)];
        }
        inv.set_column(col, &x);
    }
    Ok(inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::random_unitary_from_seed;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn close(a: &CMatrix, b: &CMatrix, eps: f64) -> bool {
        (a - b).max_abs() <= eps
    }

    #[test]
    fn eig_of_identity_and_diagonal() {
        let e = hermitian_eig(&CMatrix::identity(3), &tol()).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);
        assert!(close(&e.vectors, &CMatrix::identity(3), 0.0));

        let e = hermitian_eig(&CMatrix::diag_real(&[2.0, 0.0]), &tol()).unwrap();
        assert_eq!(e.values, vec![0.0, 2.0]);
        assert!(close(
            &e.vectors,
            &CMatrix::real(&[[0.0, 1.0], [1.0, 0.0]]),
            0.0
        ));
    }

    #[test]
    fn eig_of_two_by_two() {
        let e = hermitian_eig(&CMatrix::real(&[[2.0, 1.0], [1.0, 2.0]]), &tol()).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let r = hermitian_eig(&CMatrix::real(&[[1.0, 1.0], [0.0, 0.0]]), &tol());
        assert!(matches!(r, Err(QppError::NotHermitian { .. })));
    }

    #[test]
    fn func_calc_examples() {
        let t = tol();
        let f = func_calc(&CMatrix::diag_real(&[2.0, 0.0]), FnKind::F, &t).unwrap();
        assert!(close(&f, &CMatrix::diag_real(&[1.0, -1.0]), 1e-14));
        let l = func_calc(&CMatrix::identity(3), FnKind::Ell, &t).unwrap();
        assert!(l.max_abs() < 1e-14);
        // h(2) = −1 and h(−3) = −f(−3)·√4 = 2.
        let h = func_calc(&CMatrix::diag_real(&[2.0, -3.0]), FnKind::H, &t).unwrap();
        assert!(close(&h, &CMatrix::diag_real(&[-1.0, 2.0]), 1e-14));
    }

    #[test]
    fn func_calc_gap_and_clamping() {
        let t = tol();
        let r = func_calc(&CMatrix::diag_real(&[0.5]), FnKind::G, &t);
        assert_eq!(r, Err(QppError::SpectrumViolation { eigenvalue: 0.5 }));
        let f = func_calc(&CMatrix::diag_real(&[1.0 - 1e-10, 1e-10]), FnKind::F, &t).unwrap();
        assert!(close(&f, &CMatrix::diag_real(&[1.0, -1.0]), 1e-14));
    }

    #[test]
    fn svd_examples() {
        let s = svd(&CMatrix::zeros(2, 3));
        assert_eq!(s.sigma, vec![0.0, 0.0]);
        assert_eq!(s.u.shape(), (2, 2));
        assert_eq!(s.v.shape(), (3, 3));

        let q = CMatrix::real(&[[1.0, 1.0], [0.0, 0.0]]);
        let s = svd(&q);
        assert!((s.sigma[0] - 2f64.sqrt()).abs() < 1e-14);
        assert!(s.sigma[1].abs() < 1e-14);
        assert!(close(&s.reconstruct(), &q, 1e-14));

        let u = random_unitary_from_seed(4, 11);
        for x in singular_values(&u) {
            assert!((x - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn pinv_examples() {
        let t = tol();
        let r2 = 2f64.sqrt();
        let p = moore_penrose(&CMatrix::diag_real(&[r2, 0.0]), &t);
        assert!(close(&p, &CMatrix::diag_real(&[1.0 / r2, 0.0]), 1e-15));
        assert!(close(
            &moore_penrose(&CMatrix::identity(3), &t),
            &CMatrix::identity(3),
            1e-15
        ));
    }

    #[test]
    fn polar_examples() {
        let t = tol();
        let z = polar_decomposition(&CMatrix::zeros(2, 2), &t);
        assert_eq!(z.u.max_abs(), 0.0);
        assert_eq!(z.abs.max_abs(), 0.0);

        let nil = CMatrix::real(&[[0.0, 1.0], [0.0, 0.0]]);
        let p = polar_decomposition(&nil, &t);
        assert!(close(&p.abs, &CMatrix::diag_real(&[0.0, 1.0]), 1e-15));
        assert!(close(&p.u, &nil, 1e-15));
        assert!(close(
            &(&p.u.adjoint() * &p.u),
            &CMatrix::diag_real(&[0.0, 1.0]),
            1e-15
        ));

        let psd = CMatrix::diag_real(&[3.0, 0.0]);
        let p = polar_decomposition(&psd, &t);
        assert!(close(&p.u, &CMatrix::diag_real(&[1.0, 0.0]), 1e-15));
        assert!(close(&p.abs, &psd, 1e-14));
    }

    #[test]
    fn range_basis_examples() {
        let t = tol();
        assert_eq!(range_basis(&CMatrix::zeros(3, 3), &t).dim(), 0);
        let b = range_basis(&CMatrix::real(&[[1.0, 1.0], [0.0, 0.0]]), &t);
        assert_eq!(b.dim(), 1);
        assert!((b.basis[(0, 0)].norm() - 1.0).abs() < 1e-15);
        assert!(b.basis[(1, 0)].norm() < 1e-15);
        assert_eq!(range_basis(&CMatrix::identity(4), &t).dim(), 4);
    }

    #[test]
    fn intersection_examples() {
        let t = tol();
        let e1 = CMatrix::diag_real(&[1.0, 0.0]);
        let b = subspace_intersection(&e1, &e1, &t).unwrap();
        assert!(close(&b.projector(), &e1, 1e-14));
        let b = subspace_intersection(&e1, &CMatrix::diag_real(&[0.0, 1.0]), &t).unwrap();
        assert_eq!(b.dim(), 0);
        let b = subspace_intersection(
            &CMatrix::diag_real(&[1.0, 1.0, 0.0]),
            &CMatrix::diag_real(&[0.0, 1.0, 1.0]),
            &t,
        )
        .unwrap();
        assert!(close(
            &b.projector(),
            &CMatrix::diag_real(&[0.0, 1.0, 0.0]),
            1e-14
        ));
        let bad = subspace_intersection(&CMatrix::real(&[[1.0, 1.0], [0.0, 0.0]]), &e1, &t);
        assert!(matches!(bad, Err(QppError::NotProjection { .. })));
    }

    #[test]
    fn operator_norm_examples() {
        assert!((operator_norm(&CMatrix::diag_real(&[1.0, 0.0])) - 1.0).abs() < 1e-15);
        let n = operator_norm(&CMatrix::real(&[[1.0, 1.0], [0.0, 0.0]]));
        assert!((n - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(operator_norm(&CMatrix::zeros(2, 2)), 0.0);
    }

    #[test]
    fn inverse_guard() {
        let t = tol();
        let m = CMatrix::real(&[[0.0, 2.0], [1.0, 1.0]]);
        let inv = inverse(&m, "m", &t).unwrap();
        assert!(close(&(&m * &inv), &CMatrix::identity(2), 1e-15));
        let s = inverse(&CMatrix::diag_real(&[1.0, 0.0]), "s", &t);
        assert!(matches!(s, Err(QppError::IllConditioned { what: "s", .. })));
    }
}

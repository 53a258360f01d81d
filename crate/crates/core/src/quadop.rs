//! Unitary canonical forms of operators annihilated by a monic polynomial of
//! degree at most two.

#[allow(unused_imports)]
use num_traits::Float;

use crate::decomp;
use crate::error::{QppError, Result};
use crate::gen::quadratic_block_form;
use crate::idempotent;
use crate::matrix::{CMatrix, C64};
use crate::numkit::{self, operator_norm, Tolerances};

const ZERO: C64 = C64::new(0.0, 0.0);

/// `W·T·Wᴴ = a·I_{k1} ⊕ b·I_{k2} ⊕ [[a·I, B], [0, b·I]]`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticCanonicalForm {
    /// First root.
    pub a: C64,
    /// Second root.
    pub b: C64,
    /// `(k1, k2, k3)` with `k1 + k2 + 2·k3 = n`.
    pub dims: (usize, usize, usize),
    /// The conjugating unitary.
    pub w: CMatrix,
    /// Positive definite `k3 × k3` block.
    pub b_block: CMatrix,
}

impl QuadraticCanonicalForm {
    /// `a·I_{k1} ⊕ b·I_{k2} ⊕ [[a·I, B], [0, b·I]]`.
    pub fn canonical_matrix(&self) -> CMatrix {
        quadratic_block_form(self.a, self.b, self.dims.0, self.dims.1, &self.b_block)
    }

    /// `‖W·T·Wᴴ − canonical_matrix()‖`.
    pub fn residual(&self, t: &CMatrix) -> f64 {
        let moved = conjugated(&self.w, t);
        operator_norm(&(&moved - &self.canonical_matrix()))
    }

    /// `‖WᴴW − I‖`.
    pub fn unitarity_residual(&self) -> f64 {
        let n = self.w.rows();
        operator_norm(&(&(&self.w.adjoint() * &self.w) - &CMatrix::identity(n)))
    }

    fn rephase(mut self, theta: C64) -> Self {
        let (k1, k2, k3) = self.dims;
        let start = k1 + k2 + k3;
        for i in start..start + k3 {
            for j in 0..self.w.cols() {
                self.w[(i, j)] *= theta;
            }
        }
        self
    }
}

fn conjugated(w: &CMatrix, t: &CMatrix) -> CMatrix {
    CMatrix::product(&[w, t, &w.adjoint()])
}

fn square(t: &CMatrix, op: &'static str) -> Result<()> {
    if !t.is_square() {
        return Err(QppError::ShapeMismatch {
            op,
            found: t.shape(),
        });
    }
    if !t.is_finite() {
        return Err(QppError::NonFinite);
    }
    Ok(())
}

/// `W·Q·Wᴴ = I_{k1} ⊕ 0_{k2} ⊕ [[I, B], [0, 0]]` for an idempotent `Q`.
///
/// Built on the matched-pair decomposition: with `E = [H1 | H4 | H5 | H6]`
/// the `H5 ⊕ H6` corner is rotated by the symmetric unitary
/// `(2A − I)^{-1/2}·[[√A, √(A − I)], [√(A − I), −√A]]`, which leaves
/// `B = 2ℓ(A)`.
pub fn idempotent_canonical(q: &CMatrix, tol: &Tolerances) -> Result<QuadraticCanonicalForm> {
    square(q, "idempotent_canonical")?;
    if !idempotent::is_idempotent(q, tol) {
        return Err(QppError::NotIdempotent {
            residual: idempotent::idempotent_residual(q),
        });
    }
    let one = C64::new(1.0, 0.0);
    if idempotent::is_projection(q, tol) {
        let range = numkit::range_basis_floor(q, 1.0, tol);
        let null = numkit::range_basis_floor(&q.complement(), 1.0, tol);
        let n = q.rows();
        let (k1, k2) = (range.dim(), null.dim());
        if k1 + k2 != n {
            return Err(QppError::DimensionMismatch {
                expected: n,
                found: k1 + k2,
            });
        }
        let w = CMatrix::hstack(n, &[&range.basis, &null.basis]).adjoint();
        return Ok(QuadraticCanonicalForm {
            a: one,
            b: ZERO,
            dims: (k1, k2, 0),
            w,
            b_block: CMatrix::zeros(0, 0),
        });
    }
    let six = decomp::matched_4x4(q, tol)?;
    let n = q.rows();
    let k1 = six.h[0].dim();
    let k2 = six.h[3].dim();
    let k3 = six.h[4].dim();
    let e = numkit::hermitian_eig(&six.a, tol)?;
    let lift = |x: f64| x.max(1.0);
    let k = e.map(|x| 1.0 / (2.0 * lift(x) - 1.0).sqrt());
    let g = &e.map(|x| lift(x).sqrt()) * &k;
    let h = &e.map(|x| (lift(x) - 1.0).sqrt()) * &k;
    let rot = CMatrix::from_blocks(&g, &h, &h, &-&g);
    let untwist = CMatrix::block_diag(&[&CMatrix::identity(k3), &six.u.adjoint()]);
    let corner = &rot * &untwist;
    let local = CMatrix::block_diag(&[&CMatrix::identity(k1), &CMatrix::identity(k2), &corner]);
    let frame = CMatrix::hstack(
        n,
        &[
            &six.h[0].basis,
            &six.h[3].basis,
            &six.h[4].basis,
            &six.h[5].basis,
        ],
    );
    let w = &local * &frame.adjoint();
    let b_block = e.map(|x| 2.0 * (lift(x) * (lift(x) - 1.0)).sqrt());
    Ok(QuadraticCanonicalForm {
        a: one,
        b: ZERO,
        dims: (k1, k2, k3),
        w,
        b_block,
    })
}

/// Canonical form of `S` with `S² = 0`, obtained from the idempotent
/// `P + S` where `P` projects onto `R(S)`.
pub fn square_zero_canonical(s: &CMatrix, tol: &Tolerances) -> Result<QuadraticCanonicalForm> {
    square(s, "square_zero_canonical")?;
    let ns = operator_norm(s);
    let residual = operator_norm(&(s * s));
    if residual > tol.eq_tol * (1.0 + ns * ns) {
        return Err(QppError::NotSquareZero { residual });
    }
    let p = numkit::range_basis(s, tol).projector();
    let q = &p + s;
    let mut form = idempotent_canonical(&q, tol)?;
    form.a = ZERO;
    form.b = ZERO;
    Ok(form)
}

fn roots_close(a: C64, b: C64, tol: &Tolerances) -> bool {
    (a - b).norm() < tol.spec_tol * (1.0 + a.norm() + b.norm())
}

/// Canonical form of `T` with `(T − aI)(T − bI) = 0`.
pub fn quadratic_canonical(
    t: &CMatrix,
    a: C64,
    b: C64,
    tol: &Tolerances,
) -> Result<QuadraticCanonicalForm> {
    square(t, "quadratic_canonical")?;
    let ta = t.shift(-a);
    let tb = t.shift(-b);
    let residual = operator_norm(&(&ta * &tb));
    let scale = (1.0 + operator_norm(&ta)) * (1.0 + operator_norm(&tb));
    if residual > tol.eq_tol * scale {
        return Err(QppError::NotQuadratic { residual });
    }
    if roots_close(a, b, tol) {
        let c = (a + b).scale(0.5);
        let mut form = square_zero_canonical(&t.shift(-c), tol)?;
        form.a = c;
        form.b = c;
        return Ok(form);
    }
    let diff = a - b;
    let q = tb.scale(C64::new(1.0, 0.0) / diff);
    let mut form = idempotent_canonical(&q, tol)?;
    form.a = a;
    form.b = b;
    form.b_block = form.b_block.scale_real(diff.norm());
    let phase = diff / diff.norm();
    Ok(form.rephase(phase))
}

fn frob(x: &CMatrix, y: &CMatrix) -> C64 {
    x.data()
        .iter()
        .zip(y.data())
        .map(|(u, v)| u.conj() * v)
        .sum()
}

fn ordered(a: C64, b: C64) -> (C64, C64) {
    let key = |z: C64| (z.re, z.im);
    if key(b) < key(a) {
        (b, a)
    } else {
        (a, b)
    }
}

/// Roots `(a, b)` of the monic polynomial of degree at most two annihilating
/// `T`, ordered by real part then imaginary part. A degree-one minimal
/// polynomial is reported as a double root.
pub fn detect_quadratic(t: &CMatrix, tol: &Tolerances) -> Result<(C64, C64)> {
    square(t, "detect_quadratic")?;
    let n = t.rows();
    if n == 0 {
        return Ok((ZERO, ZERO));
    }
    let nt = operator_norm(t);
    let c = t.trace() / n as f64;
    let lin = operator_norm(&t.shift(-c));
    if lin <= tol.eq_tol * (1.0 + nt) {
        return Ok((c, c));
    }
    let id = CMatrix::identity(n);
    let t2 = t * t;
    // Normal equations for T² ≈ x0·I + x1·T.
    let (g00, g01, g11) = (frob(&id, &id), frob(&id, t), frob(t, t));
    let g10 = g01.conj();
    let (r0, r1) = (frob(&id, &t2), frob(t, &t2));
    let det = g00 * g11 - g01 * g10;
    if det.norm() == 0.0 {
        return Err(QppError::NotQuadratic { residual: lin });
    }
    let x0 = (r0 * g11 - g01 * r1) / det;
    let x1 = (g00 * r1 - g10 * r0) / det;
    let fit = &(&t2 - &t.scale(x1)) - &id.scale(x0);
    let residual = operator_norm(&fit);
    let scale = (1.0 + nt) * (1.0 + nt);
    if residual > tol.eq_tol * scale {
        return Err(QppError::NotQuadratic { residual });
    }
    let disc = (x1 * x1 + x0.scale(4.0)).sqrt();
    let (a, b) = ordered((x1 + disc).scale(0.5), (x1 - disc).scale(0.5));
    // A double root comes out split by about √ε; snap it when (T − cI)² = 0.
    if (a - b).norm() <= 1e-6 * (1.0 + a.norm() + b.norm()) {
        let mid = (a + b).scale(0.5);
        let s = t.shift(-mid);
        if operator_norm(&(&s * &s)) <= tol.eq_tol * scale {
            return Ok((mid, mid));
        }
    }
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{random_idempotent, random_quadratic, GenKind, GenSpec};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn assert_form(form: &QuadraticCanonicalForm, t: &CMatrix) {
        let (k1, k2, k3) = form.dims;
        assert_eq!(k1 + k2 + 2 * k3, t.rows());
        assert!(
            form.unitarity_residual() < 1e-10,
            "{}",
            form.unitarity_residual()
        );
        let r = form.residual(t);
        assert!(r < 1e-9 * (1.0 + operator_norm(t)), "residual {r:e}");
        if k3 > 0 {
            let e = numkit::hermitian_eig(&form.b_block, &tol()).unwrap();
            assert!(e.values[0] > 0.0);
        }
    }

    fn scalar_b(form: &QuadraticCanonicalForm) -> f64 {
        assert_eq!(form.b_block.shape(), (1, 1));
        form.b_block[(0, 0)].re
    }

    #[test]
    fn idempotent_examples() {
        let t = tol();
        let q = CMatrix::diag_real(&[1.0, 0.0]);
        let f = idempotent_canonical(&q, &t).unwrap();
        assert_eq!(f.dims, (1, 1, 0));
        assert_form(&f, &q);

        let q = CMatrix::real(&[[1.0, 1.0], [0.0, 0.0]]);
        let f = idempotent_canonical(&q, &t).unwrap();
        assert_eq!(f.dims, (0, 0, 1));
        assert!((scalar_b(&f) - 1.0).abs() < 1e-12);
        assert_form(&f, &q);
        // Singular values of Q are (√(1 + B²), 0).
        let sv = numkit::singular_values(&q);
        assert!((sv[0] - (1.0 + scalar_b(&f).powi(2)).sqrt()).abs() < 1e-12);

        let q = CMatrix::block_diag(&[&CMatrix::diag_real(&[1.0, 0.0]), &q]);
        let f = idempotent_canonical(&q, &t).unwrap();
        assert_eq!(f.dims, (1, 1, 1));
        assert!((scalar_b(&f) - 1.0).abs() < 1e-12);
        assert_form(&f, &q);

        assert!(matches!(
            idempotent_canonical(&CMatrix::real(&[[1.0, 1.0], [0.0, 1.0]]), &t),
            Err(QppError::NotIdempotent { .. })
        ));
    }

    #[test]
    fn square_zero_examples() {
        let t = tol();
        let z = CMatrix::zeros(3, 3);
        let f = square_zero_canonical(&z, &t).unwrap();
        assert_eq!(f.dims.2, 0);
        assert_form(&f, &z);

        let s = CMatrix::real(&[[0.0, 1.0], [0.0, 0.0]]);
        let f = square_zero_canonical(&s, &t).unwrap();
        assert_eq!(f.dims, (0, 0, 1));
        assert!((scalar_b(&f) - 1.0).abs() < 1e-12);
        assert_form(&f, &s);

        let s = CMatrix::real(&[[0.0, 2.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]);
        let f = square_zero_canonical(&s, &t).unwrap();
        assert_eq!(f.dims.0 + f.dims.1, 1);
        assert_eq!(f.dims.2, 1);
        assert!((scalar_b(&f) - 2.0).abs() < 1e-12);
        assert_form(&f, &s);

        assert!(matches!(
            square_zero_canonical(&CMatrix::identity(2), &t),
            Err(QppError::NotSquareZero { .. })
        ));
    }

    #[test]
    fn quadratic_examples() {
        let t = tol();
        let m = CMatrix::diag_real(&[3.0, 5.0]);
        let f = quadratic_canonical(&m, c(3.0), c(5.0), &t).unwrap();
        assert_eq!(f.dims, (1, 1, 0));
        assert_form(&f, &m);

        let m = CMatrix::real(&[[0.0, 1.0], [0.0, 1.0]]);
        let f = quadratic_canonical(&m, c(0.0), c(1.0), &t).unwrap();
        assert_eq!(f.dims.2, 1);
        assert!((scalar_b(&f) - 1.0).abs() < 1e-12);
        assert_form(&f, &m);

        let m = CMatrix::real(&[[2.0, 3.0], [0.0, 2.0]]);
        let f = quadratic_canonical(&m, c(2.0), c(2.0), &t).unwrap();
        assert_eq!(f.dims.2, 1);
        assert!((scalar_b(&f) - 3.0).abs() < 1e-12);
        assert_form(&f, &m);

        assert!(matches!(
            quadratic_canonical(&CMatrix::diag_real(&[1.0, 2.0, 3.0]), c(1.0), c(2.0), &t),
            Err(QppError::NotQuadratic { .. })
        ));
    }

    #[test]
    fn complex_roots_absorb_phase() {
        let t = tol();
        let (a, b) = (C64::new(1.0, 2.0), C64::new(-0.5, 0.25));
        let core = quadratic_block_form(a, b, 1, 0, &CMatrix::real(&[[1.5]]));
        let u = crate::gen::random_unitary_from_seed(3, 4);
        let m = CMatrix::product(&[&u, &core, &u.adjoint()]);
        let f = quadratic_canonical(&m, a, b, &t).unwrap();
        assert_form(&f, &m);
        assert!((scalar_b(&f) - 1.5).abs() < 1e-9);
    }

    #[test]
    fn detect_examples() {
        let t = tol();
        let q = random_idempotent(&GenSpec::new(GenKind::Idempotent, 5, 3)).unwrap();
        let (a, b) = detect_quadratic(&q, &t).unwrap();
        assert!(a.norm() < 1e-9 && (b - c(1.0)).norm() < 1e-9);
        assert_eq!(
            detect_quadratic(&CMatrix::diag_real(&[3.0, 3.0]), &t).unwrap(),
            (c(3.0), c(3.0))
        );
        let (a, b) = detect_quadratic(&CMatrix::real(&[[2.0, 1.0], [0.0, 5.0]]), &t).unwrap();
        assert!((a - c(2.0)).norm() < 1e-12 && (b - c(5.0)).norm() < 1e-12);
        let (a, b) = detect_quadratic(&CMatrix::real(&[[2.0, 3.0], [0.0, 2.0]]), &t).unwrap();
        assert_eq!((a, b), (c(2.0), c(2.0)));
        assert!(matches!(
            detect_quadratic(&CMatrix::diag_real(&[1.0, 2.0, 3.0]), &t),
            Err(QppError::NotQuadratic { .. })
        ));
    }

    #[test]
    fn random_quadratics_recover_b() {
        let t = tol();
        for seed in 0..30 {
            let n = 2 + (seed as usize % 9);
            let sample = random_quadratic(&GenSpec::new(GenKind::Quadratic, n, seed)).unwrap();
            let (a, b) = detect_quadratic(&sample.t, &t).unwrap();
            let f = quadratic_canonical(&sample.t, a, b, &t).unwrap();
            assert_form(&f, &sample.t);
            assert_eq!(f.dims.2, sample.dims.2, "seed {seed}");
            let mut got = numkit::singular_values(&f.b_block);
            let mut want = numkit::singular_values(&sample.b_block);
            got.sort_by(f64::total_cmp);
            want.sort_by(f64::total_cmp);
            for (x, y) in got.iter().zip(&want) {
                assert!((x - y).abs() < 1e-8, "seed {seed}: {got:?} vs {want:?}");
            }
        }
    }
}

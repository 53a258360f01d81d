//! Seeded instance generators.
//!
//! Randomness comes from ChaCha8 seeded with `seed_from_u64`, so a given
//! [`GenSpec`] yields bitwise-identical matrices on every platform. Normal
//! deviates use the cosine branch of Box-Muller with
//! `u1 = ((x >> 11) + 1)·2⁻⁵³` and `u2 = (y >> 11)·2⁻⁵³`.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{QppError, Result};
use crate::idempotent::QuasiPair;
use crate::matrix::{CMatrix, C64};
use crate::numkit::{self, FnKind, Tolerances};

/// Which family a [`GenSpec`] asks for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GenKind {
    /// Orthogonal projection.
    Projection,
    /// Idempotent.
    Idempotent,
    /// Quasi-projection pair.
    QuasiPair,
    /// Quadratic operator.
    Quadratic,
}

/// Optional knobs; anything left `None` is drawn from the stream.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GenParams {
    /// Rank of the projection / idempotent, or `dim R(P)` for pairs.
    pub rank: Option<usize>,
    /// Requested `‖Q‖` for idempotents.
    pub target_norm: Option<f64>,
    /// First root of a quadratic operator.
    pub a: Option<C64>,
    /// Second root of a quadratic operator.
    pub b: Option<C64>,
    /// Minimal distance of `σ(A)` from `(0, 1)`; default 0.05.
    pub gap: Option<f64>,
    /// `(k1, k2, k3)` block sizes of a quadratic operator.
    pub blocks: Option<(usize, usize, usize)>,
}

/// A generator request.
#[derive(Clone, Debug, PartialEq)]
pub struct GenSpec {
    /// Ambient dimension.
    pub dim: usize,
    /// Stream seed.
    pub seed: u64,
    /// Family.
    pub kind: GenKind,
    /// Optional parameters.
    pub params: GenParams,
}

impl GenSpec {
    /// Spec with default parameters.
    pub fn new(kind: GenKind, dim: usize, seed: u64) -> Self {
        GenSpec {
            dim,
            seed,
            kind,
            params: GenParams::default(),
        }
    }

    /// Sets `rank`.
    pub fn rank(mut self, r: usize) -> Self {
        self.params.rank = Some(r);
        self
    }

    /// Sets `target_norm`.
    pub fn target_norm(mut self, t: f64) -> Self {
        self.params.target_norm = Some(t);
        self
    }

    /// Sets the quadratic roots.
    pub fn roots(mut self, a: C64, b: C64) -> Self {
        self.params.a = Some(a);
        self.params.b = Some(b);
        self
    }

    /// Sets the spectral gap.
    pub fn gap(mut self, g: f64) -> Self {
        self.params.gap = Some(g);
        self
    }

    /// Sets the quadratic block sizes.
    pub fn blocks(mut self, k1: usize, k2: usize, k3: usize) -> Self {
        self.params.blocks = Some((k1, k2, k3));
        self
    }

    fn rng(&self) -> Result<Rng> {
        if self.dim == 0 {
            return Err(QppError::BadSpec("dim must be at least 1"));
        }
        Ok(Rng::new(self.seed))
    }
}

/// Deterministic random stream.
#[derive(Clone, Debug)]
pub struct Rng(ChaCha8Rng);

impl Rng {
    /// Stream for a seed.
    pub fn new(seed: u64) -> Self {
        Rng(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `[lo, hi)`.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `0..n` (`n > 0`).
    pub fn below(&mut self, n: usize) -> usize {
        (self.0.next_u64() % n as u64) as usize
    }

    /// Standard normal deviate.
    pub fn gaussian(&mut self) -> f64 {
        let u1 = ((self.0.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
    }

    /// Standard complex normal deviate (`E|z|² = 1`).
    pub fn complex_gaussian(&mut self) -> C64 {
        let s = core::f64::consts::FRAC_1_SQRT_2;
        C64::new(self.gaussian() * s, self.gaussian() * s)
    }

    /// Matrix of independent complex normal entries.
    pub fn gaussian_matrix(&mut self, rows: usize, cols: usize) -> CMatrix {
        CMatrix::from_fn(rows, cols, |_, _| self.complex_gaussian())
    }
}

// Modified Gram-Schmidt with one reorthogonalization pass. The input is
// almost surely of full column rank.
fn orthonormalize(m: &CMatrix) -> CMatrix {
    let mut q = m.clone();
    for j in 0..q.cols() {
        let mut v = q.column(j);
        for _ in 0..2 {
            for k in 0..j {
                let mut d = C64::new(0.0, 0.0);
                for (i, &x) in v.iter().enumerate() {
                    d += q[(i, k)].conj() * x;
                }
                for (i, x) in v.iter_mut().enumerate() {
                    *x -= q[(i, k)] * d;
                }
            }
        }
        let nv = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for x in v.iter_mut() {
            *x /= nv;
        }
        q.set_column(j, &v);
    }
    q
}

/// Haar-distributed unitary (Gram-Schmidt of a complex Gaussian matrix).
pub fn random_unitary(n: usize, rng: &mut Rng) -> CMatrix {
    orthonormalize(&rng.gaussian_matrix(n, n))
}

/// [`random_unitary`] from a fresh stream.
pub fn random_unitary_from_seed(n: usize, seed: u64) -> CMatrix {
    random_unitary(n, &mut Rng::new(seed))
}

/// `n × k` matrix with orthonormal columns.
pub fn random_frame(n: usize, k: usize, rng: &mut Rng) -> CMatrix {
    orthonormalize(&rng.gaussian_matrix(n, k))
}

/// Projection of the requested rank (default: uniform in `0..=dim`).
pub fn random_projection(spec: &GenSpec) -> Result<CMatrix> {
    let mut rng = spec.rng()?;
    let n = spec.dim;
    let r = match spec.params.rank {
        Some(r) if r > n => return Err(QppError::BadSpec("rank exceeds dim")),
        Some(r) => r,
        None => rng.below(n + 1),
    };
    let v = random_frame(n, r, &mut rng);
    Ok((&v * &v.adjoint()).hermitian_part())
}

/// `W·[[I, C], [0, 0]]·Wᴴ` where `C` is `r × (n−r)`; `W = I` when `frame` is
/// `None`.
pub fn idempotent_from_coupling(coupling: &CMatrix, frame: Option<&CMatrix>) -> CMatrix {
    let (r, s) = coupling.shape();
    let local = CMatrix::from_blocks(
        &CMatrix::identity(r),
        coupling,
        &CMatrix::zeros(s, r),
        &CMatrix::zeros(s, s),
    );
    match frame {
        Some(w) => CMatrix::product(&[w, &local, &w.adjoint()]),
        None => local,
    }
}

/// Idempotent `[[I, C], [0, 0]]` in a Haar-random orthonormal basis.
///
/// The rank defaults to a uniform draw from `1..dim` (or 1 when `dim = 1`).
/// With `target_norm = t ≥ 1` the coupling is rescaled so that
/// `‖Q‖² = 1 + ‖C‖² = t²`, and the achieved norm is then measured.
pub fn random_idempotent(spec: &GenSpec) -> Result<CMatrix> {
    let mut rng = spec.rng()?;
    let n = spec.dim;
    let r = match spec.params.rank {
        Some(r) if r > n => return Err(QppError::BadSpec("rank exceeds dim")),
        Some(r) => r,
        None if n == 1 => 1,
        None => 1 + rng.below(n - 1),
    };
    let mut coupling = rng.gaussian_matrix(r, n - r);
    if let Some(t) = spec.params.target_norm {
        if !(t >= 1.0) || !t.is_finite() {
            return Err(QppError::BadSpec("target_norm must be at least 1"));
        }
        let want = (t * t - 1.0).sqrt();
        for _ in 0..4 {
            let have = numkit::operator_norm(&coupling);
            if have == 0.0 {
                if want == 0.0 {
                    break;
                }
                return Err(QppError::BadSpec("target_norm > 1 needs 0 < rank < dim"));
            }
            coupling = coupling.scale_real(want / have);
            if (numkit::operator_norm(&coupling) - want).abs() <= 1e-12 * (1.0 + want) {
                break;
            }
        }
    }
    let w = random_unitary(n, &mut rng);
    let q = idempotent_from_coupling(&coupling, Some(&w));
    if let Some(t) = spec.params.target_norm {
        let got = numkit::operator_norm(&q);
        if (got - t).abs() > 1e-8 {
            return Err(QppError::InvariantViolation {
                what: "target_norm not reached",
                residual: (got - t).abs(),
            });
        }
    }
    Ok(q)
}

/// Which structural features a generated pair exhibits.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PairFeatures {
    /// The `Q0` block is non-zero.
    pub q0_nonzero: bool,
    /// `U` does not map onto `N(P)`.
    pub u_not_surjective: bool,
    /// `A` has spectrum in `(−∞, 0]`.
    pub touches_lower: bool,
    /// `A` has spectrum in `[1, ∞)`.
    pub touches_upper: bool,
}

/// Generated pair plus the block data it was assembled from.
#[derive(Clone, Debug)]
pub struct QuasiPairSample {
    /// The pair.
    pub pair: QuasiPair,
    /// `A` in the generator's coordinates on `R(P)`.
    pub a: CMatrix,
    /// `U` in the generator's coordinates.
    pub u: CMatrix,
    /// `Q0` in the generator's coordinates on `N(P)`.
    pub q0: CMatrix,
    /// Orthonormal basis `[R(P) | N(P)]` used for assembly.
    pub frame: CMatrix,
    /// Feature report.
    pub features: PairFeatures,
}

/// Assembles `F·[[A, −ℓ(A)Uᴴ], [Uℓ(A), U(I−A)Uᴴ + Q0]]·Fᴴ` and
/// `P = F·(I ⊕ 0)·Fᴴ`. Without a frame the standard basis is used.
pub fn quasi_pair_from_blocks(
    a: &CMatrix,
    u: &CMatrix,
    q0: &CMatrix,
    frame: Option<&CMatrix>,
    tol: &Tolerances,
) -> Result<QuasiPair> {
    let k = a.rows();
    let s = q0.rows();
    if !a.is_square() || u.shape() != (s, k) || !q0.is_square() {
        return Err(QppError::BadSpec("block shapes do not fit"));
    }
    let ell = numkit::func_calc(a, FnKind::Ell, tol)?;
    let ia = a.complement();
    let q = CMatrix::from_blocks(
        a,
        &-&(&ell * &u.adjoint()),
        &(u * &ell),
        &(&CMatrix::product(&[u, &ia, &u.adjoint()]) + q0),
    );
    let mut p = CMatrix::zeros(k + s, k + s);
    p.set_block(0, 0, &CMatrix::identity(k));
    let (p, q) = match frame {
        Some(f) => (
            CMatrix::product(&[f, &p, &f.adjoint()]).hermitian_part(),
            CMatrix::product(&[f, &q, &f.adjoint()]),
        ),
        None => (p, q),
    };
    Ok(QuasiPair { p, q, dim: k + s })
}

#[derive(Clone, Copy)]
enum Branch {
    Lower,
    Zero,
    One,
    Upper,
}

/// Quasi-projection pair built from random canonical block data.
///
/// `A` has eigenvalues drawn from `[−5, −gap] ∪ {0} ∪ {1} ∪ [1+gap, 5]`,
/// `U` is a partial isometry with initial space `R(A² − A)`, and `Q0` a random
/// projection orthogonal to `R(U)`. `rank` fixes `dim R(P)`; it must lie in
/// `1..dim`.
pub fn random_quasi_pair(spec: &GenSpec) -> Result<QuasiPairSample> {
    let mut rng = spec.rng()?;
    let n = spec.dim;
    if n < 2 {
        return Err(QppError::BadSpec("quasi pairs need dim >= 2"));
    }
    let gap = spec.params.gap.unwrap_or(0.05);
    if !(gap > 0.0 && gap < 5.0) {
        return Err(QppError::BadSpec("gap must lie in (0, 5)"));
    }
    let k = match spec.params.rank {
        Some(r) if r == 0 || r >= n => return Err(QppError::BadSpec("rank must lie in 1..dim")),
        Some(r) => r,
        None => 1 + rng.below(n - 1),
    };
    let s = n - k;

    let mut branches: Vec<Branch> = (0..k)
        .map(|_| match rng.below(20) {
            0..=6 => Branch::Lower,
            7..=9 => Branch::Zero,
            10..=12 => Branch::One,
            _ => Branch::Upper,
        })
        .collect();
    // R(A² − A) must fit inside N(P).
    let mut coupled = branches
        .iter()
        .filter(|b| matches!(b, Branch::Lower | Branch::Upper))
        .count();
    for (i, b) in branches.iter_mut().enumerate() {
        if coupled <= s {
            break;
        }
        if matches!(b, Branch::Lower | Branch::Upper) {
            *b = if i % 2 == 0 {
                Branch::One
            } else {
                Branch::Zero
            };
            coupled -= 1;
        }
    }
    let eig: Vec<f64> = branches
        .iter()
        .map(|b| match b {
            Branch::Lower => rng.uniform_in(-5.0, -gap),
            Branch::Zero => 0.0,
            Branch::One => 1.0,
            Branch::Upper => rng.uniform_in(1.0 + gap, 5.0),
        })
        .collect();

    let basis_a = random_unitary(k, &mut rng);
    let a = CMatrix::product(&[&basis_a, &CMatrix::diag_real(&eig), &basis_a.adjoint()])
        .hermitian_part();
    let idx: Vec<usize> = (0..k)
        .filter(|&i| matches!(branches[i], Branch::Lower | Branch::Upper))
        .collect();
    let x = basis_a.select_columns(&idx);
    let y_full = random_unitary(s, &mut rng);
    let y = y_full.column_range(0, coupled);
    let u = &y * &x.adjoint();
    let free = s - coupled;
    let q0_rank = if free == 0 { 0 } else { rng.below(free + 1) };
    let z = y_full.column_range(coupled, coupled + q0_rank);
    let q0 = (&z * &z.adjoint()).hermitian_part();

    let frame = random_unitary(n, &mut rng);
    let tol = Tolerances::default();
    let pair = quasi_pair_from_blocks(&a, &u, &q0, Some(&frame), &tol)?;
    let features = PairFeatures {
        q0_nonzero: q0_rank > 0,
        u_not_surjective: coupled < s,
        touches_lower: eig.iter().any(|&x| x <= 0.0),
        touches_upper: eig.iter().any(|&x| x >= 1.0),
    };
    Ok(QuasiPairSample {
        pair,
        a,
        u,
        q0,
        frame,
        features,
    })
}

/// Quadratic operator plus the data it was built from.
#[derive(Clone, Debug)]
pub struct QuadraticSample {
    /// The operator `W·(aI ⊕ bI ⊕ [[aI, B], [0, bI]])·Wᴴ`.
    pub t: CMatrix,
    /// First root.
    pub a: C64,
    /// Second root.
    pub b: C64,
    /// `(k1, k2, k3)`.
    pub dims: (usize, usize, usize),
    /// Positive definite coupling block.
    pub b_block: CMatrix,
    /// Conjugating unitary.
    pub w: CMatrix,
}

/// `a·I_{k1} ⊕ b·I_{k2} ⊕ [[a·I, B], [0, b·I]]`.
pub fn quadratic_block_form(a: C64, b: C64, k1: usize, k2: usize, b_block: &CMatrix) -> CMatrix {
    let k3 = b_block.rows();
    let ai = CMatrix::identity(k3).scale(a);
    let bi = CMatrix::identity(k3).scale(b);
    let tail = CMatrix::from_blocks(&ai, b_block, &CMatrix::zeros(k3, k3), &bi);
    CMatrix::block_diag(&[
        &CMatrix::identity(k1).scale(a),
        &CMatrix::identity(k2).scale(b),
        &tail,
    ])
}

/// Random quadratic operator. Roots default to complex normal draws and the
/// block sizes to a random split of `dim`; `B` has eigenvalues in `[0.5, 3]`.
pub fn random_quadratic(spec: &GenSpec) -> Result<QuadraticSample> {
    let mut rng = spec.rng()?;
    let n = spec.dim;
    let (k1, k2, k3) = match spec.params.blocks {
        Some((k1, k2, k3)) => {
            if k1 + k2 + 2 * k3 != n {
                return Err(QppError::BadSpec("k1 + k2 + 2*k3 must equal dim"));
            }
            (k1, k2, k3)
        }
        None => {
            let k3 = rng.below(n / 2 + 1);
            let rest = n - 2 * k3;
            let k1 = rng.below(rest + 1);
            (k1, rest - k1, k3)
        }
    };
    let a = match spec.params.a {
        Some(a) => a,
        None => rng.complex_gaussian().scale(2.0),
    };
    let b = match spec.params.b {
        Some(b) => b,
        None => rng.complex_gaussian().scale(2.0),
    };
    if !(a.re.is_finite() && a.im.is_finite() && b.re.is_finite() && b.im.is_finite()) {
        return Err(QppError::BadSpec("roots must be finite"));
    }
    let eig: Vec<f64> = (0..k3).map(|_| rng.uniform_in(0.5, 3.0)).collect();
    let x = random_unitary(k3, &mut rng);
    let b_block = CMatrix::product(&[&x, &CMatrix::diag_real(&eig), &x.adjoint()]).hermitian_part();
    let w = random_unitary(n, &mut rng);
    let core = quadratic_block_form(a, b, k1, k2, &b_block);
    let t = CMatrix::product(&[&w, &core, &w.adjoint()]);
    Ok(QuadraticSample {
        t,
        a,
        b,
        dims: (k1, k2, k3),
        b_block,
        w,
    })
}

/// Output of [`generate`].
#[derive(Clone, Debug)]
pub enum Generated {
    /// From [`random_projection`].
    Projection(CMatrix),
    /// From [`random_idempotent`].
    Idempotent(CMatrix),
    /// From [`random_quasi_pair`].
    QuasiPair(QuasiPairSample),
    /// From [`random_quadratic`].
    Quadratic(QuadraticSample),
}

/// Dispatches on `spec.kind`.
pub fn generate(spec: &GenSpec) -> Result<Generated> {
    Ok(match spec.kind {
        GenKind::Projection => Generated::Projection(random_projection(spec)?),
        GenKind::Idempotent => Generated::Idempotent(random_idempotent(spec)?),
        GenKind::QuasiPair => Generated::QuasiPair(random_quasi_pair(spec)?),
        GenKind::Quadratic => Generated::Quadratic(random_quadratic(spec)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::operator_norm;

    fn sq_residual(q: &CMatrix) -> f64 {
        operator_norm(&(&(q * q) - q))
    }

    #[test]
    fn projection_edge_ranks() {
        let p = random_projection(&GenSpec::new(GenKind::Projection, 3, 1).rank(0)).unwrap();
        assert_eq!(p.max_abs(), 0.0);
        let p = random_projection(&GenSpec::new(GenKind::Projection, 3, 1).rank(3)).unwrap();
        assert!((&p - &CMatrix::identity(3)).max_abs() < 1e-14);
        assert!(random_projection(&GenSpec::new(GenKind::Projection, 3, 1).rank(4)).is_err());
    }

    #[test]
    fn projection_is_deterministic() {
        let s = GenSpec::new(GenKind::Projection, 4, 7).rank(2);
        let (a, b) = (
            random_projection(&s).unwrap(),
            random_projection(&s).unwrap(),
        );
        assert_eq!(a.data(), b.data());
        assert!(numkit::projection_residual(&a) < 1e-14);
    }

    #[test]
    fn coupling_examples() {
        let q = idempotent_from_coupling(&CMatrix::zeros(1, 1), None);
        assert_eq!(q, CMatrix::diag_real(&[1.0, 0.0]));
        let q = idempotent_from_coupling(&CMatrix::real(&[[1.0]]), None);
        assert_eq!(q, CMatrix::real(&[[1.0, 1.0], [0.0, 0.0]]));
    }

    #[test]
    fn idempotent_target_norm() {
        let s = GenSpec::new(GenKind::Idempotent, 2, 3).target_norm(5f64.sqrt());
        let q = random_idempotent(&s).unwrap();
        assert!((operator_norm(&q) - 5f64.sqrt()).abs() < 1e-8);
        assert!(sq_residual(&q) < 1e-12);
    }

    #[test]
    fn quasi_pair_example_from_blocks() {
        let t = Tolerances::default();
        let qp = quasi_pair_from_blocks(
            &CMatrix::real(&[[2.0]]),
            &CMatrix::real(&[[1.0]]),
            &CMatrix::zeros(1, 1),
            None,
            &t,
        )
        .unwrap();
        let r2 = 2f64.sqrt();
        let want = CMatrix::real(&[[2.0, -r2], [r2, -1.0]]);
        assert!((&qp.q - &want).max_abs() < 1e-14);
        assert_eq!(qp.p, CMatrix::diag_real(&[1.0, 0.0]));
    }

    #[test]
    fn quasi_pair_identity_block_gives_commuting_projections() {
        let t = Tolerances::default();
        let qp = quasi_pair_from_blocks(
            &CMatrix::identity(2),
            &CMatrix::zeros(1, 2),
            &CMatrix::zeros(1, 1),
            None,
            &t,
        )
        .unwrap();
        assert_eq!(qp.q, qp.p);
    }

    #[test]
    fn quasi_pairs_are_exact_and_cover_features() {
        let mut seen = PairFeatures::default();
        let mut both = false;
        for seed in 0..60 {
            let s = random_quasi_pair(&GenSpec::new(
                GenKind::QuasiPair,
                2 + (seed as usize % 7),
                seed,
            ))
            .unwrap();
            let (p, q) = (&s.pair.p, &s.pair.q);
            assert!(sq_residual(q) < 1e-10 * (1.0 + operator_norm(q).powi(2)));
            let r = p.reflection();
            let qh = CMatrix::product(&[&r, q, &r]);
            assert!(operator_norm(&(&qh - &q.adjoint())) < 1e-10 * (1.0 + operator_norm(q)));
            let f = s.features;
            seen.q0_nonzero |= f.q0_nonzero;
            seen.u_not_surjective |= f.u_not_surjective;
            both |= f.touches_lower && f.touches_upper;
        }
        assert!(seen.q0_nonzero && seen.u_not_surjective && both);
    }

    #[test]
    fn quadratic_examples() {
        let s = GenSpec::new(GenKind::Quadratic, 3, 5)
            .roots(C64::new(1.0, 0.0), C64::new(-2.0, 0.5))
            .blocks(2, 1, 0);
        let q = random_quadratic(&s).unwrap();
        let t = &q.t;
        let ann = &t.shift(-q.a) * &t.shift(-q.b);
        assert!(ann.max_abs() < 1e-10);
        assert_eq!(random_quadratic(&s).unwrap().t.data(), t.data());

        let f = quadratic_block_form(
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
            0,
            0,
            &CMatrix::real(&[[1.0]]),
        );
        assert_eq!(f, CMatrix::real(&[[0.0, 1.0], [0.0, 1.0]]));
        assert!(random_quadratic(&GenSpec::new(GenKind::Quadratic, 3, 0).blocks(1, 1, 1)).is_err());
    }

    #[test]
    fn gaussian_moments_are_sane() {
        let mut rng = Rng::new(42);
        let n = 20000;
        let xs: Vec<f64> = (0..n).map(|_| rng.gaussian()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.05);
        assert!((var - 1.0).abs() < 0.05);
    }
}

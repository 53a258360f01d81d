//! Block decompositions of quasi-projection pairs.
//!
//! Block data (`A`, `U`, `Q0`, ...) is always stored in the coordinates of the
//! orthonormal bases it lives on, never as ambient-size operators.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::check::Check;
use crate::error::{QppError, Result, TrivialSide};
use crate::idempotent::{self, is_quasi_pair};
use crate::matrix::{CMatrix, C64};
use crate::numkit::{
    self, gap_eig, operator_norm, singular_values, FnKind, SubspaceBasis, Tolerances,
};

const ONE: C64 = C64::new(1.0, 0.0);

/// Canonical 2×2 data of an idempotent relative to a projection `P`:
/// `Q ≅ [[A, −ℓ(A)Uᴴ], [Uℓ(A), U(I − A)Uᴴ + Q0]]` over `R(P) ⊕ N(P)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Canonical2x2 {
    /// Basis of `R(P)`.
    pub range_p: SubspaceBasis,
    /// Basis of `N(P)`.
    pub null_p: SubspaceBasis,
    /// Hermitian block on `R(P)`.
    pub a: CMatrix,
    /// Partial isometry `R(P) → N(P)`.
    pub u: CMatrix,
    /// Projection on `N(P)` with `UᴴQ0 = 0`.
    pub q0: CMatrix,
}

/// Blocks of `P_R(Q)` and `P_N(Q)` derived from a [`Canonical2x2`].
#[derive(Clone, Debug, PartialEq)]
pub struct RangeNullBlocks {
    /// `A(2A − I)⁻¹`, a positive contraction.
    pub b: CMatrix,
    /// `U·f(A)`.
    pub u1: CMatrix,
    /// Copied from the canonical data.
    pub q0: CMatrix,
    /// `I − U1U1ᴴ − Q0`.
    pub q1: CMatrix,
}

/// Six mutually orthogonal subspaces that simultaneously block-diagonalize a
/// quasi-projection pair, with the coupling data on `H5 ⊕ H6`.
#[derive(Clone, Debug, PartialEq)]
pub struct SixSpace {
    /// `R(P)∩R(Q)`, `R(P)∩N(Q)`, `N(P)∩R(Q)`, `N(P)∩N(Q)`, `R(PQ(I−P))`,
    /// `R((I−P)QP)` in that order.
    pub h: [SubspaceBasis; 6],
    /// Hermitian block on `H5`.
    pub a: CMatrix,
    /// Unitary `H5 → H6`.
    pub u: CMatrix,
}

/// The four conditions that are each equivalent to `U` being unitary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UnitarityCriteria {
    /// `N(A) = N(I − A) = {0}` and `N(Uᴴ) = {0}`.
    pub kernels_and_u_star: bool,
    /// `N(A² − A) = {0}` and `N(Uᴴ) = {0}`.
    pub coupling_kernel_and_u_star: bool,
    /// `U` is unitary.
    pub u_unitary: bool,
    /// `N(A) = N(I − A) = {0}` and `N(Q22) = N(I − Q22) = {0}`.
    pub kernels_of_diagonal_blocks: bool,
}

impl UnitarityCriteria {
    /// The four values coincide.
    pub fn all_equal(&self) -> bool {
        let v = [
            self.kernels_and_u_star,
            self.coupling_kernel_and_u_star,
            self.u_unitary,
            self.kernels_of_diagonal_blocks,
        ];
        v.iter().all(|&x| x == v[0])
    }
}

fn frame_of(parts: &[&SubspaceBasis]) -> CMatrix {
    let n = parts[0].ambient_dim;
    let cols: Vec<&CMatrix> = parts.iter().map(|p| &p.basis).collect();
    CMatrix::hstack(n, &cols)
}

fn conjugate(frame: &CMatrix, local: &CMatrix) -> CMatrix {
    CMatrix::product(&[frame, local, &frame.adjoint()])
}

// Eigenvectors of a clamped gap spectrum belonging to values off {0, 1}.
fn coupling_projection(a: &CMatrix, tol: &Tolerances) -> Result<CMatrix> {
    let e = gap_eig(a, tol)?;
    Ok(e.map(|x| if x == 0.0 || x == 1.0 { 0.0 } else { 1.0 }))
}

// `m` has trivial kernel: at most as many columns as rows and the smallest
// singular value above spec_tol.
fn injective(m: &CMatrix, tol: &Tolerances) -> bool {
    if m.cols() == 0 {
        return true;
    }
    if m.cols() > m.rows() {
        return false;
    }
    singular_values(m).last().copied().unwrap_or(0.0) > tol.spec_tol
}

fn non_trivial_split(p: &CMatrix, tol: &Tolerances) -> Result<(SubspaceBasis, SubspaceBasis)> {
    let range = numkit::range_basis_floor(p, 1.0, tol);
    let null = numkit::range_basis_floor(&p.complement(), 1.0, tol);
    if range.dim() == 0 {
        return Err(QppError::TrivialProjection {
            side: TrivialSide::Zero,
        });
    }
    if null.dim() == 0 {
        return Err(QppError::TrivialProjection {
            side: TrivialSide::Identity,
        });
    }
    if range.dim() + null.dim() != p.rows() {
        return Err(QppError::DimensionMismatch {
            expected: p.rows(),
            found: range.dim() + null.dim(),
        });
    }
    Ok((range, null))
}

fn require_quasi_pair(p: &CMatrix, q: &CMatrix, tol: &Tolerances) -> Result<()> {
    if !is_quasi_pair(p, q, tol)? {
        return Err(QppError::NotQuasiPair {
            residual: idempotent::quasi_pair_residual(p, q),
        });
    }
    Ok(())
}

impl Canonical2x2 {
    /// Canonical data on the standard splitting `C^k ⊕ C^s`.
    pub fn standard(a: CMatrix, u: CMatrix, q0: CMatrix) -> Self {
        let (k, s) = (a.rows(), q0.rows());
        let id = CMatrix::identity(k + s);
        Canonical2x2 {
            range_p: SubspaceBasis::new(id.column_range(0, k)),
            null_p: SubspaceBasis::new(id.column_range(k, k + s)),
            a,
            u,
            q0,
        }
    }

    /// `[R(P) | N(P)]`.
    pub fn frame(&self) -> CMatrix {
        frame_of(&[&self.range_p, &self.null_p])
    }

    /// The projection `P`.
    pub fn p(&self) -> CMatrix {
        self.range_p.projector()
    }

    /// `Q22 = U(I − A)Uᴴ + Q0`.
    pub fn q22(&self) -> CMatrix {
        &CMatrix::product(&[&self.u, &self.a.complement(), &self.u.adjoint()]) + &self.q0
    }

    /// Residuals of the defining side conditions.
    pub fn checks(&self, tol: &Tolerances) -> Result<Vec<Check>> {
        let (k, s) = (self.range_p.dim(), self.null_p.dim());
        if self.a.shape() != (k, k) || self.u.shape() != (s, k) || self.q0.shape() != (s, s) {
            return Err(QppError::ShapeMismatch {
                op: "Canonical2x2",
                found: self.u.shape(),
            });
        }
        let mut out = Vec::new();
        let herm = operator_norm(&(&self.a - &self.a.adjoint()));
        out.push(Check::at_most(
            "a_hermitian",
            herm,
            tol.eq_tol * (1.0 + operator_norm(&self.a)),
        ));
        let coupling = coupling_projection(&self.a, tol)?;
        let uu = &self.u.adjoint() * &self.u;
        out.push(Check::at_most(
            "ran_u_star",
            operator_norm(&(&uu - &coupling)),
            tol.eq_tol,
        ));
        out.push(Check::at_most(
            "u_star_q0",
            operator_norm(&(&self.u.adjoint() * &self.q0)),
            tol.eq_tol,
        ));
        out.push(Check::at_most(
            "q0_projection",
            numkit::projection_residual(&self.q0),
            tol.eq_tol,
        ));
        Ok(out)
    }

    fn validate(&self, tol: &Tolerances) -> Result<()> {
        for c in self.checks(tol)? {
            if !c.pass {
                return Err(QppError::InvariantViolation {
                    what: canonical_check_label(&c.name),
                    residual: c.value,
                });
            }
        }
        Ok(())
    }

    fn local_q(&self, tol: &Tolerances) -> Result<CMatrix> {
        let ell = numkit::func_calc(&self.a, FnKind::Ell, tol)?;
        Ok(CMatrix::from_blocks(
            &self.a,
            &-&(&ell * &self.u.adjoint()),
            &(&self.u * &ell),
            &self.q22(),
        ))
    }
}

fn canonical_check_label(name: &str) -> &'static str {
    match name {
        "a_hermitian" => "A is Hermitian",
        "ran_u_star" => "R(U*) equals the closure of R(A^2 - A)",
        "u_star_q0" => "U* Q0 = 0",
        _ => "Q0 is a projection",
    }
}

/// Canonical 2×2 data of `Q` relative to a non-trivial projection `P`.
///
/// `A` is the compression of `Q` to `R(P)`; the lower-left block is factored
/// as `U·ℓ(A)` by polar decomposition and `Q0 = (I − UUᴴ)Q22`.
pub fn canonical_2x2(p: &CMatrix, q: &CMatrix, tol: &Tolerances) -> Result<Canonical2x2> {
    require_quasi_pair(p, q, tol)?;
    let (range_p, null_p) = non_trivial_split(p, tol)?;
    let a = range_p.compress(q).hermitian_part();
    numkit::gap_eig(&a, tol)?;
    let q21 = CMatrix::product(&[&null_p.basis.adjoint(), q, &range_p.basis]);
    let polar = numkit::polar_decomposition_floor(&q21, 1.0 + operator_norm(q), tol);
    let u = polar.u;
    let q22 = null_p.compress(q);
    let q0 = (&(&u * &u.adjoint()).complement() * &q22).hermitian_part();
    let c = Canonical2x2 {
        range_p,
        null_p,
        a,
        u,
        q0,
    };
    c.validate(tol)?;
    Ok(c)
}

/// Rebuilds the ambient idempotent from canonical data.
pub fn assemble_canonical(c: &Canonical2x2, tol: &Tolerances) -> Result<CMatrix> {
    c.validate(tol)?;
    Ok(conjugate(&c.frame(), &c.local_q(tol)?))
}

/// `B = A(2A − I)⁻¹`, `U1 = U·f(A)` and `Q1 = I − U1U1ᴴ − Q0`.
pub fn range_null_blocks(c: &Canonical2x2, tol: &Tolerances) -> Result<RangeNullBlocks> {
    c.validate(tol)?;
    let e = gap_eig(&c.a, tol)?;
    let b = e.map(|x| x / (2.0 * x - 1.0));
    let u1 = &c.u * &e.map(|x| FnKind::F.eval(x));
    let q1 = (&(&u1 * &u1.adjoint()) + &c.q0)
        .complement()
        .hermitian_part();
    let blocks = RangeNullBlocks {
        b,
        u1,
        q0: c.q0.clone(),
        q1,
    };
    let bad = [
        operator_norm(&(&blocks.u1.adjoint() * &blocks.q0)),
        operator_norm(&(&blocks.u1.adjoint() * &blocks.q1)),
        numkit::projection_residual(&blocks.q1),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    if bad > tol.eq_tol {
        return Err(QppError::InvariantViolation {
            what: "U1* Q0 = U1* Q1 = 0 with Q1 a projection",
            residual: bad,
        });
    }
    Ok(blocks)
}

// B^{1/2}(I − B)^{1/2} as a function of the spectrum of A.
fn mixing(e: &numkit::Eig) -> CMatrix {
    e.map(|x| {
        let b = x / (2.0 * x - 1.0);
        (b * (1.0 - b)).max(0.0).sqrt()
    })
}

impl RangeNullBlocks {
    /// Ambient `P_R(Q)` assembled from the blocks.
    pub fn assemble_range(&self, c: &Canonical2x2, tol: &Tolerances) -> Result<CMatrix> {
        let e = gap_eig(&c.a, tol)?;
        let mx = mixing(&e);
        let off = &self.u1 * &mx;
        let local = CMatrix::from_blocks(
            &self.b,
            &off.adjoint(),
            &off,
            &(&CMatrix::product(&[&self.u1, &self.b.complement(), &self.u1.adjoint()]) + &self.q0),
        );
        Ok(conjugate(&c.frame(), &local).hermitian_part())
    }

    /// Ambient `P_N(Q)` assembled from the blocks.
    pub fn assemble_null(&self, c: &Canonical2x2, tol: &Tolerances) -> Result<CMatrix> {
        let e = gap_eig(&c.a, tol)?;
        let mx = mixing(&e);
        let off = &self.u1 * &mx;
        let local = CMatrix::from_blocks(
            &self.b.complement(),
            &off.adjoint(),
            &off,
            &(&CMatrix::product(&[&self.u1, &self.b, &self.u1.adjoint()]) + &self.q1),
        );
        Ok(conjugate(&c.frame(), &local).hermitian_part())
    }
}

/// Ambient `m(Q)` from canonical data: `diag(½(I + f(A)), ½U(I − f(A))Uᴴ + Q0)`.
pub fn matched_block(c: &Canonical2x2, tol: &Tolerances) -> Result<CMatrix> {
    c.validate(tol)?;
    let f = numkit::func_calc(&c.a, FnKind::F, tol)?;
    let top = f.shift(ONE).scale_real(0.5);
    let bottom =
        &CMatrix::product(&[&c.u, &f.complement(), &c.u.adjoint()]).scale_real(0.5) + &c.q0;
    let local = CMatrix::block_diag(&[&top, &bottom]);
    Ok(conjugate(&c.frame(), &local).hermitian_part())
}

impl SixSpace {
    /// `[H1 | … | H6]`, a unitary when the decomposition is exact.
    pub fn frame(&self) -> CMatrix {
        let refs: Vec<&SubspaceBasis> = self.h.iter().collect();
        frame_of(&refs)
    }

    /// `(dim H1, …, dim H6)`.
    pub fn dims(&self) -> [usize; 6] {
        let mut d = [0; 6];
        for (i, h) in self.h.iter().enumerate() {
            d[i] = h.dim();
        }
        d
    }

    /// `Q̂ = [[A, −ℓ(A)Uᴴ], [Uℓ(A), U(I − A)Uᴴ]]` on `H5 ⊕ H6`.
    pub fn q_hat(&self, tol: &Tolerances) -> Result<CMatrix> {
        let ell = numkit::func_calc(&self.a, FnKind::Ell, tol)?;
        Ok(CMatrix::from_blocks(
            &self.a,
            &-&(&ell * &self.u.adjoint()),
            &(&self.u * &ell),
            &CMatrix::product(&[&self.u, &self.a.complement(), &self.u.adjoint()]),
        ))
    }

    fn identity_pattern(&self, pattern: [bool; 6], tail: Option<&CMatrix>) -> CMatrix {
        let d = self.dims();
        let mut blocks: Vec<CMatrix> = (0..4)
            .map(|i| {
                if pattern[i] {
                    CMatrix::identity(d[i])
                } else {
                    CMatrix::zeros(d[i], d[i])
                }
            })
            .collect();
        match tail {
            Some(t) => blocks.push(t.clone()),
            None => {
                for i in 4..6 {
                    blocks.push(if pattern[i] {
                        CMatrix::identity(d[i])
                    } else {
                        CMatrix::zeros(d[i], d[i])
                    });
                }
            }
        }
        let refs: Vec<&CMatrix> = blocks.iter().collect();
        conjugate(&self.frame(), &CMatrix::block_diag(&refs))
    }

    /// `P = I ⊕ I ⊕ 0 ⊕ 0 ⊕ I ⊕ 0`.
    pub fn assemble_p(&self) -> CMatrix {
        self.identity_pattern([true, true, false, false, true, false], None)
    }

    /// `Q = I ⊕ 0 ⊕ I ⊕ 0 ⊕ Q̂`.
    pub fn assemble_q(&self, tol: &Tolerances) -> Result<CMatrix> {
        let qh = self.q_hat(tol)?;
        Ok(self.identity_pattern([true, false, true, false, false, false], Some(&qh)))
    }

    /// `‖EᴴE − I‖` for the frame `E`.
    pub fn orthogonality_residual(&self) -> f64 {
        SubspaceBasis::new(self.frame()).orthonormality_residual()
    }

    /// `max(‖P − (P₁ + P₂ + P₅)‖, ‖I − P − (P₃ + P₄ + P₆)‖)`.
    pub fn p_split_residual(&self, p: &CMatrix) -> f64 {
        let pr = &(&self.h[0].projector() + &self.h[1].projector()) + &self.h[4].projector();
        let nr = &(&self.h[2].projector() + &self.h[3].projector()) + &self.h[5].projector();
        operator_norm(&(p - &pr)).max(operator_norm(&(&p.complement() - &nr)))
    }

    /// Structural checks against the pair it was computed from.
    pub fn checks(&self, p: &CMatrix, q: &CMatrix, tol: &Tolerances) -> Result<Vec<Check>> {
        let scale = 1.0 + operator_norm(q);
        let d = self.dims();
        let mut out = vec![Check::at_most(
            "six_orthogonality",
            self.orthogonality_residual(),
            tol.eq_tol,
        )];
        out.push(Check::holds(
            "six_dims_sum",
            d.iter().sum::<usize>() == p.rows(),
        ));
        out.push(Check::holds("six_h5_h6_equal", d[4] == d[5]));
        out.push(Check::at_most(
            "six_p_split",
            self.p_split_residual(p),
            tol.eq_tol,
        ));
        out.push(Check::at_most(
            "six_p_form",
            operator_norm(&(&self.assemble_p() - p)),
            tol.eq_tol,
        ));
        out.push(Check::at_most(
            "six_q_form",
            operator_norm(&(&self.assemble_q(tol)? - q)),
            tol.eq_tol * scale,
        ));
        let u_dev = if d[4] == d[5] {
            let uu = &self.u.adjoint() * &self.u;
            let ww = &self.u * &self.u.adjoint();
            operator_norm(&(&uu - &CMatrix::identity(d[4])))
                .max(operator_norm(&(&ww - &CMatrix::identity(d[5]))))
        } else {
            f64::INFINITY
        };
        out.push(Check::at_most("six_u_unitary", u_dev, tol.eq_tol));
        let hermitian = operator_norm(&(q - &q.adjoint())) <= tol.eq_tol;
        out.push(Check::holds(
            "six_h5_empty_iff_hermitian",
            (d[4] == 0) == hermitian,
        ));
        Ok(out)
    }
}

/// Six-space decomposition of a quasi-projection pair with non-trivial `P`.
pub fn halmos_6x6(p: &CMatrix, q: &CMatrix, tol: &Tolerances) -> Result<SixSpace> {
    require_quasi_pair(p, q, tol)?;
    non_trivial_split(p, tol)?;
    let n = p.rows();
    let pr = idempotent::range_projection(q, tol)?;
    let pn = idempotent::null_projection(q, tol)?;
    let ip = p.complement();
    let h1 = numkit::subspace_intersection(p, &pr, tol)?;
    let h2 = numkit::subspace_intersection(p, &pn, tol)?;
    let h3 = numkit::subspace_intersection(&ip, &pr, tol)?;
    let h4 = numkit::subspace_intersection(&ip, &pn, tol)?;
    let floor = 1.0 + operator_norm(q);
    let h5 = numkit::range_basis_floor(&CMatrix::product(&[p, q, &ip]), floor, tol);
    let h6 = numkit::range_basis_floor(&CMatrix::product(&[&ip, q, p]), floor, tol);
    let found = h1.dim() + h2.dim() + h3.dim() + h4.dim() + h5.dim() + h6.dim();
    if found != n || h5.dim() != h6.dim() {
        return Err(QppError::DimensionMismatch { expected: n, found });
    }
    let a = h5.compress(q).hermitian_part();
    numkit::gap_eig(&a, tol)?;
    let lower = CMatrix::product(&[&h6.basis.adjoint(), q, &h5.basis]);
    let u = numkit::polar_decomposition_floor(&lower, floor, tol).u;
    Ok(SixSpace {
        h: [h1, h2, h3, h4, h5, h6],
        a,
        u,
    })
}

/// Six-space decomposition of the matched pair `(m(Q), Q)`; `H2` and `H3`
/// are empty and `A ⪰ I`.
pub fn matched_4x4(q: &CMatrix, tol: &Tolerances) -> Result<SixSpace> {
    let nq = operator_norm(q);
    if nq <= 1.0 + tol.spec_tol {
        return Err(QppError::IsProjection { norm: nq });
    }
    let m = idempotent::matched_projection(q, tol)?;
    let six = halmos_6x6(&m, q, tol)?;
    let d = six.dims();
    if d[1] != 0 || d[2] != 0 {
        return Err(QppError::InvariantViolation {
            what: "matched pair has empty H2 and H3",
            residual: (d[1] + d[2]) as f64,
        });
    }
    let e = numkit::hermitian_eig(&six.a, tol)?;
    let lowest = e.values.first().copied().unwrap_or(f64::INFINITY);
    if lowest < 1.0 - tol.spec_tol {
        return Err(QppError::InvariantViolation {
            what: "matched pair has A >= I",
            residual: 1.0 - lowest,
        });
    }
    Ok(six)
}

fn matched_tail(six: &SixSpace, local: &CMatrix) -> CMatrix {
    let d = six.dims();
    let blocks = [
        CMatrix::identity(d[0]),
        CMatrix::zeros(d[3], d[3]),
        local.clone(),
    ];
    let frame = frame_of(&[&six.h[0], &six.h[3], &six.h[4], &six.h[5]]);
    conjugate(
        &frame,
        &CMatrix::block_diag(&[&blocks[0], &blocks[1], &blocks[2]]),
    )
}

fn matched_head_swapped(six: &SixSpace, local: &CMatrix) -> CMatrix {
    let d = six.dims();
    let frame = frame_of(&[&six.h[0], &six.h[3], &six.h[4], &six.h[5]]);
    conjugate(
        &frame,
        &CMatrix::block_diag(&[&CMatrix::zeros(d[0], d[0]), &CMatrix::identity(d[3]), local]),
    )
}

// [[X, Y·Uᴴ], [U·Y, U·Z·Uᴴ]] on H5 ⊕ H6.
fn h56_block(u: &CMatrix, x: &CMatrix, y: &CMatrix, z: &CMatrix) -> CMatrix {
    let off = u * y;
    CMatrix::from_blocks(
        x,
        &off.adjoint(),
        &off,
        &CMatrix::product(&[u, z, &u.adjoint()]),
    )
}

/// Ambient `(P_R(Q), P_N(Q))` assembled from the matched 4×4 form with
/// `B = A(2A − I)⁻¹`.
pub fn matched_range_null_4x4(q: &CMatrix, tol: &Tolerances) -> Result<(CMatrix, CMatrix)> {
    let six = matched_4x4(q, tol)?;
    let e = numkit::hermitian_eig(&six.a, tol)?;
    let b = e.map(|x| x / (2.0 * x - 1.0));
    let mx = mixing(&e);
    let ib = b.complement();
    let range = matched_tail(&six, &h56_block(&six.u, &b, &mx, &ib));
    let null = matched_head_swapped(&six, &h56_block(&six.u, &ib, &mx, &b));
    Ok((range.hermitian_part(), null.hermitian_part()))
}

/// `S = (2A − I)⁻²` on `H5` and the ambient supplementary projection
/// assembled from the matched 4×4 form.
pub fn supplementary_4x4(q: &CMatrix, tol: &Tolerances) -> Result<(CMatrix, CMatrix)> {
    let six = matched_4x4(q, tol)?;
    let e = numkit::hermitian_eig(&six.a, tol)?;
    let s = e.map(|x| 1.0 / ((2.0 * x - 1.0) * (2.0 * x - 1.0)));
    let mx = e.map(|x| {
        let t = 1.0 / ((2.0 * x - 1.0) * (2.0 * x - 1.0));
        (t * (1.0 - t)).max(0.0).sqrt()
    });
    let local = h56_block(&six.u, &s, &mx, &s.complement());
    Ok((s, matched_tail(&six, &local).hermitian_part()))
}

/// Evaluates the four equivalent unitarity conditions on canonical data.
pub fn unitarity_criteria(c: &Canonical2x2, tol: &Tolerances) -> UnitarityCriteria {
    let a = &c.a;
    let ia = a.complement();
    let a_kernels = injective(a, tol) && injective(&ia, tol);
    let u_star = injective(&c.u.adjoint(), tol);
    let coupling = &(a * a) - a;
    let (k, s) = c.u.shape();
    let u_unitary = k == s && {
        let dev1 = operator_norm(&(&(&c.u.adjoint() * &c.u) - &CMatrix::identity(s)));
        let dev2 = operator_norm(&(&(&c.u * &c.u.adjoint()) - &CMatrix::identity(k)));
        dev1.max(dev2) <= tol.eq_tol
    };
    let q22 = c.q22();
    UnitarityCriteria {
        kernels_and_u_star: a_kernels && u_star,
        coupling_kernel_and_u_star: injective(&coupling, tol) && u_star,
        u_unitary,
        kernels_of_diagonal_blocks: a_kernels
            && injective(&q22, tol)
            && injective(&q22.complement(), tol),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::idempotent::{matched_projection, null_projection, range_projection};

    const R2: f64 = core::f64::consts::SQRT_2;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn q11() -> CMatrix {
        CMatrix::real(&[[1.0, 1.0], [0.0, 0.0]])
    }

    fn near(a: &CMatrix, b: &CMatrix, eps: f64) {
        let d = operator_norm(&(a - b));
        assert!(d <= eps, "difference {d:e}\n{a:?}\n{b:?}");
    }

    #[test]
    fn canonical_commuting_projections() {
        let t = tol();
        let p = CMatrix::diag_real(&[1.0, 0.0]);
        let c = canonical_2x2(&p, &p, &t).unwrap();
        near(&c.a, &CMatrix::identity(1), 1e-14);
        assert_eq!(c.u.max_abs(), 0.0);
        near(&c.q0, &CMatrix::zeros(1, 1), 1e-14);
        near(&assemble_canonical(&c, &t).unwrap(), &p, 1e-14);
    }

    #[test]
    fn canonical_matched_example() {
        let t = tol();
        let m = matched_projection(&q11(), &t).unwrap();
        let c = canonical_2x2(&m, &q11(), &t).unwrap();
        let a = c.a[(0, 0)].re;
        assert!((a - (1.0 + R2) / 2.0).abs() < 1e-12);
        assert!((2.0 * a - 1.0 - operator_norm(&q11())).abs() < 1e-12);
        assert!((c.u[(0, 0)].norm() - 1.0).abs() < 1e-12);
        assert!(c.q0.max_abs() < 1e-12);
        near(&assemble_canonical(&c, &t).unwrap(), &q11(), 1e-12);
    }

    #[test]
    fn canonical_rejects_bad_input() {
        let t = tol();
        assert!(matches!(
            canonical_2x2(&CMatrix::diag_real(&[1.0, 0.0]), &q11(), &t),
            Err(QppError::NotQuasiPair { .. })
        ));
        assert_eq!(
            canonical_2x2(&CMatrix::zeros(2, 2), &CMatrix::zeros(2, 2), &t),
            Err(QppError::TrivialProjection {
                side: TrivialSide::Zero
            })
        );
        assert_eq!(
            canonical_2x2(&CMatrix::identity(2), &CMatrix::identity(2), &t),
            Err(QppError::TrivialProjection {
                side: TrivialSide::Identity
            })
        );
    }

    #[test]
    fn assemble_scalar_example() {
        let t = tol();
        let c = Canonical2x2::standard(
            CMatrix::real(&[[2.0]]),
            CMatrix::real(&[[1.0]]),
            CMatrix::zeros(1, 1),
        );
        let q = assemble_canonical(&c, &t).unwrap();
        near(&q, &CMatrix::real(&[[2.0, -R2], [R2, -1.0]]), 1e-14);
        assert!((operator_norm(&q) - 3.0).abs() < 1e-12);
        assert!(idempotent::is_idempotent(&q, &t));
        assert!(is_quasi_pair(&c.p(), &q, &t).unwrap());

        let b = range_null_blocks(&c, &t).unwrap();
        near(&b.b, &CMatrix::real(&[[2.0 / 3.0]]), 1e-14);
    }

    #[test]
    fn assemble_rejects_broken_data() {
        let t = tol();
        // U must vanish on N(A² − A); here A = 1 so U = [1] is not allowed.
        let c = Canonical2x2::standard(
            CMatrix::real(&[[1.0]]),
            CMatrix::real(&[[1.0]]),
            CMatrix::zeros(1, 1),
        );
        assert!(matches!(
            assemble_canonical(&c, &t),
            Err(QppError::InvariantViolation { .. })
        ));
    }

    #[test]
    fn range_null_blocks_examples() {
        let t = tol();
        let p = CMatrix::diag_real(&[0.0, 1.0, 1.0]);
        let c = canonical_2x2(&p, &p, &t).unwrap();
        let b = range_null_blocks(&c, &t).unwrap();
        near(&b.b, &CMatrix::identity(2), 1e-14);
        near(&b.assemble_range(&c, &t).unwrap(), &p, 1e-14);
        near(&b.assemble_null(&c, &t).unwrap(), &p.complement(), 1e-14);

        let m = matched_projection(&q11(), &t).unwrap();
        let c = canonical_2x2(&m, &q11(), &t).unwrap();
        let b = range_null_blocks(&c, &t).unwrap();
        let a = (1.0 + R2) / 2.0;
        assert!((b.b[(0, 0)].re - a / R2).abs() < 1e-12);
        assert!((b.b[(0, 0)].re - 0.853553).abs() < 1e-6);
        near(
            &b.assemble_range(&c, &t).unwrap(),
            &CMatrix::diag_real(&[1.0, 0.0]),
            1e-12,
        );
        near(
            &b.assemble_null(&c, &t).unwrap(),
            &null_projection(&q11(), &t).unwrap(),
            1e-12,
        );
    }

    #[test]
    fn matched_block_examples() {
        let t = tol();
        let c = Canonical2x2::standard(
            CMatrix::diag_real(&[2.0, -3.0]),
            CMatrix::identity(2),
            CMatrix::zeros(2, 2),
        );
        let m = matched_block(&c, &t).unwrap();
        near(&m, &CMatrix::diag_real(&[1.0, 0.0, 0.0, 1.0]), 1e-14);
        let q = assemble_canonical(&c, &t).unwrap();
        near(&matched_projection(&q, &t).unwrap(), &m, 1e-9);

        // σ(A) ⊆ [1, ∞) gives diag(I, Q0).
        let c = Canonical2x2::standard(
            CMatrix::diag_real(&[1.0, 4.0]),
            CMatrix::real(&[[0.0, 1.0], [0.0, 0.0]]),
            CMatrix::diag_real(&[0.0, 1.0]),
        );
        let m = matched_block(&c, &t).unwrap();
        near(&m, &CMatrix::diag_real(&[1.0, 1.0, 0.0, 1.0]), 1e-14);
    }

    #[test]
    fn six_space_examples() {
        let t = tol();
        let p = CMatrix::diag_real(&[1.0, 0.0]);
        let s = halmos_6x6(&p, &p, &t).unwrap();
        assert_eq!(s.dims(), [1, 0, 0, 1, 0, 0]);
        let s = halmos_6x6(&p, &CMatrix::diag_real(&[0.0, 1.0]), &t).unwrap();
        assert_eq!(s.dims(), [0, 1, 1, 0, 0, 0]);

        let m = matched_projection(&q11(), &t).unwrap();
        let s = halmos_6x6(&m, &q11(), &t).unwrap();
        assert_eq!(s.dims(), [0, 0, 0, 0, 1, 1]);
        assert!((s.a[(0, 0)].re - (1.0 + R2) / 2.0).abs() < 1e-12);
        for c in s.checks(&m, &q11(), &t).unwrap() {
            assert!(c.pass, "{c:?}");
        }
        assert!(matches!(
            halmos_6x6(&CMatrix::zeros(2, 2), &q11(), &t),
            Err(QppError::NotQuasiPair { .. })
        ));
    }

    fn block_example() -> CMatrix {
        CMatrix::block_diag(&[&CMatrix::diag_real(&[1.0, 0.0]), &q11()])
    }

    #[test]
    fn matched_four_examples() {
        let t = tol();
        let s = matched_4x4(&q11(), &t).unwrap();
        assert_eq!(s.dims(), [0, 0, 0, 0, 1, 1]);
        let s = matched_4x4(&block_example(), &t).unwrap();
        assert_eq!(s.dims(), [1, 0, 0, 1, 1, 1]);
        assert!(matches!(
            matched_4x4(&CMatrix::diag_real(&[1.0, 0.0]), &t),
            Err(QppError::IsProjection { .. })
        ));
    }

    #[test]
    fn matched_range_null_examples() {
        let t = tol();
        let (pr, _) = matched_range_null_4x4(&q11(), &t).unwrap();
        near(&pr, &CMatrix::diag_real(&[1.0, 0.0]), 1e-12);

        let q = CMatrix::real(&[[1.0, 2.0], [0.0, 0.0]]);
        let (_, pn) = matched_range_null_4x4(&q, &t).unwrap();
        // N(Q) = span(2, −1).
        let line = CMatrix::real(&[[0.8, -0.4], [-0.4, 0.2]]);
        near(&pn, &line, 1e-12);

        let q = block_example();
        let (pr, pn) = matched_range_null_4x4(&q, &t).unwrap();
        near(&pr, &range_projection(&q, &t).unwrap(), 1e-12);
        near(&pn, &null_projection(&q, &t).unwrap(), 1e-12);
    }

    #[test]
    fn supplementary_four_examples() {
        let t = tol();
        let (s, sq) = supplementary_4x4(&q11(), &t).unwrap();
        assert!((s[(0, 0)].re - 0.5).abs() < 1e-12);
        let want = matched_projection(&CMatrix::real(&[[1.0, -1.0], [0.0, 0.0]]), &t).unwrap();
        near(&sq, &want, 1e-12);

        let (s, _) = supplementary_4x4(&CMatrix::real(&[[1.0, 2.0], [0.0, 0.0]]), &t).unwrap();
        assert!((s[(0, 0)].re - 0.2).abs() < 1e-12);

        let (s, _) = supplementary_4x4(&block_example(), &t).unwrap();
        assert!((s[(0, 0)].re - 0.5).abs() < 1e-12);
    }

    #[test]
    fn unitarity_examples() {
        let t = tol();
        let m = matched_projection(&q11(), &t).unwrap();
        let c = canonical_2x2(&m, &q11(), &t).unwrap();
        let u = unitarity_criteria(&c, &t);
        assert!(u.u_unitary && u.all_equal(), "{u:?}");

        let p = CMatrix::diag_real(&[1.0, 0.0, 0.0]);
        let c = canonical_2x2(&p, &p, &t).unwrap();
        let u = unitarity_criteria(&c, &t);
        assert!(!u.u_unitary && u.all_equal(), "{u:?}");
    }
}

//! Constructive calculus for idempotents and quasi-projection pairs on
//! finite-dimensional complex Hilbert space.
//!
//! Every operator is a dense [`CMatrix`]. The crate provides
//!
//! * [`numkit`]: the numerical kernel (Hermitian eigensolver, SVD,
//!   Moore-Penrose inverse, polar decomposition, functional calculus,
//!   subspace algebra);
//! * [`idempotent`]: idempotent/projection predicates, the range, null and
//!   matched projections of an idempotent, reconstruction formulas and the
//!   norm identities of quasi-projection pairs;
//! * [`decomp`]: the canonical 2×2 representation of a quasi-projection
//!   pair, the derived blocks of the range/null/matched projections, the
//!   Halmos-like six-space decomposition and its matched-pair
//!   specialisations;
//! * [`supp`]: the supplementary projection, Murray-von Neumann witnesses and
//!   the reconstruction of an idempotent from its matched and supplementary
//!   projections;
//! * [`quadop`]: unitary canonical forms of quadratic operators;
//! * [`gen`]: seeded generators for all of the above.
//!
//! The crate is `no_std` and only needs `alloc`.
#![no_std]
#![deny(missing_docs)]
// `!(x <= y)` is used on purpose so that NaN fails the comparison.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod check;
mod error;
mod matrix;

pub mod decomp;
pub mod gen;
pub mod idempotent;
pub mod numkit;
pub mod quadop;
pub mod supp;

pub use check::{all_pass, Check, Relation};
pub use error::{QppError, Result, TrivialSide};
pub use matrix::{CMatrix, C64};
pub use numkit::{FnKind, SubspaceBasis, Tolerances};

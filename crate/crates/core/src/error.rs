use core::fmt;

/// Which trivial projection was supplied where a non-trivial one is required.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrivialSide {
    /// `P = 0`.
    Zero,
    /// `P = I`.
    Identity,
}

/// Errors raised by the numerical kernel and the operator constructions.
#[derive(Clone, Debug, PartialEq)]
pub enum QppError {
    /// Operands have incompatible shapes.
    ShapeMismatch {
        /// Operation that rejected the operands.
        op: &'static str,
        /// Offending shape.
        found: (usize, usize),
    },
    /// A matrix contains NaN or infinite entries.
    NonFinite,
    /// The input of a Hermitian routine is not Hermitian.
    NotHermitian {
        /// `‖M − Mᴴ‖`.
        residual: f64,
    },
    /// An eigenvalue lies strictly inside the forbidden interval `(0, 1)`.
    SpectrumViolation {
        /// The offending eigenvalue.
        eigenvalue: f64,
    },
    /// A matrix expected to be an orthogonal projection is not one.
    NotProjection {
        /// `max(‖P² − P‖, ‖P − Pᴴ‖)`.
        residual: f64,
    },
    /// A matrix expected to be idempotent is not.
    NotIdempotent {
        /// `‖Q² − Q‖`.
        residual: f64,
    },
    /// `(P, Q)` fails `Qᴴ = (2P − I)Q(2P − I)`.
    NotQuasiPair {
        /// Residual of the defining identity.
        residual: f64,
    },
    /// A matrix that must be inverted is numerically singular.
    IllConditioned {
        /// Which inverse failed.
        what: &'static str,
        /// Smallest singular value found.
        min_singular: f64,
    },
    /// Two independent formulas for the same quantity disagree.
    CrossCheckFailure {
        /// Quantity being cross-checked.
        what: &'static str,
        /// Norm of the difference.
        residual: f64,
    },
    /// `dim R(Q) + dim N(Qᴴ)` does not add up to the ambient dimension.
    DegenerateSplit {
        /// `dim R(Q)`.
        range_dim: usize,
        /// `dim N(Qᴴ)`.
        null_dim: usize,
    },
    /// A non-trivial projection was required.
    TrivialProjection {
        /// Which side is trivial.
        side: TrivialSide,
    },
    /// A structural invariant of a decomposition does not hold.
    InvariantViolation {
        /// Which invariant.
        what: &'static str,
        /// Size of the violation.
        residual: f64,
    },
    /// Subspace dimensions do not sum to the ambient dimension.
    DimensionMismatch {
        /// Ambient dimension.
        expected: usize,
        /// Sum of the computed subspace dimensions.
        found: usize,
    },
    /// A non-projection idempotent was required.
    IsProjection {
        /// `‖Q‖`.
        norm: f64,
    },
    /// `S² ≠ 0`.
    NotSquareZero {
        /// `‖S²‖`.
        residual: f64,
    },
    /// No monic polynomial of degree at most two annihilates the operator.
    NotQuadratic {
        /// Best residual found.
        residual: f64,
    },
    /// A generator request is inconsistent.
    BadSpec(&'static str),
}

/// Crate-wide result alias.
pub type Result<T, E = QppError> = core::result::Result<T, E>;

impl QppError {
    /// Stable identifier of the error kind, used in reports.
    pub fn kind(&self) -> &'static str {
        match self {
            QppError::ShapeMismatch { .. } => "ShapeMismatch",
            QppError::NonFinite => "NonFinite",
            QppError::NotHermitian { .. } => "NotHermitian",
            QppError::SpectrumViolation { .. } => "SpectrumViolation",
            QppError::NotProjection { .. } => "NotProjection",
            QppError::NotIdempotent { .. } => "NotIdempotent",
            QppError::NotQuasiPair { .. } => "NotQuasiPair",
            QppError::IllConditioned { .. } => "IllConditioned",
            QppError::CrossCheckFailure { .. } => "CrossCheckFailure",
            QppError::DegenerateSplit { .. } => "DegenerateSplit",
            QppError::TrivialProjection { .. } => "TrivialProjection",
            QppError::InvariantViolation { .. } => "InvariantViolation",
            QppError::DimensionMismatch { .. } => "DimensionMismatch",
            QppError::IsProjection { .. } => "IsProjection",
            QppError::NotSquareZero { .. } => "NotSquareZero",
            QppError::NotQuadratic { .. } => "NotQuadratic",
            QppError::BadSpec(_) => "BadSpec",
        }
    }
}

impl fmt::Display for QppError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QppError::ShapeMismatch { op, found } => {
                write!(f, "{op}: incompatible shape {}x{}", found.0, found.1)
            }
            QppError::NonFinite => write!(f, "matrix has non-finite entries"),
            QppError::NotHermitian { residual } => {
                write!(f, "matrix is not Hermitian (residual {residual:e})")
            }
            QppError::SpectrumViolation { eigenvalue } => {
                write!(
                    f,
                    "eigenvalue {eigenvalue} lies inside the forbidden interval (0, 1)"
                )
            }
            QppError::NotProjection { residual } => {
                write!(
                    f,
                    "matrix is not an orthogonal projection (residual {residual:e})"
                )
            }
            QppError::NotIdempotent { residual } => {
                write!(f, "matrix is not idempotent (residual {residual:e})")
            }
            QppError::NotQuasiPair { residual } => {
                write!(
                    f,
                    "pair is not a quasi-projection pair (residual {residual:e})"
                )
            }
            QppError::IllConditioned { what, min_singular } => {
                write!(
                    f,
                    "{what} is numerically singular (smallest singular value {min_singular:e})"
                )
            }
            QppError::CrossCheckFailure { what, residual } => {
                write!(f, "{what}: independent routes disagree by {residual:e}")
            }
            QppError::DegenerateSplit {
                range_dim,
                null_dim,
            } => {
                write!(
                    f,
                    "dim R(Q) = {range_dim} and dim N(Q*) = {null_dim} do not split the space"
                )
            }
            QppError::TrivialProjection { side } => match side {
                TrivialSide::Zero => write!(f, "projection is trivial: P = 0"),
                TrivialSide::Identity => write!(f, "projection is trivial: P = I"),
            },
            QppError::InvariantViolation { what, residual } => {
                write!(f, "invariant violated: {what} (residual {residual:e})")
            }
            QppError::DimensionMismatch { expected, found } => {
                write!(f, "subspace dimensions sum to {found}, expected {expected}")
            }
            QppError::IsProjection { norm } => {
                write!(f, "idempotent is a projection (norm {norm})")
            }
            QppError::NotSquareZero { residual } => {
                write!(f, "operator is not square-zero (residual {residual:e})")
            }
            QppError::NotQuadratic { residual } => {
                write!(f, "operator is not quadratic (residual {residual:e})")
            }
            QppError::BadSpec(msg) => write!(f, "bad generator spec: {msg}"),
        }
    }
}

impl core::error::Error for QppError {}

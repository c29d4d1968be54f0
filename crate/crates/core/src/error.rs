use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library can report.
///
/// Validation variants describe malformed input; the remaining variants are
/// analysis outcomes that a caller may want to handle (a factorization that
/// was not found, a readout that is not an eraser, ...).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    Dimension {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("matrix is not Hermitian: max |m - m^dagger| = {deviation:e}")]
    NotHermitian { deviation: f64 },
    #[error("matrix is not positive semidefinite: min eigenvalue = {min_eigenvalue:e}")]
    NotPositive { min_eigenvalue: f64 },
    #[error("trace is not one: trace = {trace}")]
    TraceNotOne { trace: f64 },
    #[error("matrix is not unitary: max |U^dagger U - I| = {deviation:e}")]
    NotUnitary { deviation: f64 },
    #[error("embedding is not an isometry: max |W^dagger W - I| = {deviation:e}")]
    NotIsometry { deviation: f64 },
    #[error("vector is not normalized: norm = {norm}")]
    NotNormalized { norm: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("entry ({a1}, {a2}) is undefined: input coherence {coherence:e} vanishes")]
    UndefinedEntry {
        a1: usize,
        a2: usize,
        coherence: f64,
    },
    #[error("conditional state for outcome {outcome} violates positivity on pair ({a1}, {a2}) by {excess:e}")]
    PositivityViolated {
        outcome: usize,
        a1: usize,
        a2: usize,
        excess: f64,
    },
    #[error("Gram matrix is not real and nonnegative: worst entry ({row}, {col}) = {re} + {im}i")]
    GramNotNonnegative {
        row: usize,
        col: usize,
        re: f64,
        im: f64,
    },
    #[error(
        "no nonnegative factorization found: best residual {best_residual:e} > tolerance {tol:e}"
    )]
    FactorizationNotFound { best_residual: f64, tol: f64 },
    #[error("factorization cannot be realized by an isometry: mismatch {mismatch:e}")]
    InconsistentFactorization { mismatch: f64 },
    #[error("no eraser readout found: {0}")]
    NoEraserFound(String),
    #[error("readout is not an eraser: P(m|a) varies by {spread:e}")]
    NotEraser { spread: f64 },
    #[error("uncertainty bound violated: R - D = {excess:e} (seed {seed}, trial {trial})")]
    BoundViolated { excess: f64, seed: u64, trial: u64 },
}

impl Error {
    /// True for errors caused by malformed input rather than by an analysis
    /// that could not be completed.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Dimension { .. }
                | Error::NotHermitian { .. }
                | Error::NotPositive { .. }
                | Error::TraceNotOne { .. }
                | Error::NotUnitary { .. }
                | Error::NotIsometry { .. }
                | Error::NotNormalized { .. }
                | Error::InvalidParameter(_)
        )
    }

    /// Short machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Dimension { .. } => "DimensionError",
            Error::NotHermitian { .. } => "NotHermitian",
            Error::NotPositive { .. } => "NotPositive",
            Error::TraceNotOne { .. } => "TraceNotOne",
            Error::NotUnitary { .. } => "NotUnitary",
            Error::NotIsometry { .. } => "NotIsometry",
            Error::NotNormalized { .. } => "NotNormalized",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::UndefinedEntry { .. } => "UndefinedEntry",
            Error::PositivityViolated { .. } => "PositivityViolated",
            Error::GramNotNonnegative { .. } => "GramNotNonnegative",
            Error::FactorizationNotFound { .. } => "FactorizationNotFound",
            Error::InconsistentFactorization { .. } => "InconsistentFactorization",
            Error::NoEraserFound(_) => "NoEraserFound",
            Error::NotEraser { .. } => "NotEraser",
            Error::BoundViolated { .. } => "BoundViolated",
        }
    }
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("label {0:?} appears in both layouts")]
    LabelCollision(String),

    #[error("label {0:?} not found in layout")]
    UnknownLabel(String),

    #[error("sequence is not a permutation of the layout labels")]
    NotPermutation,

    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),

    #[error("matrix is not Hermitian (max asymmetry {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPositive(f64),

    #[error("trace is {0} but expected {1}")]
    BadTrace(f64, f64),

    #[error("vector norm is {0} but expected 1")]
    NotNormalized(f64),

    #[error("invalid Rényi order {0} (admissible: [1/2,1) ∪ (1,∞) and the 1/∞ tags)")]
    BadAlpha(f64),

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("dimension guard exceeded: {0}")]
    DimensionGuard(String),

    #[error("channel is not trace preserving (residual {0:.3e})")]
    NotTracePreserving(f64),

    #[error("non-signalling condition violated (residual {0:.3e})")]
    NonSignalling(f64),

    #[error("solver failed: {0}")]
    Solver(String),

    #[error("empty feasible region: {0}")]
    EmptyFeasibleRegion(String),

    #[error("configuration error: {0}")]
    Config(String),
}

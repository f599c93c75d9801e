use thiserror::Error;

/// Errors raised anywhere in the core library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("variable index {index} out of range for {vars} variables")]
    VariableOutOfRange { index: usize, vars: usize },

    #[error("multi-index has {got} entries but the jet has {vars} variables")]
    IndexLength { got: usize, vars: usize },

    #[error("multi-index of degree {degree} exceeds jet order {order}")]
    OrderExceeded { degree: usize, order: usize },

    #[error("division by a jet with zero value")]
    DivisionByZero,

    #[error("logarithm of a jet with zero value")]
    LogOfZero,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("metric is singular at this point")]
    SingularMetric,

    #[error("not strictly plurisubharmonic here: {0}")]
    NotPlurisubharmonic(String),

    #[error("density mu vanishes at this point")]
    MuZero,

    #[error("requested order {requested} exceeds registered expansion operators (highest R_{available})")]
    OrderTooHigh { requested: usize, available: usize },

    #[error("invalid quadrature request: {0}")]
    InvalidQuadrature(String),

    #[error("basis degree too high for this weight (condition estimate {estimate:.3e} > {limit:.1e}); reduce degree")]
    IllConditioned { estimate: f64, limit: f64 },

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("point lies outside the usable domain: {0}")]
    OutsideDomain(String),

    #[error("plane cutoff too small: estimated tail mass {tail:.3e} exceeds {limit:.1e}")]
    CutoffTooSmall { tail: f64, limit: f64 },

    #[error("fit needs at least {needed} distinct samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("rank-deficient least-squares system")]
    RankDeficient,

    #[error("unknown model '{0}'")]
    UnknownModel(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("value expected to be real has imaginary part {imag:.3e} (real part {real:.3e})")]
    NotReal { real: f64, imag: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

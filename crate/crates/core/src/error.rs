use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at position {pos}: {message}")]
    Syntax { pos: usize, message: String },

    #[error("unknown identifier `{name}` at position {pos}")]
    UnknownIdentifier { name: String, pos: usize },

    #[error("domain error in `{expr}` at x = {x}")]
    Domain { expr: String, x: f64 },

    /// Adaptive integration ran out of subdivision depth before meeting tolerance.
    #[error("integration depth exhausted on [{a}, {b}] (error estimate {error:e})")]
    DepthExhausted { a: f64, b: f64, error: f64 },

    #[error("kernel is not integrable on (0,1): power exponent k = {k} must exceed -1")]
    NonIntegrableKernel { k: f64 },

    #[error("weight g is not symmetric about the midpoint of [{a}, {b}] (defect {defect:e})")]
    SymmetryViolation { a: f64, b: f64, defect: f64 },

    #[error("function takes negative value {value:e} at x = {x}")]
    Negative { x: f64, value: f64 },

    #[error("exponents p = {p}, q = {q} are not Hölder conjugates")]
    ConjugateExponents { p: f64, q: f64 },

    #[error("partition spans [{lo}, {hi}] but the problem is posed on [{a}, {b}]")]
    SpanMismatch { lo: f64, hi: f64, a: f64, b: f64 },

    #[error("not a probability density: |∫g - 1| = {defect:e}")]
    NotADensity { defect: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("unknown identifier `{name}` at position {pos}")]
    UnknownIdentifier { name: String, pos: usize },

    #[error("symbol is not positive at x = {x}: value {value}")]
    NonPositiveSymbol { x: f64, value: f64 },

    #[error("semigroup is not left invertible: inf phi(x+t)/phi(x) = {inf} (threshold {threshold})")]
    NotLeftInvertible { inf: f64, threshold: f64 },

    #[error("|z * conj(lambda)| = {modulus} is outside the convergence domain (limit {limit})")]
    OutsideConvergenceDomain { modulus: f64, limit: f64 },

    #[error("series tail bound not achieved within {n_max} terms")]
    TailBoundNotAchieved { n_max: usize },

    #[error("no closed form is known for this symbol")]
    NoClosedForm,

    #[error("order {n} exceeds the supported maximum {max}")]
    OrderTooLarge { n: usize, max: usize },

    #[error("invalid step function: {0}")]
    InvalidStepFunction(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("format error: {0}")]
    Format(String),
}

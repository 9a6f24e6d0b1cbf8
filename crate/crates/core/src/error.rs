use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid ring: {0}")]
    InvalidRing(String),
    #[error("not a unit: {0}")]
    NonUnit(String),
    #[error("not in group: {0}")]
    NotInGroup(String),
    #[error("precision too low: {0}")]
    PrecisionTooLow(String),
    #[error("invalid pattern: {0}")]
    PatternInvalid(String),
    #[error("bad generator: {0}")]
    BadGenerator(String),
    #[error("incompatible levels: {0}")]
    BadLevel(String),
    #[error("index is not an integer: {0}")]
    NotDivisible(String),
    #[error("fiber size is not constant: {0}")]
    NonConstantFiber(String),
    #[error("enumeration exceeds cap: {0}")]
    InfeasibleEnumeration(String),
    #[error("sampler exhausted its retry budget: {0}")]
    SamplerStuck(String),
    #[error("completion failed: {0}")]
    CompletionFailure(String),
    #[error("not symplectic: {0}")]
    NotSymplectic(String),
    #[error("decomposition failure: {0}")]
    DecompositionFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CpError {
    #[error("a perfect conductor has no finite permittivity")]
    PerfectConductorHasNoEps,
    #[error("only the imaginary part of this permittivity model is defined")]
    RealPartUnavailable,
    #[error("the Drude permittivity diverges at zero imaginary frequency")]
    StaticDrudeDivergence,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("partial-fraction decomposition failed: {0}")]
    DecompositionFailure(String),
    #[error("Matsubara sum did not converge within {0} terms")]
    MatsubaraBudgetExceeded(usize),
    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),
    #[error("fit did not converge after {0} iterations")]
    NonConvergence(usize),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("unknown id `{0}`")]
    UnknownId(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, CpError>;

use thiserror::Error;

/// Errors produced by the analysis engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid covariance matrix: {0}")]
    InvalidCovariance(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("infeasible source: {0}")]
    InfeasibleSource(String),

    #[error("infeasible attack: {0}")]
    InfeasibleAttack(String),

    #[error("degenerate receiver: {0}")]
    DegenerateReceiver(String),

    #[error("monitor regime violation: {0}")]
    RegimeViolation(String),

    #[error("undefined monitor baseline: {0}")]
    UndefinedBaseline(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),
    #[error("scheduling error: {0}")]
    Schedule(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("lowering error: {0}")]
    Lowering(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("abstraction level: {0}")]
    Abstraction(String),
    #[error("engine error: {0}")]
    Engine(String),
    #[error("injection error: {0}")]
    Injection(String),
    #[error("estimation error: {0}")]
    Estimation(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("numerical non-convergence: {0}")]
    NonConvergence(String),
    #[error("trajectory escapes the table: {0}")]
    Escape(String),
    #[error("collision too close to grazing: {0}")]
    Grazing(String),
    #[error("capability exceeded: {0}")]
    Capability(String),
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error("infeasible target: {0}")]
    Infeasible(String),
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

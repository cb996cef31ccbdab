use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PencilError {
    /// Malformed input or a violated precondition.
    #[error("validation error: {0}")]
    Validation(String),
    /// Rank, graph or convergence decision that could not be made reliably.
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("singular pencil: det A(λ) vanishes identically")]
    SingularPencil,
}

impl PencilError {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            PencilError::Validation(_) => 2,
            PencilError::Numerical(_) | PencilError::SingularPencil => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, PencilError>;

pub(crate) fn validation<T>(msg: impl Into<String>) -> Result<T> {
    Err(PencilError::Validation(msg.into()))
}

pub(crate) fn numerical<T>(msg: impl Into<String>) -> Result<T> {
    Err(PencilError::Numerical(msg.into()))
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, MpsError>;

#[derive(Debug, Error)]
pub enum MpsError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("dense cap exceeded: {needed} entries requested, cap is {cap}")]
    CapExceeded { needed: u128, cap: usize },

    /// A state or Hamiltonian lies outside the class an operation is defined for
    /// (e.g. a bond of Schmidt rank 3 offered to a qubit-only scheme).
    #[error("outside supported class: {0}")]
    OutsideClass(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("malformed document: {0}")]
    Format(String),
}

impl MpsError {
    /// True for errors caused by the caller's input rather than by a numerical routine.
    pub fn is_validation(&self) -> bool {
        !matches!(self, MpsError::Numerical(_))
    }
}

impl From<ndarray_linalg::error::LinalgError> for MpsError {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        MpsError::Numerical(e.to_string())
    }
}

impl From<serde_json::Error> for MpsError {
    fn from(e: serde_json::Error) -> Self {
        MpsError::Format(e.to_string())
    }
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(MpsError::InvalidInput(msg.into()))
}

pub(crate) fn mismatch<T>(msg: impl Into<String>) -> Result<T> {
    Err(MpsError::DimensionMismatch(msg.into()))
}

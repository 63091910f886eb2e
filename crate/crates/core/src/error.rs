//! Error taxonomy shared by every module.
//!
//! The four variants map onto the CLI exit codes: parameter errors (2),
//! regime errors (3), and internal-consistency errors (4). Domain, data and
//! state errors are parameter-class failures and share exit code 2.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An input violates a precondition (non-positive variance, bad range, ...).
    #[error("parameter error: {0}")]
    Parameter(String),

    /// An input is outside the validity regime of the derivation
    /// (e.g. single-carrier modulation variance below the large-modulation floor).
    #[error("regime error: {0}")]
    Regime(String),

    /// A mathematical domain violation (unphysical symplectic eigenvalue,
    /// diverging formula).
    #[error("domain error: {0}")]
    Domain(String),

    /// Measured statistics are inconsistent (Cauchy-Schwarz violation,
    /// degenerate sample variance).
    #[error("data error: {0}")]
    Data(String),

    /// A state-dependent operation was invoked on an empty or invalid state.
    #[error("state error: {0}")]
    State(String),

    /// The model produced something impossible (non-PSD covariance,
    /// unphysical spectra): a bug or a mis-specified configuration.
    #[error("internal consistency error: {0}")]
    Internal(String),
}

impl Error {
    /// Process exit code the CLI maps this error to.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Regime(_) => 3,
            Error::Internal(_) => 4,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

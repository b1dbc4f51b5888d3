//! Slow, independent reference implementations of the numerical kernels.
//!
//! Each oracle reaches its answer by a different route than the main path so
//! that agreement between the two is evidence rather than tautology. None of
//! this is meant for production sweeps.

mod eigen;
mod kron;
mod projection;
mod qfunc;
mod report;
mod waterfill;

pub use eigen::{gram_eigen_oracle, jacobi_eigenvalues};
pub use kron::{kron_svd_oracle, KRON_MAX_COLUMNS};
pub use projection::{projection_oracle, PROJECTION_TOLERANCE};
pub use qfunc::{erfc_oracle, q_inv_oracle, qfunc_oracle};
pub use report::OracleReport;
pub use waterfill::{waterfill_oracle, OracleAllocation};

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("{what} did not converge (last change {change:.3e})")]
    NotConverged { what: &'static str, change: f64 },
    #[error("iteration budget of {0} exhausted")]
    IterationBudget(usize),
    #[error("instance too large: {0}")]
    SizeGuard(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] ftn_mccr::Error),
}

pub type Result<T, E = OracleError> = std::result::Result<T, E>;

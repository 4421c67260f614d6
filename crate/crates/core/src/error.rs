use thiserror::Error;

use crate::junta::JuntaReport;
use crate::risk::SeriesResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not unitary: ‖G†G − I‖²_F = {residual:.3e}")]
    NonUnitaryInput { residual: f64 },

    #[error("matrix is not symplectic orthogonal (orthogonality {orthogonality:.3e}, symplecticity {symplecticity:.3e})")]
    NotSymplecticOrthogonal { orthogonality: f64, symplecticity: f64 },

    #[error("block structure [[A, B], [-B, A]] violated by {deviation:.3e}")]
    MalformedBlocks { deviation: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("mode index {mode} out of range for {modes} modes")]
    ModeIndexOutOfRange { mode: usize, modes: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    #[error("matrix is singular to working precision")]
    SingularMatrix,

    #[error("series did not converge: tail estimate {:.3e} at order {}", .0.error_estimate, .0.truncation_order)]
    ConvergenceWarning(Box<SeriesResult<f64>>),

    #[error("energy budget exceeded: spent {spent}, cap {cap}")]
    BudgetExceeded { spent: f64, cap: f64 },

    #[error("junta search reached the full mode set without meeting the termination threshold")]
    StageLimitReached(Box<JuntaReport>),

    #[error("could not draw non-collinear probe vectors after {attempts} attempts")]
    DegenerateProbe { attempts: usize },

    #[error("coherent state energy {energy} too large for Fock cutoff {cutoff}")]
    TruncationRisk { energy: f64, cutoff: usize },

    #[error("matrix logarithm failed: {0}")]
    LogarithmBranchFailure(String),
}

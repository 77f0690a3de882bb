use thiserror::Error;

use crate::analysis::CertificateCheck;
use crate::experiments::CycleCensus;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("stage system is singular (rcond estimate {rcond:e})")]
    SingularStageSystem { rcond: f64 },

    #[error("pair (A^cl,-{agent}, B^{agent}) is not stabilizable")]
    NotStabilizable { agent: usize },

    #[error("iterative solver did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("cycle certification failed: {}", format_checks(.failures))]
    CertificationFailed { failures: Vec<CertificateCheck> },

    #[error("no stationary equilibrium found")]
    NoEquilibriumFound,

    #[error("random game generation failed after {attempts} attempts")]
    GenerationFailed { attempts: usize },

    #[error("cycle census incomplete: examination cap reached")]
    CensusIncomplete { census: Box<CycleCensus> },

    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn format_checks(checks: &[CertificateCheck]) -> String {
    checks.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", ")
}

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("topology error: {0}")]
    Topology(String),
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("power constraint violated: {0}")]
    PowerConstraint(String),
    #[error("rate error: {0}")]
    Rate(String),
    #[error("rate-distortion infeasible: {0}")]
    Infeasible(String),
    #[error("estimation error: {0}")]
    Estimation(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("decoder training diverged at epoch {epoch} (last stable loss {last_loss})")]
    TrainingDiverged {
        epoch: usize,
        last_loss: f64,
        checkpoint: Box<crate::codec::DecoderWeights>,
    },
    #[error("solver failure in stage `{stage}`: {detail}")]
    Solver { stage: &'static str, detail: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

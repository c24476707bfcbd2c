use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("invalid start time: {0}")]
    InvalidStart(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("trajectory diverged at step {index} (t = {time})")]
    Divergence { index: usize, time: f64 },
    #[error("schedule family has no closed form for {0}")]
    UnsupportedSchedule(String),
    #[error("unsupported composition: {0}")]
    UnsupportedComposition(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("ensemble failure: {diverged} of {total} paths diverged")]
    EnsembleFailure { diverged: usize, total: usize },
    #[error("spec pair is not a rescaling image: field `{field}` {detail}")]
    InvalidPairing { field: String, detail: String },
}

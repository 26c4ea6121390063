use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("events out of order: time {time} follows {previous}")]
    Ordering { previous: i64, time: i64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("undefined measure: {0}")]
    Undefined(String),
    #[error("unknown actor `{0}`")]
    UnknownActor(String),
    #[error("model class mismatch: {0}")]
    ClassMismatch(String),
    #[error("evaluation error: {0}")]
    Evaluation(String),
    #[error("training error: {0}")]
    Training(String),
    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("alphabet mismatch: {0}")]
    Alphabet(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("size guard exceeded: {0}")]
    Guard(String),
    #[error("distribution not normalized (sum = {0})")]
    NotNormalized(f64),
    #[error("probability mass drifted by {0:e} during propagation")]
    Drift(f64),
    #[error("no mixing within the step cap of {0}")]
    StepCap(u64),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("support mismatch: {0}")]
    SupportMismatch(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

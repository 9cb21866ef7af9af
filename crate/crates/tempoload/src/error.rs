use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("norm input contains a negative or non-finite entry")]
    NormDomain,

    #[error("job {0} is not assigned")]
    Unassigned(usize),

    #[error("job {job} cannot run on machine {machine}")]
    InfeasibleAssignment { job: usize, machine: usize },

    #[error("job {0} has no feasible machine")]
    NoFeasibleMachine(usize),

    #[error("job {0} has no feasible route")]
    NoFeasibleRoute(usize),

    #[error("oracle refused: {jobs} jobs exceeds search limit {limit}")]
    OracleRefusal { jobs: usize, limit: usize },

    #[error("adversary construction does not fit the integer grid: {0}")]
    ScaleError(String),

    #[error("policy reads true durations; construction requires an estimation-only policy")]
    NotEstimationOnly,

    #[error("objective of the base instance is zero")]
    ZeroBaseline,

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

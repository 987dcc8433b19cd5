use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid MDP: {0}")]
    InvalidMdp(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("value iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("Tsallis normalizer bracket violated at state {state}")]
    BracketViolation { state: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("occupancy measure is on the boundary at state {state}; gradient is unbounded")]
    BoundaryOccupancy { state: usize },

    #[error("flow operator is rank deficient: rank {rank}, expected {expected}")]
    RankDeficient { rank: usize, expected: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("suboptimality {0:e} is negative beyond roundoff")]
    NegativeSuboptimality(f64),

    #[error("sandwich bound violated: lower {lower:e}, middle {middle:e}, upper {upper:e}")]
    SandwichViolation { lower: f64, middle: f64, upper: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn mdp(msg: impl Into<String>) -> Self {
        Error::InvalidMdp(msg.into())
    }
}

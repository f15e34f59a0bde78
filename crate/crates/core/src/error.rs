use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MoranError {
    #[error("population size must be at least 2, got {0}")]
    PopulationTooSmall(usize),
    #[error("payoff entries must be strictly positive, got {0}")]
    NonPositivePayoff(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("chain is reducible in the interior: c+({0}) = 0")]
    ReducibleInterior(usize),
    #[error("invalid probability vector: {0}")]
    InvalidState(String),
    #[error("extrapolation is ill-conditioned: {0}")]
    IllConditioned(String),
    #[error("time step {dt} exceeds the stability limit {limit}")]
    Unstable { dt: f64, limit: f64 },
    #[error("negative density {value} at cell {cell}")]
    NegativeDensity { cell: usize, value: f64 },
    #[error("eigenvalue iteration did not converge")]
    EigenNonConvergence,
    #[error("quadrature did not reach tolerance {0}")]
    QuadratureNonConvergence(f64),
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("initial density has non-positive or non-finite mass {0}")]
    BadMass(f64),
}

pub type Result<T, E = MoranError> = std::result::Result<T, E>;

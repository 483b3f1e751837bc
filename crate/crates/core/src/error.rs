use thiserror::Error;

/// Errors produced anywhere in the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("under-resolved: {0}")]
    Resolution(String),

    #[error("CFL violation: advection number {courant:.3} > 0.5, need at least {min_steps} steps")]
    Cfl { courant: f64, min_steps: usize },

    #[error(
        "negative mass {clipped:.3e} clipped from density exceeds the tolerance (under-resolved evolution)"
    )]
    ClipMass { clipped: f64 },

    #[error("Sinkhorn did not converge after {iterations} iterations (residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("marginal path has no density at t = {0}")]
    MissingTime(f64),

    #[error("density below positivity floor at t = {time}, node {node}")]
    BelowFloor { time: f64, node: usize },

    #[error("interval {index}: {source}")]
    Interval {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("sweep point {abscissa}: {source}")]
    SweepPoint {
        abscissa: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

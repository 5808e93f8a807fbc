//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point ({re}, {im}) is not inside the open unit disc")]
    InvalidPoint { re: f64, im: f64 },

    #[error("geodesic endpoints coincide")]
    DegenerateEndpoints,

    /// The path never got close enough to the boundary circle; extend the horizon.
    #[error("path reaches radius {radius:.6}, needs at least {required:.6}")]
    NotNearBoundary { radius: f64, required: f64 },

    #[error("domain reduction exceeded the word-length cap {0}")]
    MaxWordLength(usize),

    #[error("invalid amplitude {0}")]
    InvalidAmplitude(f64),

    #[error("invalid metric: {0}")]
    InvalidMetric(String),

    #[error("Newton iteration diverged after {iterations} iterations (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },

    /// The integrated curve came within the precision guard of the boundary.
    #[error("geodesic left the numerically trusted disc at t = {t}")]
    LeftDomain { t: f64 },

    #[error("step size controller collapsed at t = {t}")]
    StepUnderflow { t: f64 },

    #[error("no candidate reached the target (best miss {best_miss:e})")]
    NoArrival { best_miss: f64 },

    #[error("{what} did not converge (last residual {residual:e})")]
    NotConverged { what: String, residual: f64 },

    #[error("field is not differentiable at ({re}, {im})")]
    NonDifferentiablePoint { re: f64, im: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

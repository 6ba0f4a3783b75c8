use thiserror::Error;

use crate::geometry::Point2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    /// Some triangle angle is at least 120 degrees, so the Fermat point sits on
    /// a vertex and no interior triple junction exists.
    #[error("no interior equilibrium: angle condition fails at vertex {vertex}")]
    NoInteriorEquilibrium { vertex: usize },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        last: Point2,
    },

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("kernel is not one-dimensional: {0}")]
    MultiDimensionalKernel(String),

    /// Edge `edge` (1-based) collapsed onto its anchor.
    #[error("junction collision: edge {edge} has length {length:e}")]
    JunctionCollision { edge: usize, length: f64 },

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("critical event: boundary {boundary} has length {length:e}")]
    CriticalEvent { boundary: u64, length: f64 },

    #[error("critical event: junctions {first} and {second} are {distance:e} apart")]
    JunctionApproach { first: u64, second: u64, distance: f64 },

    #[error("contraction failure: successive-distance ratio {ratio} at iteration {iteration}")]
    ContractionFailure { iteration: usize, ratio: f64 },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

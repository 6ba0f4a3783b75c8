//! Settings and stop reasons shared by the single-junction and network integrators.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::Scheme;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub step: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    /// Edges (and junction pairs) shorter than this end the run.
    pub min_edge_length: f64,
    pub record_every: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            step: 1e-3,
            t_end: 1.0,
            scheme: Scheme::Rk4,
            min_edge_length: 1e-6,
            record_every: 1,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::Domain(format!("step must be positive, got {}", self.step)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::Domain(format!("t_end must be positive, got {}", self.t_end)));
        }
        if self.step > self.t_end {
            return Err(Error::Domain(format!(
                "step {} exceeds t_end {}",
                self.step, self.t_end
            )));
        }
        if !(self.min_edge_length > 0.0) {
            return Err(Error::Domain(format!(
                "min_edge_length must be positive, got {}",
                self.min_edge_length
            )));
        }
        if self.record_every == 0 {
            return Err(Error::Domain("record_every must be at least 1".into()));
        }
        Ok(())
    }
}

/// Why a run ended before `t_end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CriticalEvent {
    /// Single-junction edge `edge` (1-based) fell below the guard length.
    JunctionCollision { edge: usize, length: f64 },
    /// A network boundary fell below the guard length.
    BoundaryCollapse { boundary: u64, length: f64 },
    /// Two triple junctions came closer than the guard length.
    JunctionApproach { first: u64, second: u64, distance: f64 },
}

impl fmt::Display for CriticalEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CriticalEvent::JunctionCollision { edge, length } => {
                write!(f, "junction collision: edge {edge} length {length:e}")
            }
            CriticalEvent::BoundaryCollapse { boundary, length } => {
                write!(f, "boundary collapse: boundary {boundary} length {length:e}")
            }
            CriticalEvent::JunctionApproach {
                first,
                second,
                distance,
            } => write!(f, "junction approach: nodes {first} and {second} distance {distance:e}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EarlyStop {
    pub t: f64,
    pub event: CriticalEvent,
}

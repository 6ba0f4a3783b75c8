//! Straight-boundary grain networks with dynamic lattice orientations and
//! triple-junction drag.
//!
//! The single-junction system lives in [`junction`], its equilibrium in
//! [`geometry`], and the local-existence construction in [`picard`]. The
//! a priori estimates are checked by [`diagnostics`]; multi-junction networks
//! are in [`network`]. [`io`] and [`report`] back the `grainflow` binary.

pub mod coupling;
pub mod diagnostics;
pub mod error;
pub mod geometry;
pub mod io;
pub mod junction;
pub mod network;
pub mod ode;
pub mod picard;
pub mod report;
pub mod scenario;
pub mod sim;
pub mod svg;

pub use error::{Error, Result};
pub use geometry::{AnchorSet, EquilibriumResult, Point2, Vec2};
pub use junction::{JunctionState, Trajectory};
pub use ode::Scheme;
pub use sim::{CriticalEvent, EarlyStop, SimConfig};

//! One triple junction joined to three fixed anchors by straight boundaries.
//!
//! Grain `j` (orientation `alpha[j]`) lies between boundaries `j` and `j+1`, so
//! boundary `j` separates grains `j-1` and `j` (indices cyclic) and carries the
//! misorientation `alpha[j-1] - alpha[j]`. The state evolves by
//!
//! ```text
//! d alpha / dt = -B(|b|) alpha
//! d a / dt     = sum_j (1 + (alpha[j-1] - alpha[j])^2 / 2) b_j / |b_j|
//! ```
//!
//! which is the gradient flow of the boundary energy.

use serde::{Deserialize, Serialize};

use crate::coupling::{self, CouplingMatrix, Vec3};
use crate::error::{Error, Result};
use crate::geometry::{edge_vectors, surface_tension, AnchorSet, Point2, Vec2};
use crate::ode;
use crate::sim::{CriticalEvent, EarlyStop, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JunctionState {
    pub a: Point2,
    pub alpha: Vec3,
}

impl JunctionState {
    pub fn new(a: Point2, alpha: Vec3) -> Self {
        Self { a, alpha }
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.alpha.iter().all(|x| x.is_finite())
    }

    /// Cyclic relabelling matching [`AnchorSet::rotated`].
    pub fn rotated(&self, shift: usize) -> Self {
        let al = &self.alpha;
        Self {
            a: self.a,
            alpha: [al[shift % 3], al[(shift + 1) % 3], al[(shift + 2) % 3]],
        }
    }

    fn to_flat(self, dissipation: f64) -> Vec<f64> {
        vec![self.a.x, self.a.y, self.alpha[0], self.alpha[1], self.alpha[2], dissipation]
    }

    fn from_flat(y: &[f64]) -> (Self, f64) {
        (
            Self {
                a: Point2::new(y[0], y[1]),
                alpha: [y[2], y[3], y[4]],
            },
            y[5],
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JunctionRates {
    pub dalpha: Vec3,
    pub da: Vec2,
}

impl JunctionRates {
    pub fn alpha_rate_sq(&self) -> f64 {
        coupling::dot(&self.dalpha, &self.dalpha)
    }

    pub fn drag_rate_sq(&self) -> f64 {
        self.da.norm_sq()
    }
}

/// `(alpha3 - alpha1, alpha1 - alpha2, alpha2 - alpha3)`: the misorientation
/// carried by boundaries 1, 2, 3.
pub fn misorientation_vector(alpha: &Vec3) -> Vec3 {
    [alpha[2] - alpha[0], alpha[0] - alpha[1], alpha[1] - alpha[2]]
}

pub fn rhs(state: &JunctionState, anchors: &AnchorSet) -> Result<JunctionRates> {
    let edges = edge_vectors(anchors, state.a);
    let unit = edges.unit()?;
    let b = CouplingMatrix::from_lengths(edges.len);
    let ba = b.apply(&state.alpha);
    let mis = misorientation_vector(&state.alpha);
    let mut da = Vec2::ZERO;
    for j in 0..3 {
        da += unit[j] * surface_tension(mis[j]);
    }
    Ok(JunctionRates {
        dalpha: [-ba[0], -ba[1], -ba[2]],
        da,
    })
}

pub fn energy(state: &JunctionState, anchors: &AnchorSet) -> f64 {
    let edges = edge_vectors(anchors, state.a);
    let mis = misorientation_vector(&state.alpha);
    (0..3).map(|j| surface_tension(mis[j]) * edges.len[j]).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub state: JunctionState,
    pub energy: f64,
    pub alpha_rate_sq: f64,
    pub drag_rate_sq: f64,
    /// `int_0^t (|dalpha/dt|^2 + |da/dt|^2) dt`.
    pub cum_dissipation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub accumulated_dissipation: f64,
    pub stop: Option<EarlyStop>,
}

impl Trajectory {
    pub fn initial(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory has at least one sample")
    }

    pub fn is_complete(&self) -> bool {
        self.stop.is_none()
    }

    pub fn min_edge_length(&self, anchors: &AnchorSet) -> f64 {
        self.samples
            .iter()
            .map(|s| edge_vectors(anchors, s.state.a).min_len().1)
            .fold(f64::INFINITY, f64::min)
    }
}

fn sample_at<R>(t: f64, state: JunctionState, diss: f64, anchors: &AnchorSet, rhs_fn: &R) -> Result<Sample>
where
    R: Fn(&JunctionState, &AnchorSet) -> Result<JunctionRates>,
{
    let rates = rhs_fn(&state, anchors)?;
    Ok(Sample {
        t,
        state,
        energy: energy(&state, anchors),
        alpha_rate_sq: rates.alpha_rate_sq(),
        drag_rate_sq: rates.drag_rate_sq(),
        cum_dissipation: diss,
    })
}

pub fn integrate(init: &JunctionState, anchors: &AnchorSet, config: &SimConfig) -> Result<Trajectory> {
    integrate_with(init, anchors, config, rhs)
}

/// [`integrate`] with a caller-supplied right-hand side. Used to run negative
/// controls against the diagnostics.
///
/// The dissipation integral is carried as an extra state component and
/// advanced by the same scheme, so it is accurate to the integrator's order.
pub fn integrate_with<R>(
    init: &JunctionState,
    anchors: &AnchorSet,
    config: &SimConfig,
    rhs_fn: R,
) -> Result<Trajectory>
where
    R: Fn(&JunctionState, &AnchorSet) -> Result<JunctionRates>,
{
    config.validate()?;
    if !init.is_finite() {
        return Err(Error::Domain("initial state is not finite".into()));
    }
    let (edge, len) = edge_vectors(anchors, init.a).min_len();
    if !(len > config.min_edge_length) {
        return Err(Error::JunctionCollision {
            edge: edge + 1,
            length: len,
        });
    }

    let mut f = |y: &[f64]| -> Result<Vec<f64>> {
        let (s, _) = JunctionState::from_flat(y);
        let r = rhs_fn(&s, anchors)?;
        Ok(vec![
            r.da.x,
            r.da.y,
            r.dalpha[0],
            r.dalpha[1],
            r.dalpha[2],
            r.alpha_rate_sq() + r.drag_rate_sq(),
        ])
    };

    let times = ode::time_grid(config.step, config.t_end);
    let mut samples = vec![sample_at(0.0, *init, 0.0, anchors, &rhs_fn)?];
    let mut y = init.to_flat(0.0);
    let mut stop = None;
    let last = times.len() - 1;
    for k in 1..=last {
        let t = times[k];
        y = match ode::step(config.scheme, &y, t - times[k - 1], &mut f) {
            Ok(next) => next,
            Err(Error::JunctionCollision { edge, length }) => {
                stop = Some(EarlyStop {
                    t: times[k - 1],
                    event: CriticalEvent::JunctionCollision { edge, length },
                });
                break;
            }
            Err(e) => return Err(e),
        };
        let (state, diss) = JunctionState::from_flat(&y);
        let (edge, len) = edge_vectors(anchors, state.a).min_len();
        if !(len >= config.min_edge_length) {
            if len > 0.0 {
                samples.push(sample_at(t, state, diss, anchors, &rhs_fn)?);
            }
            stop = Some(EarlyStop {
                t,
                event: CriticalEvent::JunctionCollision {
                    edge: edge + 1,
                    length: len,
                },
            });
            break;
        }
        if k % config.record_every == 0 || k == last {
            samples.push(sample_at(t, state, diss, anchors, &rhs_fn)?);
        }
    }
    let accumulated_dissipation = samples.last().map_or(0.0, |s| s.cum_dissipation);
    Ok(Trajectory {
        samples,
        accumulated_dissipation,
        stop,
    })
}

/// `max_t |E(t) + D(t) - E(0)|` where `D` is the accumulated dissipation.
pub fn dissipation_residual(traj: &Trajectory) -> Result<f64> {
    if traj.samples.len() < 2 {
        return Err(Error::Usage("dissipation residual needs at least two samples".into()));
    }
    let e0 = traj.samples[0].energy;
    Ok(traj
        .samples
        .iter()
        .map(|s| (s.energy + s.cum_dissipation - e0).abs())
        .fold(0.0, f64::max))
}

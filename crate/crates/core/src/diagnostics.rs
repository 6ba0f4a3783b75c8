//! Checks of the a priori estimates and of continuous dependence on the
//! initial data, applied to computed trajectories.

use serde::Serialize;

use crate::coupling::{self, CouplingMatrix, Mat3, Vec3};
use crate::error::{Error, Result};
use crate::geometry::{edge_vectors, surface_tension, AnchorSet, Point2};
use crate::junction::{self, misorientation_vector, JunctionState, Trajectory};
use crate::network::{self, Network, NetworkState};

/// Slack for inequalities that hold exactly for the continuous flow.
pub const EXACT_SLACK: f64 = 1e-12;
/// Slack for the exponential stability bound, which compounds integrator error.
pub const GRONWALL_SLACK: f64 = 1e-8;
/// Below this a norm counts as zero.
pub const ZERO_NORM: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioReport {
    /// Largest `|v(t)| / |v(0)|` seen (1 when both are zero).
    pub max_ratio: f64,
    /// Whether the sequence `|v(t_k)|` never grew by more than the slack.
    pub monotone: bool,
    pub pass: bool,
}

fn ratio_report(norms: &[f64]) -> RatioReport {
    let initial = norms[0];
    let (max_ratio, bounded) = if initial <= ZERO_NORM {
        let worst = norms.iter().copied().fold(0.0, f64::max);
        (if worst <= ZERO_NORM { 1.0 } else { f64::INFINITY }, worst <= ZERO_NORM)
    } else {
        let r = norms.iter().map(|n| n / initial).fold(0.0, f64::max);
        (r, r <= 1.0 + EXACT_SLACK)
    };
    let floor = initial.max(ZERO_NORM);
    let monotone = norms
        .windows(2)
        .all(|w| w[1] <= w[0] + EXACT_SLACK * floor);
    RatioReport {
        max_ratio,
        monotone,
        pass: bounded,
    }
}

/// `|alpha(t)| <= |alpha(0)|` along the trajectory.
pub fn check_maximum_principle(traj: &Trajectory) -> RatioReport {
    let norms: Vec<f64> = traj.samples.iter().map(|s| coupling::norm(&s.state.alpha)).collect();
    ratio_report(&norms)
}

/// `|(A - I) alpha(t)| <= |(A - I) alpha(0)|` along the trajectory, where
/// `(A - I) alpha` is the vector of boundary misorientations.
pub fn check_misorientation_estimate(traj: &Trajectory) -> RatioReport {
    let norms: Vec<f64> = traj
        .samples
        .iter()
        .map(|s| coupling::norm(&misorientation_vector(&s.state.alpha)))
        .collect();
    ratio_report(&norms)
}

/// The cyclic shift `A` with `(A - I) alpha = (a3 - a1, a1 - a2, a2 - a3)`.
pub const SHIFT: Mat3 = [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];

/// Largest entry of `(A-I)^T (A-I) B - 3B`, which vanishes for every coupling matrix.
pub fn misorientation_identity_residual(b: &CouplingMatrix) -> f64 {
    let mut a_minus_i = SHIFT;
    for (i, row) in a_minus_i.iter_mut().enumerate() {
        row[i] -= 1.0;
    }
    let lhs = coupling::mat_mul(
        &coupling::mat_mul(&coupling::transpose(&a_minus_i), &a_minus_i),
        &b.entries,
    );
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            worst = worst.max((lhs[i][j] - 3.0 * b.entries[i][j]).abs());
        }
    }
    worst
}

/// Constants of the differential inequality
/// `d/dt (|d alpha|^2 + |d a|^2) <= C6 (|d alpha|^2 + |d a|^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GronwallBound {
    pub c4: f64,
    pub c5: f64,
    pub c6: f64,
    pub c_lower: f64,
}

pub fn gronwall_constants(alpha01: &Vec3, alpha02: &Vec3, c_lower: f64) -> Result<GronwallBound> {
    if !(c_lower > 0.0 && c_lower.is_finite()) {
        return Err(Error::Domain(format!(
            "edge-length lower bound must be positive, got {c_lower}"
        )));
    }
    let n = coupling::norm(alpha01) + coupling::norm(alpha02);
    let tension: f64 = misorientation_vector(alpha02)
        .iter()
        .map(|&m| surface_tension(m))
        .sum();
    let c4 = 13.0 * n;
    let c5 = 12.0 * n + 4.0 / c_lower * tension;
    Ok(GronwallBound {
        c4,
        c5,
        c6: c4 + c5,
        c_lower,
    })
}

/// Smallest edge length seen along any of the trajectories.
pub fn measured_edge_lower_bound(anchors: &AnchorSet, trajs: &[&Trajectory]) -> f64 {
    trajs
        .iter()
        .map(|t| t.min_edge_length(anchors))
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContinuityReport {
    /// Largest `deviation / bound` over the shared samples after the first
    /// (0 if the bound is 0 and the deviation is 0).
    pub worst_ratio: f64,
    pub worst_time: f64,
    pub pass: bool,
}

/// `|alpha1 - alpha2|^2 + |a1 - a2|^2 <= e^{C6 t} (|d alpha0|^2 + |d a0|^2)` at
/// every shared sample.
pub fn check_continuous_dependence(
    traj1: &Trajectory,
    traj2: &Trajectory,
    bound: &GronwallBound,
) -> Result<ContinuityReport> {
    if traj1.samples.len() != traj2.samples.len()
        || traj1.samples.iter().zip(&traj2.samples).any(|(a, b)| a.t != b.t)
    {
        return Err(Error::Usage("trajectories do not share a time grid".into()));
    }
    let sq = |i: usize| {
        let (a, b) = (&traj1.samples[i].state, &traj2.samples[i].state);
        let d: Vec3 = [a.alpha[0] - b.alpha[0], a.alpha[1] - b.alpha[1], a.alpha[2] - b.alpha[2]];
        coupling::dot(&d, &d) + (a.a - b.a).norm_sq()
    };
    let initial = sq(0);
    let mut report = ContinuityReport {
        worst_ratio: 0.0,
        worst_time: 0.0,
        pass: true,
    };
    for (i, s) in traj1.samples.iter().enumerate() {
        let dev = sq(i);
        let rhs = (bound.c6 * s.t).exp() * initial * (1.0 + GRONWALL_SLACK);
        let ratio = if rhs > 0.0 {
            dev / rhs
        } else if dev == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        // at t = 0 both sides agree by construction
        if i > 0 && ratio > report.worst_ratio {
            report.worst_ratio = ratio;
            report.worst_time = s.t;
        }
        if dev > rhs {
            report.pass = false;
        }
    }
    Ok(report)
}

/// Smallest edge length along a trajectory, for the edge vectors at each sample.
pub fn edge_lengths_at(anchors: &AnchorSet, traj: &Trajectory) -> Vec<[f64; 3]> {
    traj.samples
        .iter()
        .map(|s| edge_vectors(anchors, s.state.a).len)
        .collect()
}

/// Central-difference step for the gradient checks.
pub const FD_STEP: f64 = 1e-6;

/// `max_i |v_i - w_i| / max(max_i |w_i|, tiny)`.
fn relative_gap(v: &[f64], w: &[f64]) -> f64 {
    let scale = w.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1e-12);
    v.iter()
        .zip(w)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / scale
}

fn central_difference<F: Fn(&[f64]) -> f64>(x: &[f64], f: F) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut up = x.to_vec();
            let mut dn = x.to_vec();
            up[i] += FD_STEP;
            dn[i] -= FD_STEP;
            (f(&up) - f(&dn)) / (2.0 * FD_STEP)
        })
        .collect()
}

/// Relative gap between the single-junction velocity and minus the
/// central-difference gradient of the energy in `(a, alpha)`.
pub fn junction_gradient_gap(state: &JunctionState, anchors: &AnchorSet) -> Result<f64> {
    let r = junction::rhs(state, anchors)?;
    let x = [state.a.x, state.a.y, state.alpha[0], state.alpha[1], state.alpha[2]];
    let grad = central_difference(&x, |y| {
        junction::energy(
            &JunctionState::new(Point2::new(y[0], y[1]), [y[2], y[3], y[4]]),
            anchors,
        )
    });
    let minus: Vec<f64> = grad.iter().map(|g| -g).collect();
    Ok(relative_gap(&[r.da.x, r.da.y, r.dalpha[0], r.dalpha[1], r.dalpha[2]], &minus))
}

/// Same as [`junction_gradient_gap`] for a network with unit mobilities, over
/// every grain orientation and every junction coordinate.
pub fn network_gradient_gap(state: &NetworkState, net: &Network) -> Result<f64> {
    let r = network::network_rhs(state, net)?;
    let (gamma, eta) = net.mobilities();
    let junctions = net.junction_nodes();
    let mut x = Vec::new();
    let mut v = Vec::new();
    for &n in junctions {
        x.extend([state.positions[n].x, state.positions[n].y]);
        v.extend([r.da[n].x / eta, r.da[n].y / eta]);
    }
    x.extend_from_slice(&state.alpha);
    v.extend(r.dalpha.iter().map(|d| d / gamma));
    let grad = central_difference(&x, |y| {
        let mut s = state.clone();
        for (slot, &n) in junctions.iter().enumerate() {
            s.positions[n] = Point2::new(y[2 * slot], y[2 * slot + 1]);
        }
        s.alpha.copy_from_slice(&y[2 * junctions.len()..]);
        network::network_energy(&s, net)
    });
    let minus: Vec<f64> = grad.iter().map(|g| -g).collect();
    Ok(relative_gap(&v, &minus))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::junction::{integrate, JunctionState};
    use crate::sim::SimConfig;

    fn run(alpha: Vec3) -> Trajectory {
        integrate(
            &JunctionState::new(Point2::new(0.1, 0.05), alpha),
            &AnchorSet::equilateral(),
            &SimConfig { t_end: 0.5, ..Default::default() },
        )
        .unwrap()
    }

    #[test]
    fn maximum_principle_standard() {
        let r = check_maximum_principle(&run([0.3, -0.2, 0.1]));
        assert!(r.pass && r.monotone);
        assert!(r.max_ratio <= 1.0 + EXACT_SLACK);
    }

    #[test]
    fn zero_orientation_stays_zero() {
        let traj = run([0.0; 3]);
        assert!(traj.samples.iter().all(|s| s.state.alpha == [0.0; 3]));
        let r = check_maximum_principle(&traj);
        assert!(r.pass);
        assert_eq!(r.max_ratio, 1.0);
    }

    #[test]
    fn equal_orientations_have_no_misorientation() {
        let r = check_misorientation_estimate(&run([0.4; 3]));
        assert!(r.pass && r.monotone);
    }

    #[test]
    fn misorientation_monotone_standard() {
        let r = check_misorientation_estimate(&run([0.3, -0.2, 0.1]));
        assert!(r.pass && r.monotone);
    }

    #[test]
    fn identity_on_sample_matrix() {
        let b = CouplingMatrix::from_lengths([0.7, 1.3, 2.9]);
        assert!(misorientation_identity_residual(&b) < 1e-12);
    }

    #[test]
    fn gronwall_examples() {
        let g = gronwall_constants(&[0.0; 3], &[0.0; 3], 1.0).unwrap();
        assert_eq!((g.c4, g.c5, g.c6), (0.0, 12.0, 12.0));
        let g = gronwall_constants(&[0.0, 1.0, 0.0], &[1.0, 0.0, 0.0], 0.5).unwrap();
        assert_eq!(g.c4, 26.0);
        assert_eq!(g.c5, 56.0);
        assert_eq!(g.c6, 82.0);
        assert!(matches!(gronwall_constants(&[0.0; 3], &[0.0; 3], 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn identical_runs_have_zero_deviation() {
        let a = run([0.3, -0.2, 0.1]);
        let b = run([0.3, -0.2, 0.1]);
        let g = gronwall_constants(&[0.3, -0.2, 0.1], &[0.3, -0.2, 0.1], 0.5).unwrap();
        let r = check_continuous_dependence(&a, &b, &g).unwrap();
        assert!(r.pass);
        assert_eq!(r.worst_ratio, 0.0);
    }

    #[test]
    fn gradient_gaps_are_small() {
        let anchors = AnchorSet::equilateral();
        let st = JunctionState::new(Point2::new(0.1, 0.05), [0.3, -0.2, 0.1]);
        assert!(junction_gradient_gap(&st, &anchors).unwrap() < 1e-6);
        let net = Network::new(crate::network::GrainNetwork::hexagonal_test()).unwrap();
        assert!(network_gradient_gap(&net.initial_state(), &net).unwrap() < 1e-6);
    }

    #[test]
    fn grid_mismatch_is_usage_error() {
        let a = run([0.3, -0.2, 0.1]);
        let mut b = a.clone();
        b.samples.pop();
        let g = gronwall_constants(&[0.0; 3], &[0.0; 3], 1.0).unwrap();
        assert!(matches!(check_continuous_dependence(&a, &b, &g), Err(Error::Usage(_))));
    }
}

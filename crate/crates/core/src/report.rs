//! The verification suite run by `grainflow verify`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::coupling::{self, CouplingMatrix};
use crate::diagnostics::{self, EXACT_SLACK};
use crate::error::{Error, Result};
use crate::geometry::{fermat_point_default, AnchorSet, Point2};
use crate::junction::{self, integrate, integrate_with, JunctionRates, JunctionState, Trajectory};
use crate::network::{self, integrate_network, GrainNetwork, Network};
use crate::picard;
use crate::scenario;
use crate::sim::SimConfig;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub seed: u64,
    /// Set when the main run ended early; the checks then cover the partial run.
    pub early_stop: Option<String>,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl VerificationReport {
    fn new(seed: u64) -> Self {
        Self {
            seed,
            early_stop: None,
            checks: Vec::new(),
            pass: true,
        }
    }

    fn push(&mut self, name: &str, value: f64, tolerance: f64, pass: bool, detail: Option<String>) {
        self.pass &= pass;
        self.checks.push(Check {
            name: name.to_string(),
            value,
            tolerance,
            pass,
            detail,
        });
    }

    /// A check passing iff `value <= tolerance`.
    fn at_most(&mut self, name: &str, value: f64, tolerance: f64) {
        self.push(name, value, tolerance, value <= tolerance, None);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Randomized scenarios for the estimate checks.
    pub random_scenarios: usize,
    /// Random samples for the matrix checks.
    pub matrix_samples: usize,
    /// Negates the junction velocity in the main run; the dissipation check
    /// must then fail.
    pub flip_sign: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            random_scenarios: 100,
            matrix_samples: 1000,
            flip_sign: false,
        }
    }
}

fn flipped_rhs(s: &JunctionState, a: &AnchorSet) -> Result<JunctionRates> {
    let r = junction::rhs(s, a)?;
    Ok(JunctionRates {
        dalpha: r.dalpha.map(|x| -x),
        da: -r.da,
    })
}

fn matrix_checks(report: &mut VerificationReport, rng: &mut ChaCha8Rng, samples: usize) {
    let mut identity: f64 = 0.0;
    let mut eigen_gap: f64 = 0.0;
    let mut kernel: f64 = 0.0;
    let mut bound_ratio: f64 = 0.0;
    for _ in 0..samples {
        let c = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
        let m = CouplingMatrix::from_lengths(c);
        identity = identity.max(diagnostics::misorientation_identity_residual(&m));
        let numeric = m.spectrum().eigenvalues;
        let closed = coupling::closed_form_eigenvalues(c[0], c[1], c[2]);
        let scale = m.scale().max(f64::MIN_POSITIVE);
        for (a, b) in numeric.iter().zip(closed) {
            eigen_gap = eigen_gap.max((a - b).abs() / scale);
        }
        kernel = kernel.max(coupling::norm(&m.apply(&[1.0, 1.0, 1.0])) / scale);
        let v = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let bound = coupling::operator_bound(c[0], c[1], c[2]) * coupling::norm(&v);
        if bound > 0.0 {
            bound_ratio = bound_ratio.max(coupling::norm(&m.apply(&v)) / bound);
        }
    }
    report.at_most("misorientation_identity", identity, 1e-12);
    report.at_most("eigenvalue_agreement", eigen_gap, 1e-10);
    report.at_most("kernel_annihilation", kernel, 1e-12);
    report.at_most("operator_bound_ratio", bound_ratio, 1.0);
}

/// Runs every check on a single-junction scenario plus randomized ones drawn
/// from `opts.seed`. Fails with [`Error::NoInteriorEquilibrium`] when the
/// anchors violate the angle condition.
pub fn verify_junction(
    anchors: &AnchorSet,
    init: &JunctionState,
    config: &SimConfig,
    opts: &VerifyOptions,
) -> Result<VerificationReport> {
    config.validate()?;
    let eq = fermat_point_default(anchors)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut report = VerificationReport::new(opts.seed);

    let main = if opts.flip_sign {
        integrate_with(init, anchors, config, flipped_rhs)?
    } else {
        integrate(init, anchors, config)?
    };
    report.early_stop = main.stop.map(|s| format!("t={}: {}", s.t, s.event));
    report.at_most("dissipation_residual", junction::dissipation_residual(&main)?, 1e-8);

    let mut runs: Vec<Trajectory> = vec![main.clone()];
    for _ in 0..opts.random_scenarios {
        let (a, s) = scenario::random_valid(&mut rng);
        runs.push(integrate(&s, &a, config)?);
    }
    let (mut max_ratio, mut mis_ratio, mut monotone): (f64, f64, bool) = (0.0, 0.0, true);
    for t in &runs {
        let r = diagnostics::check_maximum_principle(t);
        max_ratio = max_ratio.max(r.max_ratio);
        let m = diagnostics::check_misorientation_estimate(t);
        mis_ratio = mis_ratio.max(m.max_ratio);
        monotone &= m.monotone;
    }
    report.at_most("maximum_principle_ratio", max_ratio, 1.0 + EXACT_SLACK);
    report.push(
        "misorientation_ratio",
        mis_ratio,
        1.0 + EXACT_SLACK,
        mis_ratio <= 1.0 + EXACT_SLACK && monotone,
        (!monotone).then(|| "misorientation norm increased between samples".to_string()),
    );

    matrix_checks(&mut report, &mut rng, opts.matrix_samples);

    report.at_most("fermat_residual", eq.residual, 1e-12);

    let cert = picard::existence_constants(init, anchors, &eq)?;
    report.push(
        "existence_hypothesis",
        init.a.distance(eq.a_inf),
        0.5 * cert.b_inf_len.iter().copied().fold(f64::INFINITY, f64::min),
        cert.hypothesis_ok,
        None,
    );
    if let Some(t) = cert.t_exist {
        let grid_n = 200;
        match picard::solve_fixed_point(init, anchors, &cert, grid_n, 1e-12) {
            Ok(sol) => {
                report.at_most(
                    "picard_contraction_ratio",
                    sol.max_ratio(),
                    picard::CONTRACTION_FACTOR + picard::QUADRATURE_SLACK,
                );
                let outside = sol.bounds.iter().filter(|b| !b.within(&cert, 1e-10)).count();
                report.at_most("picard_iterates_outside_ball", outside as f64, 0.0);
                let fine = SimConfig {
                    step: t / grid_n as f64,
                    t_end: t,
                    record_every: 1,
                    ..*config
                };
                let ref_traj = integrate(init, anchors, &fine)?;
                let gap = sol
                    .pair
                    .alpha_path
                    .iter()
                    .zip(&sol.pair.a_path)
                    .zip(&ref_traj.samples)
                    .map(|((al, a), s)| {
                        let d = [al[0] - s.state.alpha[0], al[1] - s.state.alpha[1], al[2] - s.state.alpha[2]];
                        coupling::norm(&d) + a.distance(s.state.a)
                    })
                    .fold(0.0, f64::max);
                report.at_most("picard_vs_integrator", gap, 1e-5);
            }
            Err(e) => report.push("picard_contraction_ratio", f64::NAN, 0.8, false, Some(e.to_string())),
        }
    }

    let mut worst: f64 = 0.0;
    let mut detail = None;
    for (label, da, dalpha) in [
        ("a0", Point2::new(1e-6, 0.0), [0.0; 3]),
        ("alpha0", Point2::ZERO, [1e-6, 0.0, -1e-6]),
    ] {
        let other = JunctionState::new(init.a + da, [init.alpha[0] + dalpha[0], init.alpha[1] + dalpha[1], init.alpha[2] + dalpha[2]]);
        let t2 = integrate(&other, anchors, config)?;
        if t2.samples.len() != main.samples.len() || opts.flip_sign {
            continue;
        }
        let c_lower = diagnostics::measured_edge_lower_bound(anchors, &[&main, &t2]);
        let bound = diagnostics::gronwall_constants(&init.alpha, &other.alpha, c_lower)?;
        let r = diagnostics::check_continuous_dependence(&main, &t2, &bound)?;
        if r.worst_ratio >= worst {
            worst = r.worst_ratio;
            detail = Some(format!("perturbation in {label}, worst at t={}", r.worst_time));
        }
    }
    report.push("gronwall_margin", worst, 1.0, worst <= 1.0, detail);

    let mut grad_gap: f64 = 0.0;
    for s in main.samples.iter().step_by((main.samples.len() / 10).max(1)) {
        grad_gap = grad_gap.max(diagnostics::junction_gradient_gap(&s.state, anchors)?);
    }
    report.at_most("gradient_consistency", grad_gap, 1e-6);

    let last = main.last().state;
    let net = Network::new(GrainNetwork::single_junction(anchors, last.a, last.alpha))?;
    let psd = network::orientation_coupling_psd(&net.initial_state(), &net, opts.matrix_samples, opts.seed);
    report.push(
        "psd_margin",
        psd.min_form,
        -network::PSD_TOL,
        psd.pass,
        Some(format!("edge-sum mismatch {:e}", psd.max_mismatch)),
    );
    Ok(report)
}

pub fn verify_network(net: &Network, config: &SimConfig, opts: &VerifyOptions) -> Result<VerificationReport> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut report = VerificationReport::new(opts.seed);
    let s0 = net.initial_state();
    let traj = integrate_network(&s0, net, config)?;
    report.early_stop = traj.stop.map(|s| format!("t={}: {}", s.t, s.event));
    if traj.samples.len() < 2 {
        return Err(Error::Usage("network run produced fewer than two samples".into()));
    }
    report.at_most("dissipation_residual", traj.dissipation_residual(), 1e-8);
    report.at_most("energy_increase_per_step", traj.max_energy_increase(), 1e-10);

    let sum0: f64 = s0.alpha.iter().sum();
    let drift = traj
        .samples
        .iter()
        .map(|s| (s.state.alpha.iter().sum::<f64>() - sum0).abs())
        .fold(0.0, f64::max);
    let steps = (config.t_end / config.step).ceil();
    report.at_most("orientation_sum_drift", drift, 1e-12 * steps);

    let mut psd_min = f64::INFINITY;
    let mut psd_mismatch: f64 = 0.0;
    let mut psd_pass = true;
    let mut grad_gap: f64 = 0.0;
    for s in traj.samples.iter().step_by((traj.samples.len() / 10).max(1)) {
        let r = network::orientation_coupling_psd(&s.state, net, opts.matrix_samples / 10, rng.gen());
        psd_min = psd_min.min(r.min_form);
        psd_mismatch = psd_mismatch.max(r.max_mismatch);
        psd_pass &= r.pass;
        grad_gap = grad_gap.max(diagnostics::network_gradient_gap(&s.state, net)?);
    }
    report.push(
        "psd_margin",
        psd_min,
        -network::PSD_TOL,
        psd_pass,
        Some(format!("edge-sum mismatch {psd_mismatch:e}")),
    );
    report.at_most("gradient_consistency", grad_gap, 1e-6);
    matrix_checks(&mut report, &mut rng, opts.matrix_samples);
    Ok(report)
}

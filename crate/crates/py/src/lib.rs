//! Python bindings for the grainflow core.

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use grainflow::coupling::{build_coupling, closed_form_eigenvalues};
use grainflow::geometry::{angle_condition, fermat_point_default, AnchorSet as CoreAnchors, Point2};
use grainflow::io::parse_network_document;
use grainflow::junction::{self, integrate, JunctionState, Trajectory as CoreTrajectory};
use grainflow::network::{self as net, GrainNetwork, Network as CoreNetwork, NetworkTrajectory};
use grainflow::picard::{existence_constants, solve_fixed_point};
use grainflow::report::{verify_junction, verify_network, VerifyOptions};
use grainflow::{Error, Scheme, SimConfig};

create_exception!(pygrainflow, GrainflowError, PyValueError);
create_exception!(pygrainflow, NoInteriorEquilibrium, GrainflowError);
create_exception!(pygrainflow, CriticalEventError, GrainflowError);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::NoInteriorEquilibrium { .. } => NoInteriorEquilibrium::new_err(e.to_string()),
        Error::JunctionCollision { .. } | Error::CriticalEvent { .. } | Error::JunctionApproach { .. } => {
            CriticalEventError::new_err(e.to_string())
        }
        _ => GrainflowError::new_err(e.to_string()),
    }
}

fn pt(p: (f64, f64)) -> Point2 {
    Point2::new(p.0, p.1)
}

fn sim_config(step: f64, t_end: f64, scheme: &str, min_edge_length: f64, record_every: usize) -> PyResult<SimConfig> {
    let scheme: Scheme = scheme.parse().map_err(GrainflowError::new_err)?;
    let cfg = SimConfig {
        step,
        t_end,
        scheme,
        min_edge_length,
        record_every,
    };
    cfg.validate().map_err(to_py)?;
    Ok(cfg)
}

/// Three fixed boundary endpoints.
#[pyclass(frozen)]
struct Anchors {
    inner: CoreAnchors,
}

#[pymethods]
impl Anchors {
    #[new]
    fn new(x1: (f64, f64), x2: (f64, f64), x3: (f64, f64)) -> PyResult<Self> {
        let inner = CoreAnchors::new(pt(x1), pt(x2), pt(x3)).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn equilateral() -> Self {
        Self {
            inner: CoreAnchors::equilateral(),
        }
    }

    #[getter]
    fn points(&self) -> Vec<(f64, f64)> {
        self.inner.points().iter().map(|p| (p.x, p.y)).collect()
    }

    /// True when every triangle angle is below 120 degrees.
    fn angle_condition(&self) -> bool {
        angle_condition(&self.inner).holds()
    }

    /// The equilibrium junction position.
    fn fermat_point(&self) -> PyResult<(f64, f64)> {
        let eq = fermat_point_default(&self.inner).map_err(to_py)?;
        Ok((eq.a_inf.x, eq.a_inf.y))
    }

    /// Total boundary energy of a junction at `a` with orientations `alpha`.
    fn energy(&self, a: (f64, f64), alpha: [f64; 3]) -> f64 {
        junction::energy(&JunctionState::new(pt(a), alpha), &self.inner)
    }

    /// Returns `(dalpha, da)` at the given state.
    fn rates(&self, a: (f64, f64), alpha: [f64; 3]) -> PyResult<([f64; 3], (f64, f64))> {
        let r = junction::rhs(&JunctionState::new(pt(a), alpha), &self.inner).map_err(to_py)?;
        Ok((r.dalpha, (r.da.x, r.da.y)))
    }

    #[pyo3(signature = (a0, alpha0, step=1e-3, t_end=1.0, scheme="rk4", min_edge_length=1e-6, record_every=1))]
    #[allow(clippy::too_many_arguments)]
    fn simulate(
        &self,
        a0: (f64, f64),
        alpha0: [f64; 3],
        step: f64,
        t_end: f64,
        scheme: &str,
        min_edge_length: f64,
        record_every: usize,
    ) -> PyResult<Trajectory> {
        let cfg = sim_config(step, t_end, scheme, min_edge_length, record_every)?;
        let traj = integrate(&JunctionState::new(pt(a0), alpha0), &self.inner, &cfg).map_err(to_py)?;
        Ok(Trajectory { inner: traj })
    }

    /// Existence constants for the given initial data as a dict.
    fn existence(&self, py: Python<'_>, a0: (f64, f64), alpha0: [f64; 3]) -> PyResult<Py<PyAny>> {
        let eq = fermat_point_default(&self.inner).map_err(to_py)?;
        let cert = existence_constants(&JunctionState::new(pt(a0), alpha0), &self.inner, &eq).map_err(to_py)?;
        let d = pyo3::types::PyDict::new(py);
        d.set_item("c1", cert.c1)?;
        d.set_item("c2", cert.c2)?;
        d.set_item("t_exist", cert.t_exist)?;
        d.set_item("hypothesis_ok", cert.hypothesis_ok)?;
        d.set_item("terms", cert.terms)?;
        Ok(d.into_any().unbind())
    }

    /// Runs the fixed-point iteration on `[0, T_exist]`; returns
    /// `(grid, alpha_path, a_path, ratios)`.
    #[pyo3(signature = (a0, alpha0, grid_n=200, tol=1e-12))]
    #[allow(clippy::type_complexity)]
    fn picard(
        &self,
        a0: (f64, f64),
        alpha0: [f64; 3],
        grid_n: usize,
        tol: f64,
    ) -> PyResult<(Vec<f64>, Vec<[f64; 3]>, Vec<(f64, f64)>, Vec<f64>)> {
        let init = JunctionState::new(pt(a0), alpha0);
        let eq = fermat_point_default(&self.inner).map_err(to_py)?;
        let cert = existence_constants(&init, &self.inner, &eq).map_err(to_py)?;
        let sol = solve_fixed_point(&init, &self.inner, &cert, grid_n, tol).map_err(to_py)?;
        let a_path = sol.pair.a_path.iter().map(|p| (p.x, p.y)).collect();
        Ok((sol.pair.grid, sol.pair.alpha_path, a_path, sol.ratios))
    }

    /// Runs the verification suite and returns the JSON report.
    #[pyo3(signature = (a0, alpha0, seed=0, scenarios=100, samples=1000))]
    fn verify(&self, a0: (f64, f64), alpha0: [f64; 3], seed: u64, scenarios: usize, samples: usize) -> PyResult<String> {
        let opts = VerifyOptions {
            seed,
            random_scenarios: scenarios,
            matrix_samples: samples,
            flip_sign: false,
        };
        let rep = verify_junction(
            &self.inner,
            &JunctionState::new(pt(a0), alpha0),
            &SimConfig::default(),
            &opts,
        )
        .map_err(to_py)?;
        Ok(rep.to_json())
    }
}

/// A single-junction run.
#[pyclass(frozen)]
struct Trajectory {
    inner: CoreTrajectory,
}

#[pymethods]
impl Trajectory {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.samples.iter().map(|s| s.t).collect()
    }

    #[getter]
    fn positions(&self) -> Vec<(f64, f64)> {
        self.inner.samples.iter().map(|s| (s.state.a.x, s.state.a.y)).collect()
    }

    #[getter]
    fn orientations(&self) -> Vec<[f64; 3]> {
        self.inner.samples.iter().map(|s| s.state.alpha).collect()
    }

    #[getter]
    fn energies(&self) -> Vec<f64> {
        self.inner.samples.iter().map(|s| s.energy).collect()
    }

    #[getter]
    fn dissipation(&self) -> Vec<f64> {
        self.inner.samples.iter().map(|s| s.cum_dissipation).collect()
    }

    /// Description of the event that ended the run early, if any.
    #[getter]
    fn stop(&self) -> Option<(f64, String)> {
        self.inner.stop.map(|s| (s.t, s.event.to_string()))
    }

    /// Largest `|E(t) + D(t) - E(0)|` over the samples.
    fn dissipation_residual(&self) -> PyResult<f64> {
        junction::dissipation_residual(&self.inner).map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.inner.samples.len()
    }
}

/// A validated grain-boundary network.
#[pyclass(frozen)]
struct Network {
    inner: CoreNetwork,
}

#[pymethods]
impl Network {
    /// Parses a network document (GRAINS / NODES / BOUNDARIES sections).
    #[staticmethod]
    fn from_document(text: &str) -> PyResult<Self> {
        let desc = parse_network_document(text).map_err(to_py)?;
        Ok(Self {
            inner: CoreNetwork::new(desc).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn hexagonal_test() -> PyResult<Self> {
        Ok(Self {
            inner: CoreNetwork::new(GrainNetwork::hexagonal_test()).map_err(to_py)?,
        })
    }

    /// The network equivalent to a single junction with the given anchors.
    #[staticmethod]
    fn single_junction(anchors: &Anchors, a: (f64, f64), alpha: [f64; 3]) -> PyResult<Self> {
        let desc = GrainNetwork::single_junction(&anchors.inner, pt(a), alpha);
        Ok(Self {
            inner: CoreNetwork::new(desc).map_err(to_py)?,
        })
    }

    #[getter]
    fn grain_count(&self) -> usize {
        self.inner.grain_count()
    }

    #[getter]
    fn boundary_count(&self) -> usize {
        self.inner.boundary_count()
    }

    #[getter]
    fn junction_count(&self) -> usize {
        self.inner.junction_count()
    }

    fn energy(&self) -> f64 {
        net::network_energy(&self.inner.initial_state(), &self.inner)
    }

    #[pyo3(signature = (step=1e-3, t_end=1.0, scheme="rk4", min_edge_length=1e-6, record_every=1))]
    fn simulate(
        &self,
        step: f64,
        t_end: f64,
        scheme: &str,
        min_edge_length: f64,
        record_every: usize,
    ) -> PyResult<NetworkRun> {
        let cfg = sim_config(step, t_end, scheme, min_edge_length, record_every)?;
        let traj = net::integrate_network(&self.inner.initial_state(), &self.inner, &cfg).map_err(to_py)?;
        Ok(NetworkRun { inner: traj })
    }

    #[pyo3(signature = (seed=0, samples=1000, min_edge_length=1e-6))]
    fn verify(&self, seed: u64, samples: usize, min_edge_length: f64) -> PyResult<String> {
        let opts = VerifyOptions {
            seed,
            matrix_samples: samples,
            ..Default::default()
        };
        let cfg = SimConfig {
            min_edge_length,
            ..Default::default()
        };
        let rep = verify_network(&self.inner, &cfg, &opts).map_err(to_py)?;
        Ok(rep.to_json())
    }
}

/// A network run.
#[pyclass(frozen)]
struct NetworkRun {
    inner: NetworkTrajectory,
}

#[pymethods]
impl NetworkRun {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.samples.iter().map(|s| s.t).collect()
    }

    #[getter]
    fn energies(&self) -> Vec<f64> {
        self.inner.samples.iter().map(|s| s.energy).collect()
    }

    /// Per-sample grain orientations.
    #[getter]
    fn orientations(&self) -> Vec<Vec<f64>> {
        self.inner.samples.iter().map(|s| s.state.alpha.clone()).collect()
    }

    /// Per-sample node positions, in document order.
    #[getter]
    fn positions(&self) -> Vec<Vec<(f64, f64)>> {
        self.inner
            .samples
            .iter()
            .map(|s| s.state.positions.iter().map(|p| (p.x, p.y)).collect())
            .collect()
    }

    #[getter]
    fn stop(&self) -> Option<(f64, String)> {
        self.inner.stop.map(|s| (s.t, s.event.to_string()))
    }

    fn dissipation_residual(&self) -> f64 {
        self.inner.dissipation_residual()
    }

    fn __len__(&self) -> usize {
        self.inner.samples.len()
    }
}

/// The 3x3 coupling matrix for edge lengths `c`.
#[pyfunction]
fn coupling_matrix(c: [f64; 3]) -> PyResult<[[f64; 3]; 3]> {
    Ok(build_coupling(c[0], c[1], c[2]).map_err(to_py)?.entries)
}

/// Ascending eigenvalues of the coupling matrix.
#[pyfunction]
fn coupling_eigenvalues(c: [f64; 3]) -> [f64; 3] {
    closed_form_eigenvalues(c[0], c[1], c[2])
}

#[pymodule]
fn pygrainflow(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Anchors>()?;
    m.add_class::<Trajectory>()?;
    m.add_class::<Network>()?;
    m.add_class::<NetworkRun>()?;
    m.add_function(wrap_pyfunction!(coupling_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(coupling_eigenvalues, m)?)?;
    let py = m.py();
    m.add("GrainflowError", py.get_type::<GrainflowError>())?;
    m.add("NoInteriorEquilibrium", py.get_type::<NoInteriorEquilibrium>())?;
    m.add("CriticalEventError", py.get_type::<CriticalEventError>())?;
    Ok(())
}

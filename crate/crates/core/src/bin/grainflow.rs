use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use grainflow::geometry::{angle_condition, fermat_point, DEFAULT_FERMAT_MAX_ITER, DEFAULT_FERMAT_TOL};
use grainflow::io::{self as gio, JunctionSpec, RunConfig, Scenario};
use grainflow::junction::{integrate, JunctionState, Trajectory};
use grainflow::network::{integrate_network, NetworkTrajectory};
use grainflow::report::{verify_junction, verify_network, VerifyOptions};
use grainflow::{svg, Error, Point2, Scheme};

const EXIT_USAGE: u8 = 1;
const EXIT_PRECONDITION: u8 = 2;
const EXIT_CRITICAL: u8 = 3;
const EXIT_VERIFY_FAILED: u8 = 4;

#[derive(Parser)]
#[command(name = "grainflow", version, about = "Grain boundary networks with dynamic orientations and triple-junction drag")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Locate the equilibrium junction (Fermat point) of three anchors.
    Equilibrium {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Print JSON instead of key = value lines.
        #[arg(long)]
        json: bool,
    },
    /// Integrate a single junction or a network and write a trajectory CSV.
    Simulate(RunArgs),
    /// Integrate a network document; same as `simulate --network`.
    Network(RunArgs),
    /// Run the verification suite and write a JSON report.
    Verify {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Report path (stdout when absent).
        #[arg(long)]
        report: Option<PathBuf>,
        /// Randomized scenarios for the estimate checks.
        #[arg(long, default_value_t = 100)]
        scenarios: usize,
        /// Random samples for the matrix checks.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Negate the velocity field (negative control).
        #[arg(long, hide = true)]
        flip_sign: bool,
    },
    /// Render a configuration as SVG.
    Snapshot {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Draw the last row of this trajectory CSV instead of the initial state.
        #[arg(long)]
        trajectory: Option<PathBuf>,
        /// SVG path (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a grid of initial positions and orientations, one CSV per cell.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Initial junction position `x,y`; repeat for more grid rows.
        #[arg(long = "a0-grid", required = true)]
        a0_grid: Vec<String>,
        /// Initial orientations `a1,a2,a3`; repeat for more grid columns.
        #[arg(long = "alpha0-grid", required = true)]
        alpha0_grid: Vec<String>,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// CSV path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScenarioArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Anchors as `x1,y1;x2,y2;x3,y3`.
    #[arg(long, allow_hyphen_values = true)]
    anchors: Option<String>,
    /// Initial junction position `x,y`.
    #[arg(long, allow_hyphen_values = true)]
    a0: Option<String>,
    /// Initial orientations `a1,a2,a3`.
    #[arg(long, allow_hyphen_values = true)]
    alpha0: Option<String>,
    /// Network document.
    #[arg(long)]
    network: Option<PathBuf>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    scheme: Option<Scheme>,
    #[arg(long)]
    min_edge_length: Option<f64>,
    #[arg(long)]
    record_every: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
}

fn numbers(text: &str, n: usize, what: &str) -> Result<Vec<f64>, Error> {
    let vals: Vec<f64> = text
        .split(|c: char| c == ',' || c == ';' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::Usage(format!("{what}: '{t}' is not a number")))
        })
        .collect::<Result<_, _>>()?;
    if vals.len() != n {
        return Err(Error::Usage(format!("{what}: expected {n} numbers, got {}", vals.len())));
    }
    Ok(vals)
}

impl ScenarioArgs {
    fn resolve(&self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let junction_flags = self.anchors.is_some() || self.a0.is_some() || self.alpha0.is_some();
        if junction_flags && self.network.is_some() {
            return Err(Error::Usage("junction flags cannot be combined with --network".into()));
        }
        if let Some(n) = &self.network {
            cfg.network = Some(n.clone());
            cfg.junction = None;
        }
        if junction_flags {
            let mut spec = cfg.junction.unwrap_or_else(JunctionSpec::standard);
            if let Some(s) = &self.anchors {
                let v = numbers(s, 6, "--anchors")?;
                spec.anchors = [[v[0], v[1]], [v[2], v[3]], [v[4], v[5]]];
            }
            if let Some(s) = &self.a0 {
                let v = numbers(s, 2, "--a0")?;
                spec.a0 = [v[0], v[1]];
            }
            if let Some(s) = &self.alpha0 {
                let v = numbers(s, 3, "--alpha0")?;
                spec.alpha0 = [v[0], v[1], v[2]];
            }
            cfg.junction = Some(spec);
            cfg.network = None;
        }
        let sim = &mut cfg.sim;
        if let Some(v) = self.step {
            sim.step = v;
        }
        if let Some(v) = self.t_end {
            sim.t_end = v;
        }
        if let Some(v) = self.scheme {
            sim.scheme = v;
        }
        if let Some(v) = self.min_edge_length {
            sim.min_edge_length = v;
        }
        if let Some(v) = self.record_every {
            sim.record_every = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.gamma {
            cfg.mobility.gamma = v;
        }
        if let Some(v) = self.eta {
            cfg.mobility.eta = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// A command's failure: the exit code and what to print.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NoInteriorEquilibrium { .. } => EXIT_PRECONDITION,
            Error::JunctionCollision { .. } | Error::CriticalEvent { .. } | Error::JunctionApproach { .. } => {
                EXIT_CRITICAL
            }
            _ => EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Error::from(e).into()
    }
}

type CmdResult = Result<u8, Failure>;

fn create(path: &Path) -> Result<BufWriter<File>, Error> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn cmd_equilibrium(args: &ScenarioArgs, json: bool) -> CmdResult {
    let cfg = args.resolve()?;
    let (anchors, _) = cfg.junction.unwrap_or_else(JunctionSpec::standard).resolve()?;
    let cond = angle_condition(&anchors);
    let result = fermat_point(&anchors, DEFAULT_FERMAT_TOL, DEFAULT_FERMAT_MAX_ITER);
    let mut out = io::stdout().lock();
    if json {
        let body = serde_json::json!({
            "angle_condition": cond.holds(),
            "vertex_sums": cond.sums,
            "equilibrium": result.as_ref().ok().map(|r| serde_json::json!({
                "a_inf": [r.a_inf.x, r.a_inf.y],
                "residual": r.residual,
                "iterations": r.iterations,
                "edge_lengths": r.b_inf.len,
            })),
        });
        writeln!(out, "{}", serde_json::to_string_pretty(&body).expect("json"))?;
    } else {
        writeln!(out, "angle_condition = {}", cond.holds())?;
        writeln!(out, "vertex_sums = {} {} {}", cond.sums[0], cond.sums[1], cond.sums[2])?;
        if let Ok(r) = &result {
            writeln!(out, "a_inf = {} {}", r.a_inf.x, r.a_inf.y)?;
            writeln!(out, "residual = {:e}", r.residual)?;
            writeln!(out, "iterations = {}", r.iterations)?;
        }
    }
    result?;
    Ok(0)
}

fn report_stop_junction(traj: &Trajectory) -> u8 {
    match traj.stop {
        Some(stop) => {
            eprintln!("critical event at t={}: {}", stop.t, stop.event);
            EXIT_CRITICAL
        }
        None => 0,
    }
}

fn report_stop_network(traj: &NetworkTrajectory) -> u8 {
    match traj.stop {
        Some(stop) => {
            eprintln!("critical event at t={}: {}", stop.t, stop.event);
            EXIT_CRITICAL
        }
        None => 0,
    }
}

fn cmd_simulate(args: &RunArgs, require_network: bool) -> CmdResult {
    let cfg = args.scenario.resolve()?;
    let out_path = args.out.clone().or_else(|| cfg.output.csv.clone());
    match cfg.scenario()? {
        Scenario::Junction(..) if require_network => {
            Err(Error::Usage("the network command needs --network or a config with `network`".into()).into())
        }
        Scenario::Junction(anchors, init) => {
            let traj = integrate(&init, &anchors, &cfg.sim)?;
            gio::write_trajectory_csv(sink(out_path.as_deref())?, &traj)?;
            Ok(report_stop_junction(&traj))
        }
        Scenario::Network(net) => {
            let traj = integrate_network(&net.initial_state(), &net, &cfg.sim)?;
            gio::write_network_csv(sink(out_path.as_deref())?, &net, &traj)?;
            Ok(report_stop_network(&traj))
        }
    }
}

fn cmd_verify(args: &ScenarioArgs, report: Option<&Path>, scenarios: usize, samples: usize, flip_sign: bool) -> CmdResult {
    let cfg = args.resolve()?;
    let opts = VerifyOptions {
        seed: cfg.seed,
        random_scenarios: scenarios,
        matrix_samples: samples,
        flip_sign,
    };
    let rep = match cfg.scenario()? {
        Scenario::Junction(anchors, init) => verify_junction(&anchors, &init, &cfg.sim, &opts)?,
        Scenario::Network(net) => verify_network(&net, &cfg.sim, &opts)?,
    };
    let path = report.map(Path::to_path_buf).or_else(|| cfg.output.report.clone());
    let mut out = sink(path.as_deref())?;
    writeln!(out, "{}", rep.to_json())?;
    out.flush()?;
    for c in rep.checks.iter().filter(|c| !c.pass) {
        eprintln!("FAIL {}: {} (tolerance {})", c.name, c.value, c.tolerance);
    }
    Ok(if rep.pass { 0 } else { EXIT_VERIFY_FAILED })
}

fn cmd_snapshot(args: &ScenarioArgs, trajectory: Option<&Path>, out: Option<&Path>) -> CmdResult {
    let cfg = args.resolve()?;
    let open = |p: &Path| File::open(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())));
    let doc = match cfg.scenario()? {
        Scenario::Junction(anchors, init) => {
            let state = match trajectory {
                Some(p) => last_junction_state(gio::read_trajectory_csv(open(p)?)?.samples.last().map(|s| s.state))?,
                None => init,
            };
            svg::junction_svg(&anchors, &state)
        }
        Scenario::Network(net) => {
            let state = match trajectory {
                Some(p) => gio::read_network_csv(open(p)?, &net)?
                    .samples
                    .pop()
                    .map(|s| s.state)
                    .ok_or_else(|| Error::Usage("trajectory CSV has no rows".into()))?,
                None => net.initial_state(),
            };
            svg::network_svg(&net, &state)
        }
    };
    let path = out.map(Path::to_path_buf).or_else(|| cfg.output.svg.clone());
    let mut w = sink(path.as_deref())?;
    w.write_all(doc.as_bytes())?;
    w.flush()?;
    Ok(0)
}

fn last_junction_state(s: Option<JunctionState>) -> Result<JunctionState, Error> {
    s.ok_or_else(|| Error::Usage("trajectory CSV has no rows".into()))
}

fn cmd_sweep(args: &ScenarioArgs, a0_grid: &[String], alpha0_grid: &[String], out_dir: &Path) -> CmdResult {
    let cfg = args.resolve()?;
    let Scenario::Junction(anchors, _) = cfg.scenario()? else {
        return Err(Error::Usage("sweep runs single-junction scenarios only".into()).into());
    };
    let a0s = a0_grid
        .iter()
        .map(|s| numbers(s, 2, "--a0-grid").map(|v| Point2::new(v[0], v[1])))
        .collect::<Result<Vec<_>, _>>()?;
    let alphas = alpha0_grid
        .iter()
        .map(|s| numbers(s, 3, "--alpha0-grid").map(|v| [v[0], v[1], v[2]]))
        .collect::<Result<Vec<_>, _>>()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::Io(format!("{}: {e}", out_dir.display())))?;
    let mut index = csv::Writer::from_writer(create(&out_dir.join("index.csv"))?);
    let io_err = |e: csv::Error| Error::Io(e.to_string());
    index
        .write_record(["file", "a0_x", "a0_y", "alpha_1", "alpha_2", "alpha_3", "status", "t_final", "energy_final"])
        .map_err(io_err)?;
    let mut code = 0;
    for (i, a0) in a0s.iter().enumerate() {
        for (j, alpha) in alphas.iter().enumerate() {
            let name = format!("cell_{i}_{j}.csv");
            let init = JunctionState::new(*a0, *alpha);
            let (status, t_final, e_final) = match integrate(&init, &anchors, &cfg.sim) {
                Ok(traj) => {
                    gio::write_trajectory_csv(create(&out_dir.join(&name))?, &traj)?;
                    if report_stop_junction(&traj) != 0 {
                        code = EXIT_CRITICAL;
                    }
                    let last = traj.last();
                    let status = if traj.is_complete() { "ok" } else { "critical_event" };
                    (status, last.t.to_string(), last.energy.to_string())
                }
                Err(e @ Error::JunctionCollision { .. }) => {
                    eprintln!("{name}: {e}");
                    code = EXIT_CRITICAL;
                    ("rejected", String::new(), String::new())
                }
                Err(e) => return Err(e.into()),
            };
            let row = [
                name,
                a0.x.to_string(),
                a0.y.to_string(),
                alpha[0].to_string(),
                alpha[1].to_string(),
                alpha[2].to_string(),
                status.to_string(),
                t_final,
                e_final,
            ];
            index.write_record(&row).map_err(io_err)?;
        }
    }
    index.flush()?;
    Ok(code)
}

fn run(cli: Cli) -> CmdResult {
    match &cli.command {
        Command::Equilibrium { scenario, json } => cmd_equilibrium(scenario, *json),
        Command::Simulate(args) => cmd_simulate(args, false),
        Command::Network(args) => cmd_simulate(args, true),
        Command::Verify {
            scenario,
            report,
            scenarios,
            samples,
            flip_sign,
        } => cmd_verify(scenario, report.as_deref(), *scenarios, *samples, *flip_sign),
        Command::Snapshot {
            scenario,
            trajectory,
            out,
        } => cmd_snapshot(scenario, trajectory.as_deref(), out.as_deref()),
        Command::Sweep {
            scenario,
            a0_grid,
            alpha0_grid,
            out_dir,
        } => cmd_sweep(scenario, a0_grid, alpha0_grid, out_dir),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

//! Run configuration, the network description format, and trajectory CSV.
//!
//! A network document is line oriented with three sections; blank lines and
//! anything after `#` are ignored:
//!
//! ```text
//! GRAINS
//! # id alpha0
//! 1 0.3
//! NODES
//! # id kind x y        (kind: junction | anchor)
//! 4 junction 0.1 0.05
//! BOUNDARIES
//! # id node_a node_b grain_1 grain_2
//! 1 4 1 3 1
//! ```

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AnchorSet, Point2};
use crate::junction::{JunctionState, Sample, Trajectory};
use crate::network::{BoundarySegment, Grain, GrainNetwork, Network, NetworkSample, NetworkState, NetworkTrajectory, Node, NodeKind};
use crate::scenario;
use crate::sim::{EarlyStop, SimConfig};

pub const TRAJECTORY_COLUMNS: [&str; 10] = [
    "t",
    "a_x",
    "a_y",
    "alpha_1",
    "alpha_2",
    "alpha_3",
    "energy",
    "alpha_rate_sq",
    "drag_rate_sq",
    "cum_dissipation",
];

const EVENT_PREFIX: &str = "# critical-event:";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JunctionSpec {
    pub anchors: [[f64; 2]; 3],
    pub a0: [f64; 2],
    pub alpha0: [f64; 3],
}

impl JunctionSpec {
    pub fn standard() -> Self {
        let (anchors, init) = scenario::standard();
        let p = anchors.points();
        Self {
            anchors: [[p[0].x, p[0].y], [p[1].x, p[1].y], [p[2].x, p[2].y]],
            a0: [init.a.x, init.a.y],
            alpha0: init.alpha,
        }
    }

    pub fn resolve(&self) -> Result<(AnchorSet, JunctionState)> {
        let [x1, x2, x3] = self.anchors.map(|[x, y]| Point2::new(x, y));
        let anchors = AnchorSet::new(x1, x2, x3)?;
        let init = JunctionState::new(Point2::new(self.a0[0], self.a0[1]), self.alpha0);
        if !init.is_finite() {
            return Err(Error::Domain("initial junction state is not finite".into()));
        }
        Ok((anchors, init))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Mobility {
    pub gamma: f64,
    pub eta: f64,
}

impl Default for Mobility {
    fn default() -> Self {
        Self { gamma: 1.0, eta: 1.0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    pub csv: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

/// Everything a command needs. Read from TOML; every field is optional and a
/// config with neither `junction` nor `network` runs the standard scenario.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub junction: Option<JunctionSpec>,
    /// Path to a network document, relative to the working directory.
    pub network: Option<PathBuf>,
    pub sim: SimConfig,
    pub mobility: Mobility,
    pub output: OutputPaths,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    Junction(AnchorSet, JunctionState),
    Network(Network),
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map_or(0, |s| text[..s.start.min(text.len())].matches('\n').count() + 1);
            Error::Parse {
                line,
                message: e.message().to_string(),
            }
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.junction.is_some() && self.network.is_some() {
            return Err(Error::Usage("config sets both a junction scenario and a network".into()));
        }
        self.sim.validate()
    }

    pub fn scenario(&self) -> Result<Scenario> {
        self.validate()?;
        if let Some(path) = &self.network {
            let desc = read_network_file(path)?;
            let net = Network::new(desc)?.with_mobilities(self.mobility.gamma, self.mobility.eta)?;
            return Ok(Scenario::Network(net));
        }
        let spec = self.junction.unwrap_or_else(JunctionSpec::standard);
        let (anchors, init) = spec.resolve()?;
        Ok(Scenario::Junction(anchors, init))
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_f64(tok: &str, line: usize, what: &str) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| parse_err(line, format!("{what}: '{tok}' is not a number")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("{what}: '{tok}' is not finite")));
    }
    Ok(v)
}

fn parse_id(tok: &str, line: usize, what: &str) -> Result<u64> {
    tok.parse()
        .map_err(|_| parse_err(line, format!("{what}: '{tok}' is not a non-negative integer")))
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Grains,
    Nodes,
    Boundaries,
}

pub fn parse_network_document(text: &str) -> Result<GrainNetwork> {
    let mut net = GrainNetwork::default();
    let mut section = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("");
        let toks: Vec<&str> = body
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() == 1 {
            let header = match toks[0].to_ascii_uppercase().as_str() {
                "GRAINS" => Some(Section::Grains),
                "NODES" => Some(Section::Nodes),
                "BOUNDARIES" => Some(Section::Boundaries),
                _ => None,
            };
            if header.is_some() {
                section = header;
                continue;
            }
        }
        let expect = |n: usize, what: &str| {
            if toks.len() == n {
                Ok(())
            } else {
                Err(parse_err(line, format!("{what} needs {n} fields, found {}", toks.len())))
            }
        };
        match section {
            None => return Err(parse_err(line, "data before the first section header")),
            Some(Section::Grains) => {
                expect(2, "grain")?;
                net.grains.push(Grain {
                    id: parse_id(toks[0], line, "grain id")?,
                    alpha0: parse_f64(toks[1], line, "alpha0")?,
                });
            }
            Some(Section::Nodes) => {
                expect(4, "node")?;
                let kind = match toks[1].to_ascii_lowercase().as_str() {
                    "junction" | "triple_junction" => NodeKind::TripleJunction,
                    "anchor" => NodeKind::Anchor,
                    other => return Err(parse_err(line, format!("unknown node kind '{other}'"))),
                };
                net.nodes.push(Node {
                    id: parse_id(toks[0], line, "node id")?,
                    kind,
                    position: Point2::new(parse_f64(toks[2], line, "x")?, parse_f64(toks[3], line, "y")?),
                });
            }
            Some(Section::Boundaries) => {
                expect(5, "boundary")?;
                let ids: Vec<u64> = toks
                    .iter()
                    .map(|t| parse_id(t, line, "boundary field"))
                    .collect::<Result<_>>()?;
                net.boundaries.push(BoundarySegment {
                    id: ids[0],
                    nodes: [ids[1], ids[2]],
                    grains: [ids[3], ids[4]],
                });
            }
        }
    }
    Ok(net)
}

pub fn write_network_document(net: &GrainNetwork) -> String {
    let mut out = String::from("GRAINS\n# id alpha0\n");
    for g in &net.grains {
        let _ = writeln!(out, "{} {}", g.id, g.alpha0);
    }
    out.push_str("NODES\n# id kind x y\n");
    for n in &net.nodes {
        let kind = match n.kind {
            NodeKind::TripleJunction => "junction",
            NodeKind::Anchor => "anchor",
        };
        let _ = writeln!(out, "{} {kind} {} {}", n.id, n.position.x, n.position.y);
    }
    out.push_str("BOUNDARIES\n# id node_a node_b grain_1 grain_2\n");
    for b in &net.boundaries {
        let _ = writeln!(
            out,
            "{} {} {} {} {}",
            b.id, b.nodes[0], b.nodes[1], b.grains[0], b.grains[1]
        );
    }
    out
}

pub fn read_network_file(path: &Path) -> Result<GrainNetwork> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_network_document(&text)
}

fn csv_err(e: csv::Error) -> Error {
    match e.position() {
        Some(p) => parse_err(p.line() as usize, e.to_string()),
        None => Error::Io(e.to_string()),
    }
}

fn write_event<W: Write>(w: &mut W, stop: &Option<EarlyStop>) -> Result<()> {
    if let Some(stop) = stop {
        writeln!(w, "{EVENT_PREFIX} t={} {}", stop.t, stop.event)?;
    }
    Ok(())
}

/// Writes samples with full round-trip precision. An early stop is recorded
/// as a `# critical-event:` line after the last row.
pub fn write_trajectory_csv<W: Write>(w: W, traj: &Trajectory) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(TRAJECTORY_COLUMNS).map_err(csv_err)?;
    for s in &traj.samples {
        let row = [
            s.t,
            s.state.a.x,
            s.state.a.y,
            s.state.alpha[0],
            s.state.alpha[1],
            s.state.alpha[2],
            s.energy,
            s.alpha_rate_sq,
            s.drag_rate_sq,
            s.cum_dissipation,
        ];
        wtr.write_record(row.iter().map(|v| v.to_string())).map_err(csv_err)?;
    }
    let mut w = wtr.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    write_event(&mut w, &traj.stop)?;
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryTable {
    pub samples: Vec<Sample>,
    /// Text of the `# critical-event:` line, if any.
    pub critical_event: Option<String>,
}

fn event_line(text: &str) -> Option<String> {
    text.lines()
        .find_map(|l| l.strip_prefix(EVENT_PREFIX))
        .map(|s| s.trim().to_string())
}

fn read_rows(text: &str, expected: &[String]) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    if header != expected {
        return Err(parse_err(1, format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let row = rec
            .iter()
            .zip(expected)
            .map(|(tok, name)| {
                tok.trim()
                    .parse::<f64>()
                    .map_err(|_| parse_err(line, format!("{name}: '{tok}' is not a number")))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn read_trajectory_csv<R: Read>(mut r: R) -> Result<TrajectoryTable> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let expected: Vec<String> = TRAJECTORY_COLUMNS.iter().map(|s| s.to_string()).collect();
    let samples = read_rows(&text, &expected)?
        .into_iter()
        .map(|v| Sample {
            t: v[0],
            state: JunctionState::new(Point2::new(v[1], v[2]), [v[3], v[4], v[5]]),
            energy: v[6],
            alpha_rate_sq: v[7],
            drag_rate_sq: v[8],
            cum_dissipation: v[9],
        })
        .collect();
    Ok(TrajectoryTable {
        samples,
        critical_event: event_line(&text),
    })
}

/// `t, energy, alpha_rate_sq, drag_rate_sq, cum_dissipation`, then
/// `x_<id>, y_<id>` per junction and `alpha_<id>` per grain.
pub fn network_csv_columns(net: &Network) -> Vec<String> {
    let desc = net.description();
    let mut cols: Vec<String> = ["t", "energy", "alpha_rate_sq", "drag_rate_sq", "cum_dissipation"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for &n in net.junction_nodes() {
        let id = desc.nodes[n].id;
        cols.push(format!("x_{id}"));
        cols.push(format!("y_{id}"));
    }
    for g in &desc.grains {
        cols.push(format!("alpha_{}", g.id));
    }
    cols
}

pub fn write_network_csv<W: Write>(w: W, net: &Network, traj: &NetworkTrajectory) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(network_csv_columns(net)).map_err(csv_err)?;
    for s in &traj.samples {
        let mut row = vec![s.t, s.energy, s.alpha_rate_sq, s.drag_rate_sq, s.cum_dissipation];
        for &n in net.junction_nodes() {
            row.push(s.state.positions[n].x);
            row.push(s.state.positions[n].y);
        }
        row.extend_from_slice(&s.state.alpha);
        wtr.write_record(row.iter().map(|v| v.to_string())).map_err(csv_err)?;
    }
    let mut w = wtr.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    write_event(&mut w, &traj.stop)?;
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkTable {
    pub samples: Vec<NetworkSample>,
    pub critical_event: Option<String>,
}

/// Reads a CSV written by [`write_network_csv`] for the same network. Anchor
/// positions are taken from the network.
pub fn read_network_csv<R: Read>(mut r: R, net: &Network) -> Result<NetworkTable> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let rows = read_rows(&text, &network_csv_columns(net))?;
    let base = net.initial_state();
    let nj = net.junction_count();
    let samples = rows
        .into_iter()
        .map(|v| {
            let mut state: NetworkState = base.clone();
            for (slot, &n) in net.junction_nodes().iter().enumerate() {
                state.positions[n] = Point2::new(v[5 + 2 * slot], v[6 + 2 * slot]);
            }
            state.alpha.copy_from_slice(&v[5 + 2 * nj..]);
            NetworkSample {
                t: v[0],
                state,
                energy: v[1],
                alpha_rate_sq: v[2],
                drag_rate_sq: v[3],
                cum_dissipation: v[4],
            }
        })
        .collect();
    Ok(NetworkTable {
        samples,
        critical_event: event_line(&text),
    })
}

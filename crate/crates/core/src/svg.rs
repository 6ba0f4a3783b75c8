//! Static SVG snapshots of junction and network configurations.
//!
//! Output is a pure function of the input: coordinates are printed with a
//! fixed number of decimals and elements are emitted in input order.

use std::fmt::Write as _;

use crate::geometry::{AnchorSet, Point2};
use crate::junction::JunctionState;
use crate::network::{boundary_length, Network, NetworkState, NodeKind};

const CANVAS: f64 = 600.0;
const MARGIN: f64 = 40.0;

struct Frame {
    min: Point2,
    scale: f64,
    height: f64,
}

impl Frame {
    fn fit(points: &[Point2]) -> Self {
        let (mut lo, mut hi) = (points[0], points[0]);
        for p in points {
            lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let span = (hi.x - lo.x).max(hi.y - lo.y).max(1e-9);
        let scale = (CANVAS - 2.0 * MARGIN) / span;
        Self {
            min: lo,
            scale,
            height: (hi.y - lo.y) * scale + 2.0 * MARGIN,
        }
    }

    fn width(&self, points: &[Point2]) -> f64 {
        let hi = points.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max);
        (hi - self.min.x) * self.scale + 2.0 * MARGIN
    }

    /// Screen coordinates, y pointing down.
    fn map(&self, p: Point2) -> (f64, f64) {
        (
            MARGIN + (p.x - self.min.x) * self.scale,
            self.height - MARGIN - (p.y - self.min.y) * self.scale,
        )
    }
}

struct Canvas {
    frame: Frame,
    body: String,
    width: f64,
}

impl Canvas {
    fn new(points: &[Point2]) -> Self {
        let frame = Frame::fit(points);
        let width = frame.width(points);
        Self {
            frame,
            body: String::new(),
            width,
        }
    }

    fn line(&mut self, p: Point2, q: Point2, class: &str) {
        let (x1, y1) = self.frame.map(p);
        let (x2, y2) = self.frame.map(q);
        let _ = writeln!(
            self.body,
            r#"  <line class="{class}" x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}" stroke="black" stroke-width="2"/>"#
        );
    }

    fn point(&mut self, p: Point2, kind: NodeKind) {
        let (cx, cy) = self.frame.map(p);
        let (class, fill) = match kind {
            NodeKind::TripleJunction => ("junction", "crimson"),
            NodeKind::Anchor => ("anchor", "white"),
        };
        let _ = writeln!(
            self.body,
            r#"  <circle class="{class}" cx="{cx:.3}" cy="{cy:.3}" r="5" fill="{fill}" stroke="black"/>"#
        );
    }

    fn label(&mut self, p: Point2, text: &str) {
        let (x, y) = self.frame.map(p);
        let _ = writeln!(
            self.body,
            r#"  <text class="grain" x="{x:.3}" y="{y:.3}" font-family="sans-serif" font-size="14" text-anchor="middle">{text}</text>"#
        );
    }

    fn finish(self) -> String {
        let (w, h) = (self.width, self.frame.height);
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.3} {h:.3}\">\n  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body
        )
    }
}

fn centroid(points: &[Point2]) -> Point2 {
    let n = points.len() as f64;
    let s = points.iter().fold(Point2::ZERO, |acc, p| acc + *p);
    s * (1.0 / n)
}

/// Three boundaries, three anchors, the junction, and one orientation label
/// per grain.
pub fn junction_svg(anchors: &AnchorSet, state: &JunctionState) -> String {
    let x = anchors.points();
    let mut all = x.to_vec();
    all.push(state.a);
    let mut c = Canvas::new(&all);
    for p in x {
        c.line(state.a, *p, "boundary");
    }
    for p in x {
        c.point(*p, NodeKind::Anchor);
    }
    c.point(state.a, NodeKind::TripleJunction);
    for k in 0..3 {
        let at = centroid(&[state.a, x[k], x[(k + 1) % 3]]);
        c.label(at, &format!("{:.4}", state.alpha[k]));
    }
    c.finish()
}

/// One line per boundary, one marker per node, and one label per grain at
/// the length-weighted mean of its boundary midpoints.
pub fn network_svg(net: &Network, state: &NetworkState) -> String {
    let desc = net.description();
    let mut c = Canvas::new(&state.positions);
    for &[p, q] in net.boundary_ends() {
        c.line(state.positions[p], state.positions[q], "boundary");
    }
    for (n, p) in desc.nodes.iter().zip(&state.positions) {
        c.point(*p, n.kind);
    }
    let mut sums = vec![(Point2::ZERO, 0.0); desc.grains.len()];
    for (j, (&[p, q], sides)) in net.boundary_ends().iter().zip(net.boundary_sides()).enumerate() {
        let mid = (state.positions[p] + state.positions[q]) * 0.5;
        let w = boundary_length(state, net, j).max(1e-12);
        for &g in sides {
            sums[g].0 += mid * w;
            sums[g].1 += w;
        }
    }
    for (g, (s, w)) in sums.into_iter().enumerate() {
        if w > 0.0 {
            c.label(s * (1.0 / w), &format!("{:.4}", state.alpha[g]));
        }
    }
    c.finish()
}

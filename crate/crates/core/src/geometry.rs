//! Planar primitives for the single-junction configuration: anchors, edge
//! vectors, line tensions and the Fermat–Torricelli equilibrium.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Anchors closer than this are treated as coincident.
pub const MIN_ANCHOR_SEPARATION: f64 = 1e-12;
/// Triangles with smaller area are treated as collinear.
pub const MIN_TRIANGLE_AREA: f64 = 1e-14;

pub const DEFAULT_FERMAT_TOL: f64 = 1e-12;
pub const DEFAULT_FERMAT_MAX_ITER: usize = 10_000;

/// Iterates closer than this to an anchor are nudged off it.
const ANCHOR_SNAP: f64 = 1e-12;
const ANCHOR_NUDGE: f64 = 1e-9;

/// A point or vector in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

/// Same representation, used where the value is a displacement.
pub type Vec2 = Point2;

impl Point2 {
    pub const ZERO: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Self) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Unit vector in the same direction, or `None` for the zero vector.
    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        (n > 0.0).then(|| self * (1.0 / n))
    }
}

impl Add for Point2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Point2 {
    fn add_assign(&mut self, o: Self) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Point2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s)
    }
}

impl Neg for Point2 {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

impl From<(f64, f64)> for Point2 {
    fn from((x, y): (f64, f64)) -> Self {
        Self::new(x, y)
    }
}

/// The three fixed outer endpoints of the boundaries meeting at a junction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnchorSet {
    points: [Point2; 3],
}

impl AnchorSet {
    /// Rejects non-finite, coincident or collinear anchors.
    pub fn new(x1: Point2, x2: Point2, x3: Point2) -> Result<Self> {
        let points = [x1, x2, x3];
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidGeometry(format!("anchor {} is not finite", i + 1)));
        }
        for i in 0..3 {
            let j = (i + 1) % 3;
            let d = points[i].distance(points[j]);
            if d < MIN_ANCHOR_SEPARATION {
                return Err(Error::InvalidGeometry(format!(
                    "anchors {} and {} coincide (distance {d:e})",
                    i + 1,
                    j + 1
                )));
            }
        }
        let area = 0.5 * cross(x2 - x1, x3 - x1).abs();
        if area < MIN_TRIANGLE_AREA {
            return Err(Error::InvalidGeometry(format!(
                "anchors are collinear (triangle area {area:e})"
            )));
        }
        Ok(Self { points })
    }

    pub fn from_array(points: [Point2; 3]) -> Result<Self> {
        Self::new(points[0], points[1], points[2])
    }

    /// Equilateral triangle with unit circumradius centred at the origin,
    /// first vertex on the positive x axis.
    pub fn equilateral() -> Self {
        let h = 3f64.sqrt() / 2.0;
        Self {
            points: [
                Point2::new(1.0, 0.0),
                Point2::new(-0.5, h),
                Point2::new(-0.5, -h),
            ],
        }
    }

    pub fn points(&self) -> &[Point2; 3] {
        &self.points
    }

    pub fn get(&self, j: usize) -> Point2 {
        self.points[j]
    }

    pub fn centroid(&self) -> Point2 {
        let [a, b, c] = self.points;
        Point2::new((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0)
    }

    /// Cyclic relabelling `x_j -> x_{j+shift}`.
    pub fn rotated(&self, shift: usize) -> Self {
        let p = &self.points;
        Self {
            points: [p[shift % 3], p[(shift + 1) % 3], p[(shift + 2) % 3]],
        }
    }

    /// Sum of distances from `a` to the anchors; the Fermat point minimizes it.
    pub fn total_distance(&self, a: Point2) -> f64 {
        self.points.iter().map(|x| a.distance(*x)).sum()
    }
}

fn cross(u: Vec2, v: Vec2) -> f64 {
    u.x * v.y - u.y * v.x
}

/// Edge vectors `b_j = x_j - a` from the junction to each anchor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdgeVectors {
    pub b: [Vec2; 3],
    pub len: [f64; 3],
}

impl EdgeVectors {
    /// Unit tangents pointing away from the junction. Fails on a zero-length
    /// edge, naming it 1-based.
    pub fn unit(&self) -> Result<[Vec2; 3]> {
        let mut out = [Vec2::ZERO; 3];
        for j in 0..3 {
            if !(self.len[j] > 0.0) {
                return Err(Error::JunctionCollision {
                    edge: j + 1,
                    length: self.len[j],
                });
            }
            out[j] = self.b[j] * (1.0 / self.len[j]);
        }
        Ok(out)
    }

    pub fn min_len(&self) -> (usize, f64) {
        let mut best = (0, self.len[0]);
        for j in 1..3 {
            if self.len[j] < best.1 {
                best = (j, self.len[j]);
            }
        }
        best
    }

    pub fn total_len(&self) -> f64 {
        self.len.iter().sum()
    }
}

pub fn edge_vectors(anchors: &AnchorSet, a: Point2) -> EdgeVectors {
    let mut b = [Vec2::ZERO; 3];
    let mut len = [0.0; 3];
    for j in 0..3 {
        b[j] = anchors.points[j] - a;
        len[j] = b[j].norm();
    }
    EdgeVectors { b, len }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AngleCondition {
    /// `|sum_{j != i} (x_j - x_i)/|x_j - x_i||` for each vertex.
    pub sums: [f64; 3],
    /// `sums[i] > 1`, i.e. the interior angle at vertex `i` is below 120°.
    pub vertex_ok: [bool; 3],
}

impl AngleCondition {
    pub fn holds(&self) -> bool {
        self.vertex_ok.iter().all(|&ok| ok)
    }

    pub fn first_failure(&self) -> Option<usize> {
        self.vertex_ok.iter().position(|&ok| !ok)
    }
}

pub fn angle_condition(anchors: &AnchorSet) -> AngleCondition {
    let p = &anchors.points;
    let mut sums = [0.0; 3];
    let mut vertex_ok = [false; 3];
    for i in 0..3 {
        let mut s = Vec2::ZERO;
        for j in (0..3).filter(|&j| j != i) {
            // anchors are pairwise distinct by construction
            s += (p[j] - p[i]).normalized().unwrap_or(Vec2::ZERO);
        }
        sums[i] = s.norm();
        vertex_ok[i] = sums[i] > 1.0;
    }
    AngleCondition { sums, vertex_ok }
}

/// The equilibrium junction position and its edge vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquilibriumResult {
    pub a_inf: Point2,
    pub b_inf: EdgeVectors,
    /// `|sum_j b_j / |b_j||` at `a_inf`.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Fermat point of the anchor triangle by Weiszfeld iteration.
///
/// Refuses triangles with an angle of 120° or more, where the minimizer of the
/// total distance is a vertex and no interior junction can be in equilibrium.
pub fn fermat_point(anchors: &AnchorSet, tol: f64, max_iter: usize) -> Result<EquilibriumResult> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let cond = angle_condition(anchors);
    if let Some(vertex) = cond.first_failure() {
        return Err(Error::NoInteriorEquilibrium { vertex: vertex + 1 });
    }

    let p = anchors.points;
    let mut a = anchors.centroid();
    let mut residual = f64::INFINITY;
    for iter in 0..=max_iter {
        if let Some(k) = (0..3).find(|&k| a.distance(p[k]) < ANCHOR_SNAP) {
            let opposite = (p[(k + 1) % 3] + p[(k + 2) % 3]) * 0.5;
            let dir = (opposite - p[k]).normalized().unwrap_or(Vec2::new(1.0, 0.0));
            a = p[k] + dir * ANCHOR_NUDGE;
        }
        let e = edge_vectors(anchors, a);
        let u = e.unit()?;
        residual = (u[0] + u[1] + u[2]).norm();
        if residual <= tol {
            return Ok(EquilibriumResult {
                a_inf: a,
                b_inf: e,
                residual,
                iterations: iter,
                converged: true,
            });
        }
        if iter == max_iter {
            break;
        }
        let mut num = Vec2::ZERO;
        let mut den = 0.0;
        for j in 0..3 {
            let w = 1.0 / e.len[j];
            num += p[j] * w;
            den += w;
        }
        a = num * (1.0 / den);
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        residual,
        last: a,
    })
}

/// Fermat point with the default tolerance and iteration cap.
pub fn fermat_point_default(anchors: &AnchorSet) -> Result<EquilibriumResult> {
    fermat_point(anchors, DEFAULT_FERMAT_TOL, DEFAULT_FERMAT_MAX_ITER)
}

/// Surface energy density `1 + misorientation^2 / 2`.
pub fn surface_tension(misorientation: f64) -> f64 {
    1.0 + 0.5 * misorientation * misorientation
}

/// Line tension `sigma * edge` for the orientation-only surface energy
/// `sigma = 1 + misorientation^2 / 2`; `edge` must be a unit vector.
pub fn line_tension(edge: Vec2, misorientation: f64) -> Result<Vec2> {
    let n = edge.norm();
    if !((n - 1.0).abs() <= 1e-12) {
        return Err(Error::ContractViolation(format!(
            "line tension needs a unit tangent, got norm {n}"
        )));
    }
    Ok(edge * surface_tension(misorientation))
}

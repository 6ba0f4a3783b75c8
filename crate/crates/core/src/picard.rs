//! Constructive local existence for the single-junction system.
//!
//! The solution on `[0, T]` is the fixed point of the integral maps
//!
//! ```text
//! Phi(alpha, a)(t) = alpha0 - int_0^t B(tau) alpha(tau) dtau
//! Psi(alpha, a)(t) = a0 + sum_j int_0^t sigma_j(tau) b_j(tau)/|b_j(tau)| dtau
//! ```
//!
//! on the set `X_T` of paths with `sup|alpha| <= C1 = 2|alpha0|` and
//! `sup|a - a_inf| <= C2 = 2|a0 - a_inf|`. For `T` chosen by
//! [`existence_constants`] the pair is a contraction with ratio at most 3/4 in
//! the metric `sup|d alpha| + sup|d a|`. Integrals are evaluated with the
//! trapezoidal rule on a uniform grid.

use serde::Serialize;

use crate::coupling::{self, CouplingMatrix, Vec3};
use crate::error::{Error, Result};
use crate::geometry::{edge_vectors, surface_tension, AnchorSet, EquilibriumResult, Point2, Vec2};
use crate::junction::{misorientation_vector, JunctionState};

/// Proven contraction factor of the combined map.
pub const CONTRACTION_FACTOR: f64 = 0.75;
/// Allowance for trapezoidal quadrature on top of [`CONTRACTION_FACTOR`].
pub const QUADRATURE_SLACK: f64 = 0.05;

const MAX_PICARD_ITER: usize = 500;
/// Consecutive expanding iterations tolerated before giving up.
const EXPANSION_PATIENCE: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExistenceCertificate {
    pub c1: f64,
    pub c2: f64,
    /// `None` when the closeness hypothesis fails.
    pub t_exist: Option<f64>,
    pub hypothesis_ok: bool,
    /// The four candidates of the time bound, `+inf` where a denominator vanishes.
    pub terms: [f64; 4],
    pub a_inf: Point2,
    pub b_inf_len: [f64; 3],
}

fn ratio_or_inf(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        f64::INFINITY
    }
}

/// Constants `C1`, `C2` and the guaranteed existence time for the given
/// initial data. The hypothesis is `|a0 - a_inf| < |b_inf_j| / 2` for every `j`.
pub fn existence_constants(
    init: &JunctionState,
    anchors: &AnchorSet,
    eq: &EquilibriumResult,
) -> Result<ExistenceCertificate> {
    if !eq.converged {
        return Err(Error::Usage("equilibrium did not converge".into()));
    }
    let alpha_norm = coupling::norm(&init.alpha);
    let offset = init.a.distance(eq.a_inf);
    let b_inf_len = edge_vectors(anchors, eq.a_inf).len;
    let c1 = 2.0 * alpha_norm;
    let c2 = 2.0 * offset;
    let hypothesis_ok = b_inf_len.iter().all(|&l| offset < 0.5 * l);

    let growth = 1.0 + 8.0 * alpha_norm * alpha_norm;
    let total: f64 = b_inf_len.iter().sum();
    let t1 = ratio_or_inf(1.0, 12.0 * total);
    // a0 == a_inf makes this term vanish; the bound it encodes is then vacuous
    let t2 = if offset > 0.0 {
        offset / (3.0 * growth)
    } else {
        f64::INFINITY
    };
    let t3 = ratio_or_inf(1.0, 96.0 * alpha_norm);
    let t4 = if hypothesis_ok {
        let inv: f64 = b_inf_len.iter().map(|&l| 1.0 / (l - c2)).sum();
        ratio_or_inf(1.0, 12.0 * growth * inv)
    } else {
        f64::INFINITY
    };
    let terms = [t1, t2, t3, t4];
    let t_exist = hypothesis_ok.then(|| terms.iter().copied().fold(f64::INFINITY, f64::min));
    Ok(ExistenceCertificate {
        c1,
        c2,
        t_exist,
        hypothesis_ok,
        terms,
        a_inf: eq.a_inf,
        b_inf_len,
    })
}

/// A discretized element of `X_T`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteCurvePair {
    pub grid: Vec<f64>,
    pub alpha_path: Vec<Vec3>,
    pub a_path: Vec<Point2>,
}

impl DiscreteCurvePair {
    /// Uniform grid with `n` intervals on `[0, t]`.
    pub fn constant(init: &JunctionState, t: f64, n: usize) -> Self {
        let grid: Vec<f64> = (0..=n).map(|k| t * k as f64 / n as f64).collect();
        Self {
            alpha_path: vec![init.alpha; grid.len()],
            a_path: vec![init.a; grid.len()],
            grid,
        }
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    fn check(&self) -> Result<()> {
        if self.grid.first() != Some(&0.0) {
            return Err(Error::Usage("curve grid must start at t = 0".into()));
        }
        if self.alpha_path.len() != self.grid.len() || self.a_path.len() != self.grid.len() {
            return Err(Error::Usage("curve paths and grid differ in length".into()));
        }
        Ok(())
    }

    /// `sup|d alpha| + sup|d a|`.
    pub fn distance(&self, other: &Self) -> f64 {
        let da = self
            .alpha_path
            .iter()
            .zip(&other.alpha_path)
            .map(|(x, y)| coupling::norm(&[x[0] - y[0], x[1] - y[1], x[2] - y[2]]))
            .fold(0.0, f64::max);
        let dp = self
            .a_path
            .iter()
            .zip(&other.a_path)
            .map(|(x, y)| x.distance(*y))
            .fold(0.0, f64::max);
        da + dp
    }
}

/// Cumulative trapezoidal integral of `values` over `grid`, starting at `start`.
fn cumulative_trapezoid<T, F>(grid: &[f64], values: &[T], start: T, mut add_scaled: F) -> Vec<T>
where
    T: Copy,
    F: FnMut(T, T, T, f64) -> T,
{
    let mut out = Vec::with_capacity(grid.len());
    let mut acc = start;
    out.push(acc);
    for k in 1..grid.len() {
        let h = grid[k] - grid[k - 1];
        acc = add_scaled(acc, values[k - 1], values[k], 0.5 * h);
        out.push(acc);
    }
    out
}

pub fn apply_phi(pair: &DiscreteCurvePair, init: &JunctionState, anchors: &AnchorSet) -> Result<Vec<Vec3>> {
    pair.check()?;
    let integrand: Vec<Vec3> = pair
        .alpha_path
        .iter()
        .zip(&pair.a_path)
        .map(|(alpha, a)| CouplingMatrix::from_lengths(edge_vectors(anchors, *a).len).apply(alpha))
        .collect();
    Ok(cumulative_trapezoid(&pair.grid, &integrand, init.alpha, |acc, l, r, w| {
        [
            acc[0] - w * (l[0] + r[0]),
            acc[1] - w * (l[1] + r[1]),
            acc[2] - w * (l[2] + r[2]),
        ]
    }))
}

fn drag(alpha: &Vec3, a: Point2, anchors: &AnchorSet) -> Result<Vec2> {
    let unit = edge_vectors(anchors, a).unit()?;
    let mis = misorientation_vector(alpha);
    let mut v = Vec2::ZERO;
    for j in 0..3 {
        v += unit[j] * surface_tension(mis[j]);
    }
    Ok(v)
}

pub fn apply_psi(pair: &DiscreteCurvePair, init: &JunctionState, anchors: &AnchorSet) -> Result<Vec<Point2>> {
    pair.check()?;
    let integrand = pair
        .alpha_path
        .iter()
        .zip(&pair.a_path)
        .map(|(alpha, a)| drag(alpha, *a, anchors))
        .collect::<Result<Vec<_>>>()?;
    Ok(cumulative_trapezoid(&pair.grid, &integrand, init.a, |acc, l, r, w| {
        acc + (l + r) * w
    }))
}

/// Size of one iterate measured against the `X_T` bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterateBounds {
    pub sup_alpha: f64,
    pub sup_offset: f64,
    pub min_edge: f64,
    pub max_edge: f64,
}

impl IterateBounds {
    fn of(pair: &DiscreteCurvePair, anchors: &AnchorSet, a_inf: Point2) -> Self {
        let mut b = IterateBounds {
            sup_alpha: 0.0,
            sup_offset: 0.0,
            min_edge: f64::INFINITY,
            max_edge: 0.0,
        };
        for (alpha, a) in pair.alpha_path.iter().zip(&pair.a_path) {
            b.sup_alpha = b.sup_alpha.max(coupling::norm(alpha));
            b.sup_offset = b.sup_offset.max(a.distance(a_inf));
            for l in edge_vectors(anchors, *a).len {
                b.min_edge = b.min_edge.min(l);
                b.max_edge = b.max_edge.max(l);
            }
        }
        b
    }

    /// Whether the iterate lies in `X_T` and respects the edge-length window
    /// `|b_inf_j| - C2 <= |b_j| <= |b_inf_j| + C2`, each with `slack`.
    pub fn within(&self, cert: &ExistenceCertificate, slack: f64) -> bool {
        let lo = cert.b_inf_len.iter().copied().fold(f64::INFINITY, f64::min) - cert.c2;
        let hi = cert.b_inf_len.iter().copied().fold(0.0, f64::max) + cert.c2;
        self.sup_alpha <= cert.c1 + slack
            && self.sup_offset <= cert.c2 + slack
            && self.min_edge >= lo - slack
            && self.max_edge <= hi + slack
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PicardSolution {
    pub pair: DiscreteCurvePair,
    /// `d(x_{k+1}, x_k)` for each iteration.
    pub distances: Vec<f64>,
    /// `distances[k] / distances[k-1]`.
    pub ratios: Vec<f64>,
    /// Bounds of the initial guess followed by those of every iterate.
    pub bounds: Vec<IterateBounds>,
    pub iterations: usize,
}

impl PicardSolution {
    pub fn max_ratio(&self) -> f64 {
        self.ratios.iter().copied().fold(0.0, f64::max)
    }
}

/// Iterates `(Phi, Psi)` from the constant path `(alpha0, a0)` on a uniform grid
/// of `grid_n` intervals over `[0, T_exist]` until successive iterates are
/// within `tol`.
pub fn solve_fixed_point(
    init: &JunctionState,
    anchors: &AnchorSet,
    cert: &ExistenceCertificate,
    grid_n: usize,
    tol: f64,
) -> Result<PicardSolution> {
    let t = match (cert.hypothesis_ok, cert.t_exist) {
        (true, Some(t)) if t > 0.0 && t.is_finite() => t,
        _ => {
            return Err(Error::Usage(
                "certificate has no valid existence time (closeness hypothesis fails)".into(),
            ))
        }
    };
    if grid_n == 0 {
        return Err(Error::Usage("grid needs at least one interval".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }

    let mut current = DiscreteCurvePair::constant(init, t, grid_n);
    let mut distances = Vec::new();
    let mut ratios = Vec::new();
    let mut bounds = vec![IterateBounds::of(&current, anchors, cert.a_inf)];
    let mut expanding = 0;
    for iteration in 1..=MAX_PICARD_ITER {
        let next = DiscreteCurvePair {
            grid: current.grid.clone(),
            alpha_path: apply_phi(&current, init, anchors)?,
            a_path: apply_psi(&current, init, anchors)?,
        };
        let d = next.distance(&current);
        bounds.push(IterateBounds::of(&next, anchors, cert.a_inf));
        if let Some(&prev) = distances.last() {
            let ratio = if prev > 0.0 { d / prev } else { 0.0 };
            ratios.push(ratio);
            if ratio > 1.0 {
                expanding += 1;
                if expanding >= EXPANSION_PATIENCE {
                    return Err(Error::ContractionFailure { iteration, ratio });
                }
            } else {
                expanding = 0;
            }
        }
        distances.push(d);
        current = next;
        if d < tol {
            return Ok(PicardSolution {
                pair: current,
                distances,
                ratios,
                bounds,
                iterations: iteration,
            });
        }
    }
    Err(Error::ContractionFailure {
        iteration: MAX_PICARD_ITER,
        ratio: ratios.last().copied().unwrap_or(f64::NAN),
    })
}

//! The 3×3 orientation-coupling matrix and its spectral properties.
//!
//! For boundary lengths `c = (c1, c2, c3)` the matrix is
//!
//! ```text
//! | c1+c2   -c2    -c1  |
//! |  -c2   c2+c3   -c3  |
//! |  -c1    -c3   c3+c1 |
//! ```
//!
//! which is the weighted Laplacian of the triangle of grains around a junction.

use serde::Serialize;

use crate::error::{Error, Result};

pub type Mat3 = [[f64; 3]; 3];
pub type Vec3 = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingMatrix {
    pub c: [f64; 3],
    pub entries: Mat3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralSummary {
    /// Ascending.
    pub eigenvalues: [f64; 3],
    pub kernel_dim: usize,
}

impl CouplingMatrix {
    /// Builds the matrix without checking the weights; used on hot paths where
    /// the lengths are norms and thus non-negative.
    pub fn from_lengths(c: [f64; 3]) -> Self {
        let [c1, c2, c3] = c;
        Self {
            c,
            entries: [
                [c1 + c2, -c2, -c1],
                [-c2, c2 + c3, -c3],
                [-c1, -c3, c3 + c1],
            ],
        }
    }

    /// `C v`, evaluated in difference form so constant vectors map to zero exactly.
    pub fn apply(&self, v: &Vec3) -> Vec3 {
        let [c1, c2, c3] = self.c;
        let d12 = v[0] - v[1];
        let d23 = v[1] - v[2];
        let d13 = v[0] - v[2];
        [c1 * d13 + c2 * d12, c3 * d23 - c2 * d12, -(c1 * d13) - c3 * d23]
    }

    /// Sum of the weights; the natural magnitude for scaling tolerances.
    pub fn scale(&self) -> f64 {
        self.c.iter().map(|x| x.abs()).sum()
    }

    pub fn spectrum(&self) -> SpectralSummary {
        let mut eigenvalues = symmetric_eigenvalues(&self.entries);
        eigenvalues.sort_by(f64::total_cmp);
        let zero_tol = 1e-12 * self.scale().max(1.0);
        let kernel_dim = eigenvalues.iter().filter(|l| l.abs() <= zero_tol).count();
        SpectralSummary {
            eigenvalues,
            kernel_dim,
        }
    }
}

pub fn build_coupling(c1: f64, c2: f64, c3: f64) -> Result<CouplingMatrix> {
    for (i, c) in [c1, c2, c3].into_iter().enumerate() {
        if !c.is_finite() || c < 0.0 {
            return Err(Error::Domain(format!(
                "coupling weight c{} must be finite and non-negative, got {c}",
                i + 1
            )));
        }
    }
    Ok(CouplingMatrix::from_lengths([c1, c2, c3]))
}

/// `{0, s ± sqrt(((c1-c2)^2 + (c2-c3)^2 + (c3-c1)^2) / 2)}` with `s = c1+c2+c3`,
/// returned ascending.
pub fn closed_form_eigenvalues(c1: f64, c2: f64, c3: f64) -> [f64; 3] {
    let s = c1 + c2 + c3;
    let spread = (0.5 * ((c1 - c2).powi(2) + (c2 - c3).powi(2) + (c3 - c1).powi(2))).sqrt();
    let mut ev = [0.0, s - spread, s + spread];
    ev.sort_by(f64::total_cmp);
    ev
}

/// Normalized kernel vector `(1,1,1)/sqrt 3`.
///
/// Requires strictly positive weights; with a zero weight the simple-kernel
/// guarantee is lost (two zero weights give a two-dimensional kernel).
pub fn kernel_basis(m: &CouplingMatrix) -> Result<Vec3> {
    let spec = m.spectrum();
    if spec.kernel_dim > 1 {
        return Err(Error::MultiDimensionalKernel(format!(
            "weights {:?} give a {}-dimensional kernel",
            m.c, spec.kernel_dim
        )));
    }
    if let Some(i) = m.c.iter().position(|&c| !(c > 0.0)) {
        return Err(Error::MultiDimensionalKernel(format!(
            "weight c{} = {} is not positive; kernel simplicity is not guaranteed",
            i + 1,
            m.c[i]
        )));
    }
    let k = 1.0 / 3f64.sqrt();
    Ok([k, k, k])
}

/// Upper bound `3(|c1|+|c2|+|c3|)` on the operator norm.
pub fn operator_bound(c1: f64, c2: f64, c3: f64) -> f64 {
    3.0 * (c1.abs() + c2.abs() + c3.abs())
}

/// `alpha^T C alpha`.
pub fn quadratic_form(m: &CouplingMatrix, alpha: &Vec3) -> f64 {
    dot(alpha, &m.apply(alpha))
}

pub fn mat_vec(m: &Mat3, v: &Vec3) -> Vec3 {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

pub fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub fn transpose(a: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[j][i];
        }
    }
    out
}

pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

/// Eigenvalues of a symmetric 3×3 matrix by cyclic Jacobi rotations. Not sorted.
pub fn symmetric_eigenvalues(m: &Mat3) -> [f64; 3] {
    let mut a = *m;
    let scale: f64 = a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    if scale == 0.0 {
        return [0.0; 3];
    }
    for _sweep in 0..64 {
        let off = a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2);
        if off.sqrt() <= 1e-18 * scale {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            if a[p][q] == 0.0 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            // A <- J^T A J with J the rotation in the (p, q) plane
            for k in 0..3 {
                let akp = a[k][p];
                let akq = a[k][q];
                a[k][p] = c * akp - s * akq;
                a[k][q] = s * akp + c * akq;
            }
            for k in 0..3 {
                let apk = a[p][k];
                let aqk = a[q][k];
                a[p][k] = c * apk - s * aqk;
                a[q][k] = s * apk + c * aqk;
            }
        }
    }
    [a[0][0], a[1][1], a[2][2]]
}

pub fn det3(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

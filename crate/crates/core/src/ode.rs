//! Fixed-step explicit integrators on flat state vectors.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Euler,
    #[default]
    Rk4,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Euler => "euler",
            Scheme::Rk4 => "rk4",
        })
    }
}

impl FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "euler" => Ok(Scheme::Euler),
            "rk4" => Ok(Scheme::Rk4),
            other => Err(format!("unknown scheme '{other}' (expected euler or rk4)")),
        }
    }
}

impl Scheme {
    pub fn order(self) -> u32 {
        match self {
            Scheme::Euler => 1,
            Scheme::Rk4 => 4,
        }
    }
}

fn axpy(y: &[f64], h: f64, k: &[f64]) -> Vec<f64> {
    y.iter().zip(k).map(|(a, b)| a + h * b).collect()
}

/// Advances `y` by one step of size `h`. Errors from the right-hand side
/// (e.g. a collapsed edge at a stage point) are passed through.
pub fn step<E, F>(scheme: Scheme, y: &[f64], h: f64, f: &mut F) -> Result<Vec<f64>, E>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>, E>,
{
    match scheme {
        Scheme::Euler => {
            let k1 = f(y)?;
            Ok(axpy(y, h, &k1))
        }
        Scheme::Rk4 => {
            let k1 = f(y)?;
            let k2 = f(&axpy(y, 0.5 * h, &k1))?;
            let k3 = f(&axpy(y, 0.5 * h, &k2))?;
            let k4 = f(&axpy(y, h, &k3))?;
            Ok((0..y.len())
                .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                .collect())
        }
    }
}

/// Step times for integrating over `[0, t_end]` with nominal step `h`; the
/// last step is shortened to land exactly on `t_end`.
pub fn time_grid(h: f64, t_end: f64) -> Vec<f64> {
    let n = ((t_end / h) - 1e-9).ceil().max(1.0) as usize;
    let mut ts: Vec<f64> = (0..=n).map(|k| (k as f64 * h).min(t_end)).collect();
    ts[n] = t_end;
    ts.dedup();
    ts
}

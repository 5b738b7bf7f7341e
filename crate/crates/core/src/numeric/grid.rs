use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{HuError, Result};

/// Strictly increasing sample points in `(0, ∞)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalGrid {
    points: Vec<f64>,
}

impl EvalGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(HuError::InvalidInput("empty grid".into()));
        }
        if points.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(HuError::InvalidInput("grid points must be positive and finite".into()));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(HuError::InvalidInput("grid points must be strictly increasing".into()));
        }
        Ok(EvalGrid { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn t_min(&self) -> f64 {
        self.points[0]
    }

    pub fn t_max(&self) -> f64 {
        *self.points.last().unwrap()
    }

    /// Samples `f` at every grid point.
    pub fn sample<F>(&self, f: F) -> Result<Trajectory>
    where
        F: Fn(f64) -> Result<Complex64>,
    {
        let values = self.points.iter().map(|&t| f(t)).collect::<Result<Vec<_>>>()?;
        Ok(Trajectory {
            grid: self.clone(),
            values,
        })
    }
}

/// `n` geometrically spaced points from `t_min` to `t_max` inclusive.
pub fn log_spaced_grid(t_min: f64, t_max: f64, n: usize) -> Result<EvalGrid> {
    if !(t_min > 0.0 && t_min < t_max && t_max.is_finite()) || n < 2 {
        return Err(HuError::InvalidInput(format!(
            "log grid needs 0 < t_min < t_max and n >= 2, got ({t_min}, {t_max}, {n})"
        )));
    }
    let (l0, l1) = (t_min.ln(), t_max.ln());
    let step = (l1 - l0) / (n - 1) as f64;
    let mut points: Vec<f64> = (0..n).map(|i| (l0 + step * i as f64).exp()).collect();
    points[0] = t_min;
    points[n - 1] = t_max;
    EvalGrid::new(points)
}

/// Complex samples of a function on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: EvalGrid,
    pub values: Vec<Complex64>,
}

/// `max_i |u(t_i) - v(t_i)|` for trajectories on the same grid.
pub fn sup_norm_diff(u: &Trajectory, v: &Trajectory) -> Result<f64> {
    if u.grid != v.grid || u.values.len() != v.values.len() {
        return Err(HuError::GridMismatch);
    }
    Ok(u.values
        .iter()
        .zip(&v.values)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max))
}

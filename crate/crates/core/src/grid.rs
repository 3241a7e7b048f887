//! Uniform discretization of the truncated real line `[-L, L]`.
//!
//! Only interior nodes are stored; the two end points carry the Dirichlet
//! value zero. Quadrature is composite Simpson over all `n_interior + 1`
//! intervals (with a 3/8-rule tail when the interval count is odd), so a
//! grid function is integrated as if it vanished at `±L`.

use std::ops::{Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Uniform grid with `n_interior` nodes `x_i = -L + i h`, `h = 2L / (n_interior + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    half_width: f64,
    n_interior: usize,
}

impl Grid {
    pub fn new(half_width: f64, n_interior: usize) -> Result<Self> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return invalid(format!("half width must be positive, got {half_width}"));
        }
        if n_interior < 3 {
            return invalid(format!("need at least 3 interior nodes, got {n_interior}"));
        }
        Ok(Self { half_width, n_interior })
    }

    /// Grid on `[-L, L]` whose spacing is as close as possible to `h`.
    pub fn with_spacing(half_width: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return invalid(format!("spacing must be positive, got {h}"));
        }
        let intervals = (2.0 * half_width / h).round() as usize;
        Self::new(half_width, intervals.saturating_sub(1))
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn len(&self) -> usize {
        self.n_interior
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.n_interior + 1) as f64
    }

    /// Node `i` for `i` in `0..len()` (interior index, zero based).
    pub fn node(&self, i: usize) -> f64 {
        -self.half_width + (i + 1) as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_interior).map(|i| self.node(i)).collect()
    }

    /// The grid with half the spacing on the same box.
    pub fn refined(&self) -> Self {
        Self { half_width: self.half_width, n_interior: 2 * self.n_interior + 1 }
    }

    /// Quadrature weights of the interior nodes.
    pub fn weights(&self) -> Vec<f64> {
        let h = self.spacing();
        let intervals = self.n_interior + 1;
        // Full-grid weights including the two (zero-valued) end points.
        let mut w = vec![0.0; intervals + 1];
        let simpson_end = if intervals % 2 == 0 { intervals } else { intervals - 3 };
        for (k, wk) in w.iter_mut().enumerate().take(simpson_end + 1) {
            *wk = if k == 0 || k == simpson_end {
                h / 3.0
            } else if k % 2 == 1 {
                4.0 * h / 3.0
            } else {
                2.0 * h / 3.0
            };
        }
        if simpson_end < intervals {
            for (offset, c) in [1.0, 3.0, 3.0, 1.0].into_iter().enumerate() {
                w[simpson_end + offset] += 3.0 * h / 8.0 * c;
            }
        }
        w[1..=self.n_interior].to_vec()
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.n_interior);
        self.weights().iter().zip(values).map(|(w, v)| w * v).sum()
    }

    pub fn integrate_complex(&self, values: &[Complex64]) -> Complex64 {
        debug_assert_eq!(values.len(), self.n_interior);
        self.weights().iter().zip(values).map(|(w, v)| v * *w).sum()
    }

    pub fn integrate_fn(&self, f: impl Fn(f64) -> f64) -> f64 {
        let values: Vec<f64> = self.nodes().into_iter().map(f).collect();
        self.integrate(&values)
    }

    /// Central difference `(f_{i+1} - f_{i-1}) / 2h` with zero ghost values.
    pub fn differentiate<T>(&self, values: &[T]) -> Vec<T>
    where
        T: Copy + Default + Sub<Output = T> + Mul<f64, Output = T>,
    {
        let n = values.len();
        let scale = 0.5 / self.spacing();
        (0..n)
            .map(|i| {
                let right = if i + 1 < n { values[i + 1] } else { T::default() };
                let left = if i > 0 { values[i - 1] } else { T::default() };
                (right - left) * scale
            })
            .collect()
    }
}

/// Complex samples of a scalar function on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: Grid,
    pub values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return invalid(format!(
                "grid function has {} values for {} nodes",
                values.len(),
                grid.len()
            ));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.nodes().into_iter().map(f).collect();
        Self { grid, values }
    }

    pub fn from_real_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    pub fn integrate(&self) -> Complex64 {
        self.grid.integrate_complex(&self.values)
    }

    pub fn differentiate(&self) -> Self {
        Self { grid: self.grid, values: self.grid.differentiate(&self.values) }
    }
}

/// Two-level Richardson extrapolation for a quantity converging with order `order`.
pub fn richardson(v_h: f64, v_h2: f64, order: i32) -> Result<f64> {
    if order <= 0 {
        return invalid(format!("convergence order must be positive, got {order}"));
    }
    let factor = 2f64.powi(order);
    Ok((factor * v_h2 - v_h) / (factor - 1.0))
}

//! Uniform time discretisation of the unit interval.

use crate::error::{Error, Result};

/// Uniform grid `t_k = k * dt` on `[0, 1]` with `T = 1/dt` steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    dt: f64,
    n_steps: usize,
}

impl TimeGrid {
    /// Builds the grid, rejecting step sizes that do not divide the unit
    /// interval (after rounding `1/dt` to the nearest integer).
    pub fn new(dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0 && dt <= 1.0) {
            return Err(Error::InvalidTimeStep { dt });
        }
        let n_steps = (1.0 / dt).round();
        if n_steps < 1.0 || (n_steps * dt - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidTimeStep { dt });
        }
        Ok(Self {
            dt,
            n_steps: n_steps as usize,
        })
    }

    /// Grid with exactly `n_steps` steps.
    pub fn with_steps(n_steps: usize) -> Result<Self> {
        if n_steps == 0 {
            return Err(Error::InvalidArgument("a time grid needs at least one step".into()));
        }
        Ok(Self {
            dt: 1.0 / n_steps as f64,
            n_steps,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of steps `T`; the grid has `T + 1` points.
    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn n_points(&self) -> usize {
        self.n_steps + 1
    }

    /// `t_k`. The last point is pinned to exactly 1.
    pub fn time(&self, k: usize) -> f64 {
        debug_assert!(k <= self.n_steps);
        if k == self.n_steps {
            1.0
        } else {
            k as f64 / self.n_steps as f64
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|k| self.time(k)).collect()
    }

    /// Index of the grid point nearest to `t`.
    pub fn nearest_index(&self, t: f64) -> usize {
        ((t.clamp(0.0, 1.0)) * self.n_steps as f64).round() as usize
    }
}

//! Uniform one-dimensional grid.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid bounds must be finite with x_min < x_max (got [{x_min}, {x_max}])")]
    InvalidBounds { x_min: f64, x_max: f64 },
    #[error("grid needs at least {required} points, got {n_points}")]
    TooFewPoints { n_points: usize, required: usize },
}

/// `n_points` uniformly spaced nodes on the closed interval `[x_min, x_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid1D {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self, GridError> {
        let grid = Grid1D {
            x_min,
            x_max,
            n_points,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<(), GridError> {
        if !(self.x_min.is_finite() && self.x_max.is_finite() && self.x_min < self.x_max) {
            return Err(GridError::InvalidBounds {
                x_min: self.x_min,
                x_max: self.x_max,
            });
        }
        if self.n_points < 2 {
            return Err(GridError::TooFewPoints {
                n_points: self.n_points,
                required: 2,
            });
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_points - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.n_points == 0
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    /// Coordinate of node `k`. Both end nodes are reproduced exactly.
    pub fn x(&self, k: usize) -> f64 {
        let t = k as f64 / (self.n_points - 1) as f64;
        self.x_min * (1.0 - t) + self.x_max * t
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n_points).map(move |k| self.x(k))
    }

    /// Same node set mirrored about `x = 0`, i.e. node `k` sits at `-x(n-1-k)`.
    pub fn is_symmetric(&self) -> bool {
        let scale = self.x_max.abs().max(self.x_min.abs());
        (self.x_min + self.x_max).abs() <= 1e-12 * scale
    }

    /// Trapezoidal quadrature weights.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let dx = self.dx();
        let mut w = vec![dx; self.n_points];
        w[0] = 0.5 * dx;
        w[self.n_points - 1] = 0.5 * dx;
        w
    }

    /// Trapezoidal integral of grid samples.
    ///
    /// # Panics
    /// If `values.len() != n_points`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        assert_eq!(values.len(), self.n_points, "sample count does not match grid");
        let interior: f64 = values[1..values.len() - 1].iter().sum();
        self.dx() * (interior + 0.5 * (values[0] + values[values.len() - 1]))
    }
}

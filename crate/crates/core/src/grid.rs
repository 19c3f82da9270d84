//! Uniform radial grids and graph profiles `x_{n+1} = u(|y|)` over `R^n`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest node count for which every stencil in the crate is defined.
pub const MIN_NODES: usize = 8;

/// Uniform grid `r_i = i h`, `i = 0..nodes`, for a graph over `R^n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    n: usize,
    h: f64,
    nodes: usize,
}

impl RadialGrid {
    pub fn new(n: usize, h: f64, nodes: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGrid(format!(
                "dimension n = {n} must be at least 2"
            )));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "spacing h = {h} must be positive"
            )));
        }
        if nodes < MIN_NODES {
            return Err(Error::GridTooSmall {
                nodes,
                min: MIN_NODES,
            });
        }
        Ok(Self { n, h, nodes })
    }

    /// Grid covering `[0, r_max]`; `r_max / h` must be an integer up to rounding.
    pub fn covering(n: usize, h: f64, r_max: f64) -> Result<Self> {
        let cells = r_max / h;
        let rounded = cells.round();
        if !(cells.is_finite() && rounded >= 1.0)
            || (cells - rounded).abs() > 1e-9 * rounded.max(1.0)
        {
            return Err(Error::InvalidGrid(format!(
                "r_max = {r_max} is not an integer multiple of h = {h}"
            )));
        }
        Self::new(n, h, rounded as usize + 1)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.nodes
    }

    pub fn is_empty(&self) -> bool {
        self.nodes == 0
    }

    pub fn r(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    pub fn r_max(&self) -> f64 {
        self.r(self.nodes - 1)
    }

    pub fn radii(&self) -> Vec<f64> {
        (0..self.nodes).map(|i| self.r(i)).collect()
    }

    /// Same node count and dimension, spacing multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.n, self.h * factor, self.nodes)
    }

    /// Twice as many cells over the same interval.
    pub fn refined(&self) -> Result<Self> {
        Self::new(self.n, self.h / 2.0, 2 * (self.nodes - 1) + 1)
    }

    /// Index of the node nearest to radius `r`, clamped to the grid.
    pub fn nearest(&self, r: f64) -> usize {
        let i = (r / self.h).round();
        if i <= 0.0 {
            0
        } else {
            (i as usize).min(self.nodes - 1)
        }
    }
}

/// Height function `u` sampled on a [`RadialGrid`] at flow time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphProfile {
    grid: RadialGrid,
    u: Vec<f64>,
    t: f64,
}

impl GraphProfile {
    pub fn new(grid: RadialGrid, u: Vec<f64>, t: f64) -> Result<Self> {
        if u.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: u.len(),
            });
        }
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "flow time t = {t} must be finite and >= 0"
            )));
        }
        if let Some(index) = u.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index, t });
        }
        Ok(Self { grid, u, t })
    }

    /// Samples `f(r)` at every node.
    pub fn from_fn(grid: RadialGrid, t: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let u = (0..grid.len()).map(|i| f(grid.r(i))).collect();
        Self::new(grid, u, t)
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn n(&self) -> usize {
        self.grid.n
    }

    pub fn h(&self) -> f64 {
        self.grid.h
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    /// Adds a constant to every height.
    pub fn shifted(&self, dz: f64) -> Self {
        Self {
            grid: self.grid,
            u: self.u.iter().map(|v| v + dz).collect(),
            t: self.t,
        }
    }

    pub(crate) fn from_parts_unchecked(grid: RadialGrid, u: Vec<f64>, t: f64) -> Self {
        Self { grid, u, t }
    }

    /// Piecewise-cubic (Catmull-Rom, even-extended at the axis) interpolation.
    /// Beyond the last node the value is linearly extrapolated.
    pub fn interpolate(&self, r: f64) -> f64 {
        let h = self.grid.h;
        let m = self.u.len();
        let x = r.abs() / h;
        let last = (m - 1) as f64;
        if x >= last {
            let slope = (self.u[m - 1] - self.u[m - 2]) / h;
            return self.u[m - 1] + slope * (r.abs() - self.grid.r_max());
        }
        let i = x.floor() as usize;
        let s = x - i as f64;
        // Node values with the even extension u(-r) = u(r) and linear extension past the end.
        let at = |k: isize| -> f64 {
            if k < 0 {
                self.u[(-k) as usize]
            } else if (k as usize) < m {
                self.u[k as usize]
            } else {
                2.0 * self.u[m - 1] - self.u[m - 2]
            }
        };
        let k = i as isize;
        let (p0, p1, p2, p3) = (at(k - 1), at(k), at(k + 1), at(k + 2));
        let s2 = s * s;
        let s3 = s2 * s;
        0.5 * (2.0 * p1
            + (p2 - p0) * s
            + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * s2
            + (3.0 * p1 - p0 - 3.0 * p2 + p3) * s3)
    }
}

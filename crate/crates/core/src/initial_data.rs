//! Initial data: closed forms, soliton profiles and tabulated heights.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GraphProfile, RadialGrid};
use crate::solitons::{self, OdeOptions, ShootingOptions};

/// `(r^2 + eps^2)^{alpha/2} - eps^alpha`, the graph of `|y|^alpha` rounded off near the axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerGraph {
    pub alpha: f64,
    pub eps: f64,
}

impl PowerGraph {
    pub fn new(alpha: f64, eps: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidConfig(format!("alpha = {alpha} must be > 0")));
        }
        if !(eps.is_finite() && eps >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "eps_smooth = {eps} must be >= 0"
            )));
        }
        Ok(Self { alpha, eps })
    }

    /// Mollification width used when none is given: `2h` for `alpha < 2`, none otherwise.
    pub fn default_eps(alpha: f64, h: f64) -> f64 {
        if alpha < 2.0 {
            2.0 * h
        } else {
            0.0
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        if self.eps == 0.0 {
            r.abs().powf(self.alpha)
        } else {
            (r * r + self.eps * self.eps).powf(0.5 * self.alpha) - self.eps.powf(self.alpha)
        }
    }

    pub fn profile(&self, grid: RadialGrid) -> Result<GraphProfile> {
        GraphProfile::from_fn(grid, 0.0, |r| self.eval(r))
    }
}

/// Heights tabulated at increasing radii starting at 0, interpolated linearly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    r: Vec<f64>,
    u: Vec<f64>,
}

impl Table {
    pub fn new(r: Vec<f64>, u: Vec<f64>) -> Result<Self> {
        if r.len() != u.len() {
            return Err(Error::LengthMismatch {
                expected: r.len(),
                got: u.len(),
            });
        }
        if r.len() < 2 {
            return Err(Error::TooFewSamples {
                needed: 2,
                got: r.len(),
            });
        }
        if r[0] != 0.0 {
            return Err(Error::InvalidConfig(format!(
                "table must start at r = 0, got {}",
                r[0]
            )));
        }
        if let Some(i) = r.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidConfig(format!(
                "table radii not increasing at row {}",
                i + 1
            )));
        }
        if let Some(i) = u.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index: i, t: 0.0 });
        }
        Ok(Self { r, u })
    }

    /// Parses whitespace- or comma-separated `r u` rows; `#` starts a comment and a leading
    /// non-numeric header row is skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let (mut r, mut u) = (Vec::new(), Vec::new());
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .collect();
            let parsed: Option<Vec<f64>> = fields.iter().map(|s| s.parse().ok()).collect();
            match parsed {
                Some(v) if v.len() >= 2 => {
                    r.push(v[0]);
                    u.push(v[1]);
                }
                None if r.is_empty() && u.is_empty() => continue,
                _ => {
                    return Err(Error::InvalidConfig(format!(
                        "table line {}: expected two numbers, got {line:?}",
                        lineno + 1
                    )))
                }
            }
        }
        Self::new(r, u)
    }

    pub fn r_max(&self) -> f64 {
        self.r[self.r.len() - 1]
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        let r = r.abs();
        if r > self.r_max() * (1.0 + 1e-12) {
            return Err(Error::OutOfRange(format!(
                "r = {r} beyond tabulated range {}",
                self.r_max()
            )));
        }
        let k = self
            .r
            .partition_point(|x| *x <= r)
            .clamp(1, self.r.len() - 1);
        let (r0, r1) = (self.r[k - 1], self.r[k]);
        let s = (r - r0) / (r1 - r0);
        Ok(self.u[k - 1] + s * (self.u[k] - self.u[k - 1]))
    }
}

/// The initial profiles a run can start from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialData {
    /// `|y|^alpha`; `eps_smooth = None` picks [`PowerGraph::default_eps`].
    PowerGraph {
        alpha: f64,
        eps_smooth: Option<f64>,
    },
    Translator {
        speed: f64,
    },
    Expander {
        c: f64,
        slope: f64,
    },
    Plane {
        height: f64,
    },
    Tabulated {
        table: Table,
    },
}

impl InitialData {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::PowerGraph { alpha, eps_smooth } => {
                PowerGraph::new(*alpha, eps_smooth.unwrap_or(0.0)).map(|_| ())
            }
            Self::Translator { speed } if !(speed.is_finite() && *speed > 0.0) => Err(
                Error::InvalidConfig(format!("translator speed N = {speed} must be > 0")),
            ),
            Self::Expander { c, .. } if !(c.is_finite() && *c > 0.0) => Err(Error::InvalidConfig(
                format!("expander constant c = {c} must be > 0"),
            )),
            Self::Expander { slope, .. } if !(slope.is_finite() && *slope > 0.0) => Err(
                Error::InvalidConfig(format!("expander slope = {slope} must be > 0")),
            ),
            Self::Plane { height } if !height.is_finite() => Err(Error::InvalidConfig(format!(
                "plane height = {height} must be finite"
            ))),
            _ => Ok(()),
        }
    }

    /// Mollification width actually used on a grid of spacing `h` (power graphs only).
    pub fn eps_smooth(&self, h: f64) -> Option<f64> {
        match self {
            Self::PowerGraph { alpha, eps_smooth } => {
                Some(eps_smooth.unwrap_or_else(|| PowerGraph::default_eps(*alpha, h)))
            }
            _ => None,
        }
    }

    /// Initial profile on `grid`. Soliton data are solved on the grid itself with default ODE
    /// and shooting options; the expander slope target is imposed at `grid.r_max()`.
    pub fn profile(&self, grid: RadialGrid) -> Result<GraphProfile> {
        self.validate()?;
        match self {
            Self::PowerGraph { alpha, .. } => {
                PowerGraph::new(*alpha, self.eps_smooth(grid.h()).unwrap_or(0.0))?.profile(grid)
            }
            Self::Translator { speed } => Ok(solitons::translator_profile(
                *speed,
                grid.n(),
                grid.r_max(),
                grid.h(),
                &OdeOptions::default(),
            )?
            .profile),
            Self::Expander { c, slope } => Ok(solitons::expander_profile(
                *c,
                grid.n(),
                *slope,
                grid.r_max(),
                grid.h(),
                &OdeOptions::default(),
                &ShootingOptions::default(),
            )?
            .profile),
            Self::Plane { height } => GraphProfile::from_fn(grid, 0.0, |_| *height),
            Self::Tabulated { table } => {
                let u = grid
                    .radii()
                    .iter()
                    .map(|r| table.eval(*r))
                    .collect::<Result<Vec<_>>>()?;
                GraphProfile::new(grid, u, 0.0)
            }
        }
    }
}

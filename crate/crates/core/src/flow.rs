//! Explicit method-of-lines solver for the radial graph equation
//!
//! `u_t = u'' / (1 + u'^2) + (n - 1) u' / r`,   `u_t(0) = n u''(0)`,
//!
//! which is `sqrt(1 + u'^2) H`, the vertical speed of a graph moving with normal velocity `H`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, first_non_finite, GeometrySample};
use crate::grid::{GraphProfile, RadialGrid};

/// Closure at the outer node `r = R_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OuterBoundary {
    /// The equation is evaluated at the last node with one-sided stencils.
    OneSided,
    /// The last node keeps its initial height.
    Frozen,
}

impl std::str::FromStr for OuterBoundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one_sided" => Ok(Self::OneSided),
            "frozen" => Ok(Self::Frozen),
            other => Err(Error::InvalidConfig(format!(
                "outer_bc must be one_sided or frozen, got {other:?}"
            ))),
        }
    }
}

/// Which accepted states are stored in the trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// Every k-th accepted step.
    Stride(usize),
    /// Exactly at `t0 + k * interval`; steps are shortened to land on these times.
    Interval(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub cfl_safety: f64,
    pub t_end: f64,
    pub sampling: Sampling,
    pub outer_bc: OuterBoundary,
    pub max_steps: usize,
    /// Abort once `max |A|^2 h^2` exceeds this value while curvature is growing.
    pub blowup_threshold: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            cfl_safety: 0.4,
            t_end: 5.0,
            sampling: Sampling::Stride(100),
            outer_bc: OuterBoundary::OneSided,
            max_steps: 10_000_000,
            blowup_threshold: 1.0,
        }
    }
}

/// `max |A|^2 dt` above which the step is halved.
pub const CURVATURE_STEP_LIMIT: f64 = 0.1;

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "solver.cfl_safety = {} must lie in (0, 1]",
                self.cfl_safety
            )));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "solver.t_end = {} must be > 0",
                self.t_end
            )));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidConfig("solver.max_steps must be >= 1".into()));
        }
        match self.sampling {
            Sampling::Stride(0) => {
                return Err(Error::InvalidConfig(
                    "solver.sample_stride must be >= 1".into(),
                ))
            }
            Sampling::Interval(dt) if !(dt.is_finite() && dt > 0.0) => {
                return Err(Error::InvalidConfig(format!(
                    "solver.sample_interval = {dt} must be > 0"
                )))
            }
            _ => {}
        }
        if !(self.blowup_threshold > 0.0) {
            return Err(Error::InvalidConfig(
                "solver.blowup_threshold must be > 0".into(),
            ));
        }
        Ok(())
    }

    pub fn with_t_end(mut self, t_end: f64) -> Self {
        self.t_end = t_end;
        self
    }

    pub fn with_sampling(mut self, sampling: Sampling) -> Self {
        self.sampling = sampling;
        self
    }

    /// Stable step for the current state: `cfl_safety h^2 / 2`, halved while `max|A|^2 dt > 0.1`.
    pub fn time_step(&self, h: f64, max_a2: f64) -> f64 {
        let mut dt = self.cfl_safety * h * h / 2.0;
        while max_a2 * dt > CURVATURE_STEP_LIMIT {
            dt *= 0.5;
        }
        dt
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ReachedTEnd,
    BlowupUnresolved,
    StepCap,
    /// NaN or infinity appeared at `index` during a step.
    NumericalFailure {
        index: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSample {
    pub profile: GraphProfile,
    pub geometry: GeometrySample,
}

impl FlowSample {
    pub fn new(profile: GraphProfile) -> Self {
        let geometry = geometry::geometry_at(&profile);
        Self { profile, geometry }
    }

    pub fn t(&self) -> f64 {
        self.profile.t()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub dt: Vec<f64>,
    pub max_a2: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowTrajectory {
    pub samples: Vec<FlowSample>,
    pub stats: StepStats,
    pub r_max: f64,
    pub termination: Termination,
}

impl FlowTrajectory {
    /// Wraps existing profiles, e.g. a frozen or synthetic sequence.
    pub fn from_profiles(profiles: Vec<GraphProfile>) -> Result<Self> {
        let first = profiles.first().ok_or(Error::EmptyTrajectory)?;
        let r_max = first.grid().r_max();
        for w in profiles.windows(2) {
            if !(w[1].t() > w[0].t()) {
                return Err(Error::InvalidConfig(
                    "sample times must be strictly increasing".into(),
                ));
            }
        }
        Ok(Self {
            samples: profiles.into_iter().map(FlowSample::new).collect(),
            stats: StepStats::default(),
            r_max,
            termination: Termination::ReachedTEnd,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(FlowSample::t).collect()
    }

    pub fn first(&self) -> Option<&FlowSample> {
        self.samples.first()
    }

    pub fn last(&self) -> Option<&FlowSample> {
        self.samples.last()
    }

    /// Sample whose time is closest to `t`.
    pub fn nearest_index(&self, t: f64) -> Option<usize> {
        self.samples
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1.t() - t).abs().total_cmp(&(b.1.t() - t).abs()))
            .map(|(i, _)| i)
    }

    pub fn grid(&self) -> Option<&RadialGrid> {
        self.samples.first().map(|s| s.profile.grid())
    }

    /// Time derivative of a per-node field following the normal motion of the surface.
    ///
    /// The graph parametrization moves points vertically; a point moving with normal velocity
    /// `H nu` drifts in `r` with speed `-u_t u' / (1 + u'^2)`, so
    /// `d/dt|normal f = d/dt|graph f - u_t u' / (1 + u'^2) * f_r`.
    /// The graph-time derivative uses three neighbouring samples (one-sided at the ends).
    pub fn normal_time_derivative(
        &self,
        k: usize,
        field: impl Fn(&FlowSample) -> Vec<f64>,
    ) -> Result<Vec<f64>> {
        if self.samples.len() < 3 {
            return Err(Error::TooFewSamples {
                needed: 3,
                got: self.samples.len(),
            });
        }
        if k >= self.samples.len() {
            return Err(Error::OutOfRange(format!("sample index {k} out of range")));
        }
        let c = k.clamp(1, self.samples.len() - 2);
        let idx = [c - 1, c, c + 1];
        let t = idx.map(|i| self.samples[i].t());
        let f = idx.map(|i| field(&self.samples[i]));
        let w = three_point_weights(t, self.samples[k].t());
        let sample = &self.samples[k];
        let grid = sample.profile.grid();
        let (du, _) = geometry::derivatives(&sample.profile);
        let (df, _) = geometry::grid_derivatives(grid, &f[k + 1 - c])?;
        let ut = rhs(&sample.profile)?;
        Ok((0..grid.len())
            .map(|i| {
                let graph = w[0] * f[0][i] + w[1] * f[1][i] + w[2] * f[2][i];
                graph - ut[i] * du[i] / (1.0 + du[i] * du[i]) * df[i]
            })
            .collect())
    }
}

/// Weights of the quadratic-interpolant derivative through `(t0, t1, t2)` evaluated at `at`.
pub(crate) fn three_point_weights(t: [f64; 3], at: f64) -> [f64; 3] {
    let [t0, t1, t2] = t;
    [
        ((at - t1) + (at - t2)) / ((t0 - t1) * (t0 - t2)),
        ((at - t0) + (at - t2)) / ((t1 - t0) * (t1 - t2)),
        ((at - t0) + (at - t1)) / ((t2 - t0) * (t2 - t1)),
    ]
}

fn rhs_from_derivatives(grid: &RadialGrid, du: &[f64], d2u: &[f64]) -> Vec<f64> {
    let n = grid.n() as f64;
    (0..grid.len())
        .map(|i| {
            if i == 0 {
                n * d2u[0]
            } else {
                d2u[i] / (1.0 + du[i] * du[i]) + (n - 1.0) * du[i] / grid.r(i)
            }
        })
        .collect()
}

/// Vertical velocity `u_t` of the flow at every node.
pub fn rhs(profile: &GraphProfile) -> Result<Vec<f64>> {
    let (du, d2u) = geometry::derivatives(profile);
    let v = rhs_from_derivatives(profile.grid(), &du, &d2u);
    match first_non_finite(&v) {
        Some(index) => Err(Error::NonFinite {
            index,
            t: profile.t(),
        }),
        None => Ok(v),
    }
}

fn rhs_raw(grid: &RadialGrid, u: &[f64], outer: OuterBoundary) -> Vec<f64> {
    let (du, d2u) = geometry::grid_derivatives(grid, u).expect("state length matches grid");
    let mut v = rhs_from_derivatives(grid, &du, &d2u);
    if outer == OuterBoundary::Frozen {
        *v.last_mut().unwrap() = 0.0;
    }
    v
}

/// One explicit midpoint step of size `dt`.
pub fn step_with_dt(profile: &GraphProfile, dt: f64, outer: OuterBoundary) -> Result<GraphProfile> {
    let grid = *profile.grid();
    let u0 = profile.u();
    let k1 = rhs_raw(&grid, u0, outer);
    let mid: Vec<f64> = u0.iter().zip(&k1).map(|(u, k)| u + 0.5 * dt * k).collect();
    let k2 = rhs_raw(&grid, &mid, outer);
    let next: Vec<f64> = u0.iter().zip(&k2).map(|(u, k)| u + dt * k).collect();
    let t = profile.t() + dt;
    if let Some(index) = first_non_finite(&next) {
        return Err(Error::NonFinite { index, t });
    }
    Ok(GraphProfile::from_parts_unchecked(grid, next, t))
}

/// One step with the step size chosen by [`SolverConfig::time_step`].
pub fn step(profile: &GraphProfile, config: &SolverConfig) -> Result<(GraphProfile, f64)> {
    let max_a2 = geometry::geometry_at(profile).max_a2();
    let dt = config.time_step(profile.h(), max_a2);
    Ok((step_with_dt(profile, dt, config.outer_bc)?, dt))
}

/// Integrates from `profile.t()` for a duration `config.t_end`.
pub fn evolve(profile: &GraphProfile, config: &SolverConfig) -> Result<FlowTrajectory> {
    config.validate()?;
    let t0 = profile.t();
    let t_stop = t0 + config.t_end;
    let h = profile.h();

    let first = FlowSample::new(profile.clone());
    let initial_max_a2 = first.geometry.max_a2();
    let mut max_a2 = initial_max_a2;
    let mut traj = FlowTrajectory {
        samples: vec![first],
        stats: StepStats::default(),
        r_max: profile.grid().r_max(),
        termination: Termination::ReachedTEnd,
    };

    let mut state = profile.clone();
    let mut next_mark = 1usize;
    let mut accepted = 0usize;
    let mut last_stored = true;
    let landing = |k: usize| match config.sampling {
        Sampling::Interval(dt) => (t0 + k as f64 * dt).min(t_stop),
        Sampling::Stride(_) => t_stop,
    };

    while state.t() < t_stop {
        if accepted >= config.max_steps {
            traj.termination = Termination::StepCap;
            break;
        }
        let mut dt = config.time_step(h, max_a2);
        let target = landing(next_mark);
        let lands = state.t() + dt >= target * (1.0 - 1e-14);
        if lands {
            dt = target - state.t();
        }
        let next = match step_with_dt(&state, dt, config.outer_bc) {
            Ok(p) => p,
            Err(Error::NonFinite { index, .. }) => {
                traj.termination = Termination::NumericalFailure { index };
                break;
            }
            Err(e) => return Err(e),
        };
        state = if lands { next.with_time(target) } else { next };
        accepted += 1;

        let sample = FlowSample::new(state.clone());
        max_a2 = sample.geometry.max_a2();
        traj.stats.dt.push(dt);
        traj.stats.max_a2.push(max_a2);

        let store = match config.sampling {
            Sampling::Stride(k) => accepted.is_multiple_of(k) || state.t() >= t_stop,
            Sampling::Interval(_) => lands,
        };
        if lands {
            next_mark += 1;
        }
        last_stored = store;
        if store {
            traj.samples.push(sample);
        }

        if max_a2 * h * h > config.blowup_threshold && max_a2 > initial_max_a2 {
            traj.termination = Termination::BlowupUnresolved;
            break;
        }
    }
    if !last_stored {
        traj.samples.push(FlowSample::new(state));
    }
    Ok(traj)
}

/// Result of evolving the same data on `[0, R]` and `[0, 2R]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSensitivity {
    pub r_max: f64,
    pub times: Vec<f64>,
    /// Max over `r <= R/2` of the height difference at each common time.
    pub discrepancy: Vec<f64>,
    pub max_discrepancy: f64,
}

/// Evolves `initial` (a closed form in `r`) on `[0, r_max]` and `[0, 2 r_max]` and compares the
/// inner halves at common sample times.
pub fn domain_sensitivity(
    base: &SolverConfig,
    n: usize,
    h: f64,
    r_max: f64,
    initial: impl Fn(f64) -> f64,
    comparisons: usize,
) -> Result<DomainSensitivity> {
    let config = base.with_sampling(Sampling::Interval(base.t_end / comparisons.max(1) as f64));
    let small = GraphProfile::from_fn(RadialGrid::covering(n, h, r_max)?, 0.0, &initial)?;
    let large = GraphProfile::from_fn(RadialGrid::covering(n, h, 2.0 * r_max)?, 0.0, &initial)?;
    let a = evolve(&small, &config)?;
    let b = evolve(&large, &config)?;
    let inner = small.grid().nearest(r_max / 2.0);
    let mut times = Vec::new();
    let mut discrepancy = Vec::new();
    for (sa, sb) in a.samples.iter().zip(&b.samples) {
        if (sa.t() - sb.t()).abs() > 1e-12 {
            break;
        }
        let d = (0..=inner)
            .map(|i| (sa.profile.u()[i] - sb.profile.u()[i]).abs())
            .fold(0.0, f64::max);
        times.push(sa.t());
        discrepancy.push(d);
    }
    let max_discrepancy = discrepancy.iter().copied().fold(0.0, f64::max);
    Ok(DomainSensitivity {
        r_max,
        times,
        discrepancy,
        max_discrepancy,
    })
}

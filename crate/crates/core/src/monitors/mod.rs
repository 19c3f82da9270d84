//! Inequalities, ratios and classification indicators evaluated on computed flows.
//!
//! Monitors never modify or stop a run; they report series and worst-case signed margins
//! (negative margin = inequality violated).

mod evolution;
mod noncollapse;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::FlowTrajectory;
use crate::geometry;
use crate::grid::GraphProfile;

pub use evolution::{gradient_ratio, w_evolution_residual};
pub use noncollapse::{
    noncollapse_curve, noncollapse_delta, noncollapse_preservation, sphere_meridian, CurvePoint,
    NoncollapseSample,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorConfig {
    /// `C1 H <= W <= C2 H`.
    pub c1: f64,
    pub c2: f64,
    /// `|W| <= C (1 + |x|^2)^{(1 - eps)/2} H`.
    pub c_weighted: f64,
    pub epsilon: f64,
    /// `1 / W <= c_linear`.
    pub c_linear: f64,
    /// `<x, nu>^2 <= c_growth (1 + |x|^2)^{1 - delta_growth}`.
    pub c_growth: f64,
    pub delta_growth: f64,
    /// Initial noncollapsing constant; `None` uses the measured value at the first sample.
    pub delta0: Option<f64>,
    pub pinching_tol: f64,
    pub noncollapse_tol: f64,
    pub comparison_tol: f64,
    /// Log-log slope of `t max|A|^2` at or below which a run looks Type III.
    pub slope_type_iii: f64,
    /// Slope at or above which a run looks Type IIb.
    pub slope_type_iib: f64,
    /// Type III also needs the late-window maximum of `t max|A|^2` within this factor of the
    /// early-window maximum.
    pub bound_factor: f64,
    /// Mean curvature at or below this is excluded from ratios.
    pub h_floor: f64,
    /// Outermost nodes skipped by monitors that difference derived fields.
    pub boundary_nodes: usize,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        Self {
            c1: 0.25,
            c2: 0.5,
            c_weighted: 1.0,
            epsilon: 0.5,
            c_linear: 10.0,
            c_growth: 1.0,
            delta_growth: 0.5,
            delta0: None,
            pinching_tol: 1e-3,
            noncollapse_tol: 1e-2,
            comparison_tol: 1e-3,
            slope_type_iii: 0.05,
            slope_type_iib: 0.2,
            bound_factor: 1.1,
            h_floor: 1e-12,
            boundary_nodes: 3,
        }
    }
}

impl MonitorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidConfig("monitors.epsilon must be > 0".into()));
        }
        if !(self.delta_growth > 0.0) {
            return Err(Error::InvalidConfig(
                "monitors.delta_growth must be > 0".into(),
            ));
        }
        if !(self.slope_type_iii < self.slope_type_iib) {
            return Err(Error::InvalidConfig(
                "monitors.slope_type_iii must be below monitors.slope_type_iib".into(),
            ));
        }
        Ok(())
    }
}

/// A named scalar time series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub t: Vec<f64>,
    pub values: Vec<f64>,
}

impl Series {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            t: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn push(&mut self, t: f64, value: f64) {
        self.t.push(t);
        self.values.push(value);
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Values with `lo <= t <= hi`.
    pub fn window(&self, lo: f64, hi: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.t
            .iter()
            .zip(&self.values)
            .filter(move |(t, _)| **t >= lo && **t <= hi)
            .map(|(t, v)| (*t, *v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassificationHint {
    TypeIiiConsistent,
    TypeIibConsistent,
    Inconclusive,
}

impl ClassificationHint {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::TypeIiiConsistent => "type_iii_consistent",
            Self::TypeIibConsistent => "type_iib_consistent",
            Self::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub hint: ClassificationHint,
    pub loglog_slope: f64,
    /// `max_t t max|A|^2` over the window.
    pub max_t_a2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorReport {
    pub monitor: String,
    pub series: Vec<Series>,
    /// Worst signed margin per inequality.
    pub margins: BTreeMap<String, f64>,
    pub classification: Option<Classification>,
    pub passed: Option<bool>,
    pub masked_nodes: usize,
    pub config: MonitorConfig,
}

impl MonitorReport {
    fn new(monitor: &str, config: &MonitorConfig) -> Self {
        Self {
            monitor: monitor.to_string(),
            series: Vec::new(),
            margins: BTreeMap::new(),
            classification: None,
            passed: None,
            masked_nodes: 0,
            config: *config,
        }
    }

    pub fn series(&self, name: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.name == name)
    }

    pub fn margin(&self, name: &str) -> Option<f64> {
        self.margins.get(name).copied()
    }
}

/// Least-squares slope of `log y` against `log x` over points with positive coordinates.
pub fn loglog_slope(points: impl IntoIterator<Item = (f64, f64)>) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .into_iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

/// `T(t) = t max|A|^2` and its log-log slope over the last half of the window.
pub fn type_classifier(traj: &FlowTrajectory, config: &MonitorConfig) -> Result<MonitorReport> {
    let positive = traj.samples.iter().filter(|s| s.t() > 0.0).count();
    if positive < 10 {
        return Err(Error::TooFewSamples {
            needed: 10,
            got: positive,
        });
    }
    let mut report = MonitorReport::new("type_classifier", config);
    let mut t_a2 = Series::new("t_max_A2");
    let mut a_axis = Series::new("A_axis");
    for s in &traj.samples {
        t_a2.push(s.t(), s.t() * s.geometry.max_a2());
        a_axis.push(s.t(), s.geometry.norm_a(0));
    }
    let t0 = traj.first().map_or(0.0, |s| s.t());
    let t1 = traj.last().map_or(0.0, |s| s.t());
    let mid = 0.5 * (t0 + t1);
    let late_max = t_a2.window(mid, t1).map(|p| p.1).fold(0.0, f64::max);
    let early_max = t_a2.window(t0, mid).map(|p| p.1).fold(0.0, f64::max);
    // T identically zero (flat) has no slope; it is trivially bounded.
    let slope = if late_max == 0.0 {
        0.0
    } else {
        loglog_slope(t_a2.window(mid, t1)).unwrap_or(0.0)
    };
    let bounded = late_max <= early_max * config.bound_factor || late_max == 0.0;
    let hint = if slope <= config.slope_type_iii && bounded {
        ClassificationHint::TypeIiiConsistent
    } else if slope >= config.slope_type_iib {
        ClassificationHint::TypeIibConsistent
    } else {
        ClassificationHint::Inconclusive
    };
    report.classification = Some(Classification {
        hint,
        loglog_slope: slope,
        max_t_a2: t_a2.max(),
    });
    report.series.push(t_a2);
    report.series.push(a_axis);
    Ok(report)
}

/// Margins of `W - C1 H`, `C2 H - W`, `C (1+|x|^2)^{(1-eps)/2} H - |W|` and `2 n W - H` per sample,
/// plus the range of `W / H` over nodes with `H` above the floor.
pub fn pinching_check(traj: &FlowTrajectory, config: &MonitorConfig) -> Result<MonitorReport> {
    if traj.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let mut report = MonitorReport::new("pinching_check", config);
    let names = ["lower_c1", "upper_c2", "weighted", "two_n_w"];
    let mut margin_series: Vec<Series> = names.iter().map(|n| Series::new(*n)).collect();
    let mut ratio_min = Series::new("w_over_h_min");
    let mut ratio_max = Series::new("w_over_h_max");
    let mut h_max = Series::new("h_max");
    let mut masked = 0;
    for s in &traj.samples {
        let g = &s.geometry;
        let grid = s.profile.grid();
        let n = grid.n() as f64;
        let exponent = 0.5 * (1.0 - config.epsilon);
        let mut m = [f64::INFINITY; 4];
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..g.len() {
            let (w, h) = (g.w[i], g.h[i]);
            let x2 = grid.r(i).powi(2) + s.profile.u()[i].powi(2);
            m[0] = m[0].min(w - config.c1 * h);
            m[1] = m[1].min(config.c2 * h - w);
            m[2] = m[2].min(config.c_weighted * (1.0 + x2).powf(exponent) * h - w.abs());
            m[3] = m[3].min(2.0 * n * w - h);
            if h > config.h_floor {
                lo = lo.min(w / h);
                hi = hi.max(w / h);
            } else {
                masked += 1;
            }
        }
        for (series, v) in margin_series.iter_mut().zip(m) {
            series.push(s.t(), v);
        }
        ratio_min.push(s.t(), lo);
        ratio_max.push(s.t(), hi);
        h_max.push(s.t(), g.max_h());
    }
    let scale = h_max.max().abs().max(1.0);
    let mut preserved = true;
    for series in &margin_series {
        let initial = series.values[0];
        // Largest drop below the initial margin; preservation means it stays above -tol.
        let drop = series
            .values
            .iter()
            .map(|v| v - initial)
            .fold(0.0, f64::min);
        report.margins.insert(series.name.clone(), series.min());
        report.margins.insert(format!("{}_drop", series.name), drop);
        preserved &= drop >= -config.pinching_tol * scale;
    }
    report.passed = Some(preserved);
    report.masked_nodes = masked;
    report.series.extend(margin_series);
    report.series.push(ratio_min);
    report.series.push(ratio_max);
    report.series.push(h_max);
    Ok(report)
}

/// Ecker-Huisken growth conditions on a single profile: gradient bound `1/W <= c_linear` and
/// `<x, nu>^2 <= c_growth (1 + |x|^2)^{1 - delta}`.
pub fn eh_conditions(profile: &GraphProfile, config: &MonitorConfig) -> MonitorReport {
    let mut report = MonitorReport::new("eh_conditions", config);
    let g = geometry::geometry_at(profile);
    let support = geometry::support_function(profile);
    let grid = profile.grid();
    let (mut upsilon, mut upsilon_at) = (0.0f64, 0usize);
    let (mut growth, mut growth_at) = (0.0f64, 0usize);
    for i in 0..g.len() {
        let v = 1.0 / g.w[i];
        if v > upsilon {
            upsilon = v;
            upsilon_at = i;
        }
        let x2 = grid.r(i).powi(2) + profile.u()[i].powi(2);
        let ratio = support[i].powi(2) / (1.0 + x2).powf(1.0 - config.delta_growth);
        if ratio > growth {
            growth = ratio;
            growth_at = i;
        }
    }
    let t = profile.t();
    let mut s = Series::new("upsilon_max");
    s.push(t, upsilon);
    report.series.push(s);
    let mut s = Series::new("upsilon_argmax_r");
    s.push(t, grid.r(upsilon_at));
    report.series.push(s);
    let mut s = Series::new("growth_ratio_max");
    s.push(t, growth);
    report.series.push(s);
    let mut s = Series::new("growth_argmax_r");
    s.push(t, grid.r(growth_at));
    report.series.push(s);
    report
        .margins
        .insert("linear_gradient".into(), config.c_linear - upsilon);
    report
        .margins
        .insert("growth".into(), config.c_growth - growth);
    report.passed = Some(upsilon <= config.c_linear && growth <= config.c_growth);
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfspaceCheck {
    pub contained: bool,
    /// `|<omega, e_{n+1}>|`.
    pub margin: f64,
    pub inf_u: f64,
}

/// Whether the graph lies in an upper half-space `{x_{n+1} >= c}` whose boundary is not parallel
/// to `omega` (components in `R^{n+1}`, last one along `e_{n+1}`).
pub fn halfspace_check(profile: &GraphProfile, omega: &[f64]) -> Result<HalfspaceCheck> {
    let norm = omega.iter().map(|c| c * c).sum::<f64>().sqrt();
    if omega.len() != profile.n() + 1 {
        return Err(Error::LengthMismatch {
            expected: profile.n() + 1,
            got: omega.len(),
        });
    }
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidConfig(format!(
            "omega must be a unit vector, |omega| = {norm}"
        )));
    }
    let inf_u = profile.u().iter().copied().fold(f64::INFINITY, f64::min);
    let margin = omega[omega.len() - 1].abs();
    Ok(HalfspaceCheck {
        contained: inf_u.is_finite() && margin > 1e-12,
        margin,
        inf_u,
    })
}

/// Ordering of two flows on a common grid: series of `max_p (u1 - u2)`.
pub fn comparison_check(
    lower: &FlowTrajectory,
    upper: &FlowTrajectory,
    config: &MonitorConfig,
) -> Result<MonitorReport> {
    if lower.is_empty() || upper.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let (ga, gb) = (lower.grid().unwrap(), upper.grid().unwrap());
    if ga != gb {
        return Err(Error::Mismatch(format!("grids differ: {ga:?} vs {gb:?}")));
    }
    let mut report = MonitorReport::new("comparison_check", config);
    let mut gap = Series::new("max_u1_minus_u2");
    for (a, b) in lower.samples.iter().zip(&upper.samples) {
        if (a.t() - b.t()).abs() > 1e-9 * a.t().abs().max(1.0) {
            return Err(Error::Mismatch(format!(
                "sample times {} and {} differ",
                a.t(),
                b.t()
            )));
        }
        let mx = a
            .profile
            .u()
            .iter()
            .zip(b.profile.u())
            .map(|(x, y)| x - y)
            .fold(f64::NEG_INFINITY, f64::max);
        gap.push(a.t(), mx);
    }
    let initially_ordered = gap.values[0] <= 0.0;
    let worst = gap.max();
    report.margins.insert("ordering".into(), -worst);
    report.margins.insert("initial_gap".into(), -gap.values[0]);
    report.passed = Some(initially_ordered && worst <= config.comparison_tol);
    report.series.push(gap);
    Ok(report)
}

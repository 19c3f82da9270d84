//! Experiment configuration read from flat `key = value` files.
//!
//! Keys are dot-separated field paths (`solver.t_end`, `initial_data.alpha`); `#` starts a
//! comment. Every key is optional and unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use mcflab_core::{
    InitialData, MonitorConfig, OuterBoundary, RadialGrid, Sampling, SolverConfig, Table,
};
use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Initial data as configured; tabulated data refer to a file.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialDataSpec {
    PowerGraph { alpha: f64, eps_smooth: Option<f64> },
    Translator { speed: f64 },
    Expander { c: f64, slope: f64 },
    Plane { height: f64 },
    Tabulated { path: PathBuf },
}

impl InitialDataSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::PowerGraph { .. } => "power_graph",
            Self::Translator { .. } => "translator",
            Self::Expander { .. } => "expander",
            Self::Plane { .. } => "plane",
            Self::Tabulated { .. } => "tabulated",
        }
    }

    /// Core initial data, reading tabulated heights from disk.
    pub fn resolve(&self) -> CliResult<InitialData> {
        Ok(match self {
            Self::PowerGraph { alpha, eps_smooth } => InitialData::PowerGraph {
                alpha: *alpha,
                eps_smooth: *eps_smooth,
            },
            Self::Translator { speed } => InitialData::Translator { speed: *speed },
            Self::Expander { c, slope } => InitialData::Expander {
                c: *c,
                slope: *slope,
            },
            Self::Plane { height } => InitialData::Plane { height: *height },
            Self::Tabulated { path } => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::Config(format!("initial_data.path {}: {e}", path.display()))
                })?;
                let table = Table::parse(&text).map_err(|e| {
                    CliError::Config(format!("initial_data.path {}: {e}", path.display()))
                })?;
                InitialData::Tabulated { table }
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RescalingConfig {
    pub j_list: Vec<f64>,
    pub gamma: f64,
    /// Radius of the translator fit window around the base point, in rescaled units.
    pub match_radius: f64,
}

impl Default for RescalingConfig {
    fn default() -> Self {
        Self {
            j_list: vec![2.0, 4.0],
            gamma: 1.0,
            match_radius: 2.0,
        }
    }
}

/// Tolerances asserted by `--check`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckConfig {
    pub steadiness_tol: f64,
    pub self_similarity_tol: f64,
    /// Radius bounding the self-similarity comparison; `None` uses `r_max / 3`.
    pub self_similarity_radius: Option<f64>,
    /// Floor for `|A|(0, t)` on the `alpha = 2` row.
    pub axis_floor: f64,
    /// Relative slack on the `2 n^2` curvature bound.
    pub bound_slack: f64,
    /// Required `|A|(0, t_end) / |A|(0, t_start)` on decaying rows.
    pub decay_ratio: f64,
    /// Start of the trend window; clipped to `t_end / 5` on short runs.
    pub trend_start: f64,
    pub base_curvature_tol: f64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            steadiness_tol: 5e-3,
            self_similarity_tol: 1e-2,
            self_similarity_radius: None,
            axis_floor: 0.1,
            bound_slack: 1e-2,
            decay_ratio: 0.5,
            trend_start: 1.0,
            base_curvature_tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1Config {
    pub alphas: Vec<f64>,
}

impl Default for Table1Config {
    fn default() -> Self {
        Self {
            alphas: vec![0.5, 1.5, 2.0, 3.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub initial_data: InitialDataSpec,
    pub n: usize,
    pub r_max: f64,
    pub h: f64,
    pub solver: SolverConfig,
    pub monitors: MonitorConfig,
    pub rescaling: RescalingConfig,
    pub table1: Table1Config,
    pub checks: CheckConfig,
    #[serde(skip)]
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            initial_data: InitialDataSpec::PowerGraph {
                alpha: 2.0,
                eps_smooth: None,
            },
            n: 2,
            r_max: 30.0,
            h: 0.05,
            solver: SolverConfig::default()
                .with_t_end(5.0)
                .with_sampling(Sampling::Interval(0.05)),
            monitors: MonitorConfig::default(),
            rescaling: RescalingConfig::default(),
            table1: Table1Config::default(),
            checks: CheckConfig::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub alpha: Option<f64>,
    pub dim: Option<usize>,
    pub r_max: Option<f64>,
    pub h: Option<f64>,
    pub t_end: Option<f64>,
    pub output_dir: Option<PathBuf>,
}

struct Entry {
    value: String,
    line: usize,
}

/// Splits `key = value` lines, dropping comments and blank lines.
fn entries(text: &str) -> CliResult<BTreeMap<String, Entry>> {
    let mut map = BTreeMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {line}: expected `key = value`")))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(CliError::Config(format!("line {line}: empty key or value")));
        }
        let value = value.trim_matches('"').to_string();
        if let Some(prev) = map.insert(key.to_string(), Entry { value, line }) {
            return Err(CliError::Config(format!(
                "line {line}: {key} already set on line {}",
                prev.line
            )));
        }
    }
    Ok(map)
}

struct Fields {
    map: BTreeMap<String, Entry>,
}

impl Fields {
    fn take_str(&mut self, key: &str) -> Option<(String, usize)> {
        self.map.remove(key).map(|e| (e.value, e.line))
    }

    fn take<T: std::str::FromStr>(&mut self, key: &str) -> CliResult<Option<T>> {
        match self.take_str(key) {
            None => Ok(None),
            Some((v, line)) => v.parse().map(Some).map_err(|_| {
                CliError::Config(format!("line {line}: {key} = {v:?} is not a valid value"))
            }),
        }
    }

    fn take_list(&mut self, key: &str) -> CliResult<Option<Vec<f64>>> {
        match self.take_str(key) {
            None => Ok(None),
            Some((v, line)) => v
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map(Some)
                .map_err(|_| {
                    CliError::Config(format!(
                        "line {line}: {key} = {v:?} is not a list of numbers"
                    ))
                }),
        }
    }

    fn set<T: std::str::FromStr>(&mut self, key: &str, slot: &mut T) -> CliResult<()> {
        if let Some(v) = self.take(key)? {
            *slot = v;
        }
        Ok(())
    }
}

fn invalid(field: &str, value: impl std::fmt::Display, rule: &str) -> CliError {
    CliError::Config(format!("{field} = {value} {rule}"))
}

impl ExperimentConfig {
    /// Parses configuration text on top of the defaults. Relative tabulated paths are resolved
    /// against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> CliResult<Self> {
        let mut f = Fields {
            map: entries(text)?,
        };
        let mut cfg = Self::default();

        let kind = f.take_str("initial_data.kind");
        let alpha: Option<f64> = f.take("initial_data.alpha")?;
        let eps_smooth: Option<f64> = f.take("initial_data.eps_smooth")?;
        let speed: Option<f64> = f.take("initial_data.speed")?;
        let c: Option<f64> = f.take("initial_data.c")?;
        let slope: Option<f64> = f.take("initial_data.slope")?;
        let height: Option<f64> = f.take("initial_data.height")?;
        let path = f.take_str("initial_data.path");
        let kind_name = kind.as_ref().map_or("power_graph", |k| k.0.as_str());
        let used: &[&str] = match kind_name {
            "power_graph" => {
                cfg.initial_data = InitialDataSpec::PowerGraph {
                    alpha: alpha.unwrap_or(2.0),
                    eps_smooth,
                };
                &["alpha", "eps_smooth"]
            }
            "translator" => {
                cfg.initial_data = InitialDataSpec::Translator {
                    speed: speed.unwrap_or(1.0),
                };
                &["speed"]
            }
            "expander" => {
                cfg.initial_data = InitialDataSpec::Expander {
                    c: c.unwrap_or(1.0),
                    slope: slope.unwrap_or(1.0),
                };
                &["c", "slope"]
            }
            "plane" => {
                cfg.initial_data = InitialDataSpec::Plane {
                    height: height.unwrap_or(0.0),
                };
                &["height"]
            }
            "tabulated" => {
                let (p, line) = path.clone().ok_or_else(|| {
                    CliError::Config("initial_data.path is required for kind tabulated".into())
                })?;
                let p = PathBuf::from(p);
                if p.as_os_str().is_empty() {
                    return Err(CliError::Config(format!(
                        "line {line}: empty initial_data.path"
                    )));
                }
                cfg.initial_data = InitialDataSpec::Tabulated {
                    path: if p.is_absolute() { p } else { base_dir.join(p) },
                };
                &["path"]
            }
            other => {
                return Err(CliError::Config(format!(
                    "initial_data.kind = {other:?} must be one of power_graph, translator, \
                     expander, plane, tabulated"
                )))
            }
        };
        let given = [
            ("alpha", alpha.is_some()),
            ("eps_smooth", eps_smooth.is_some()),
            ("speed", speed.is_some()),
            ("c", c.is_some()),
            ("slope", slope.is_some()),
            ("height", height.is_some()),
            ("path", path.is_some()),
        ];
        if let Some((name, _)) = given
            .iter()
            .find(|(name, set)| *set && !used.contains(name))
        {
            return Err(CliError::Config(format!(
                "initial_data.{name} does not apply to kind {kind_name}"
            )));
        }

        f.set("n", &mut cfg.n)?;
        f.set("r_max", &mut cfg.r_max)?;
        f.set("h", &mut cfg.h)?;
        if let Some((dir, _)) = f.take_str("output_dir") {
            cfg.output_dir = PathBuf::from(dir);
        }

        let s = &mut cfg.solver;
        f.set("solver.cfl_safety", &mut s.cfl_safety)?;
        f.set("solver.t_end", &mut s.t_end)?;
        f.set("solver.max_steps", &mut s.max_steps)?;
        f.set("solver.blowup_threshold", &mut s.blowup_threshold)?;
        if let Some((v, line)) = f.take_str("solver.outer_bc") {
            s.outer_bc = v
                .parse::<OuterBoundary>()
                .map_err(|e| CliError::Config(format!("line {line}: {e}")))?;
        }
        let stride: Option<usize> = f.take("solver.sample_stride")?;
        let interval: Option<f64> = f.take("solver.sample_interval")?;
        s.sampling = match (stride, interval) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "solver.sample_stride and solver.sample_interval are mutually exclusive".into(),
                ))
            }
            (Some(k), None) => Sampling::Stride(k),
            (None, Some(dt)) => Sampling::Interval(dt),
            (None, None) => s.sampling,
        };

        let m = &mut cfg.monitors;
        f.set("monitors.c1", &mut m.c1)?;
        f.set("monitors.c2", &mut m.c2)?;
        f.set("monitors.c_weighted", &mut m.c_weighted)?;
        f.set("monitors.epsilon", &mut m.epsilon)?;
        f.set("monitors.c_linear", &mut m.c_linear)?;
        f.set("monitors.c_growth", &mut m.c_growth)?;
        f.set("monitors.delta_growth", &mut m.delta_growth)?;
        if let Some(d) = f.take("monitors.delta0")? {
            m.delta0 = Some(d);
        }
        f.set("monitors.pinching_tol", &mut m.pinching_tol)?;
        f.set("monitors.noncollapse_tol", &mut m.noncollapse_tol)?;
        f.set("monitors.comparison_tol", &mut m.comparison_tol)?;
        f.set("monitors.slope_type_iii", &mut m.slope_type_iii)?;
        f.set("monitors.slope_type_iib", &mut m.slope_type_iib)?;
        f.set("monitors.bound_factor", &mut m.bound_factor)?;
        f.set("monitors.h_floor", &mut m.h_floor)?;
        f.set("monitors.boundary_nodes", &mut m.boundary_nodes)?;

        if let Some(j) = f.take_list("rescaling.j_list")? {
            cfg.rescaling.j_list = j;
        }
        f.set("rescaling.gamma", &mut cfg.rescaling.gamma)?;
        f.set("rescaling.match_radius", &mut cfg.rescaling.match_radius)?;

        if let Some(a) = f.take_list("table1.alphas")? {
            cfg.table1.alphas = a;
        }

        let k = &mut cfg.checks;
        f.set("checks.steadiness_tol", &mut k.steadiness_tol)?;
        f.set("checks.self_similarity_tol", &mut k.self_similarity_tol)?;
        if let Some(r) = f.take("checks.self_similarity_radius")? {
            k.self_similarity_radius = Some(r);
        }
        f.set("checks.axis_floor", &mut k.axis_floor)?;
        f.set("checks.bound_slack", &mut k.bound_slack)?;
        f.set("checks.decay_ratio", &mut k.decay_ratio)?;
        f.set("checks.trend_start", &mut k.trend_start)?;
        f.set("checks.base_curvature_tol", &mut k.base_curvature_tol)?;

        if let Some((key, e)) = f.map.iter().next() {
            return Err(CliError::Config(format!(
                "line {}: unknown key {key}",
                e.line
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn apply(&mut self, o: &Overrides) -> CliResult<()> {
        if let Some(alpha) = o.alpha {
            match &mut self.initial_data {
                InitialDataSpec::PowerGraph { alpha: a, .. } => *a = alpha,
                other => {
                    return Err(CliError::Config(format!(
                        "--alpha applies to power_graph initial data, not {}",
                        other.kind()
                    )))
                }
            }
        }
        if let Some(n) = o.dim {
            self.n = n;
        }
        if let Some(r) = o.r_max {
            self.r_max = r;
        }
        if let Some(h) = o.h {
            self.h = h;
        }
        if let Some(t) = o.t_end {
            self.solver.t_end = t;
        }
        if let Some(dir) = &o.output_dir {
            self.output_dir = dir.clone();
        }
        Ok(())
    }

    /// Field-level validation of everything that does not need the initial data resolved.
    pub fn validate(&self) -> CliResult<()> {
        match &self.initial_data {
            InitialDataSpec::PowerGraph { alpha, eps_smooth } => {
                if !(alpha.is_finite() && *alpha > 0.0) {
                    return Err(invalid("initial_data.alpha", alpha, "must be > 0"));
                }
                if let Some(e) = eps_smooth {
                    if !(e.is_finite() && *e >= 0.0) {
                        return Err(invalid("initial_data.eps_smooth", e, "must be >= 0"));
                    }
                }
            }
            InitialDataSpec::Translator { speed } if !(speed.is_finite() && *speed > 0.0) => {
                return Err(invalid("initial_data.speed", speed, "must be > 0"));
            }
            InitialDataSpec::Expander { c, .. } if !(c.is_finite() && *c > 0.0) => {
                return Err(invalid("initial_data.c", c, "must be > 0"));
            }
            InitialDataSpec::Expander { slope, .. } if !(slope.is_finite() && *slope > 0.0) => {
                return Err(invalid("initial_data.slope", slope, "must be > 0"));
            }
            InitialDataSpec::Plane { height } if !height.is_finite() => {
                return Err(invalid("initial_data.height", height, "must be finite"));
            }
            _ => {}
        }
        if self.n < 1 {
            return Err(invalid("n", self.n, "must be >= 1"));
        }
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(invalid("h", self.h, "must be > 0"));
        }
        if !(self.r_max.is_finite() && self.r_max > 0.0) {
            return Err(invalid("r_max", self.r_max, "must be > 0"));
        }
        RadialGrid::covering(self.n, self.h, self.r_max).map_err(|_| {
            invalid(
                "r_max",
                self.r_max,
                &format!("must be a multiple of h = {}", self.h),
            )
        })?;
        self.solver.validate().map_err(CliError::from_config)?;
        self.monitors.validate().map_err(CliError::from_config)?;
        let r = &self.rescaling;
        if !(r.gamma > 0.0 && r.gamma <= 1.0) {
            return Err(invalid("rescaling.gamma", r.gamma, "must lie in (0, 1]"));
        }
        if r.j_list.is_empty() || r.j_list.iter().any(|j| !(j.is_finite() && *j > 0.0)) {
            return Err(CliError::Config(
                "rescaling.j_list must be a non-empty list of positive times".into(),
            ));
        }
        if !(r.match_radius.is_finite() && r.match_radius > 0.0) {
            return Err(invalid(
                "rescaling.match_radius",
                r.match_radius,
                "must be > 0",
            ));
        }
        if self.table1.alphas.is_empty()
            || self
                .table1
                .alphas
                .iter()
                .any(|a| !(a.is_finite() && *a > 0.0))
        {
            return Err(CliError::Config(
                "table1.alphas must be a non-empty list of positive exponents".into(),
            ));
        }
        let k = &self.checks;
        for (name, v) in [
            ("checks.steadiness_tol", k.steadiness_tol),
            ("checks.self_similarity_tol", k.self_similarity_tol),
            ("checks.axis_floor", k.axis_floor),
            ("checks.bound_slack", k.bound_slack),
            ("checks.decay_ratio", k.decay_ratio),
            ("checks.trend_start", k.trend_start),
            ("checks.base_curvature_tol", k.base_curvature_tol),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(name, v, "must be >= 0"));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> CliResult<RadialGrid> {
        RadialGrid::covering(self.n, self.h, self.r_max).map_err(CliError::from_config)
    }
}

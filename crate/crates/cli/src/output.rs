//! CSV and JSON serialization plus the checksummed output directory.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use mcflab_core::geometry::derivatives;
use mcflab_core::{FlowTrajectory, GeometrySample, GraphProfile, Series, Termination};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const TRAJECTORY_HEADER: &str = "t,r,u,du,H,W,A2,kappa1,kappa2";
pub const MONITOR_HEADER: &str = "t,series,value";

/// Fixed 15 significant digits in scientific notation.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.14e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn push_rows(out: &mut String, t: f64, profile: &GraphProfile, g: &GeometrySample) {
    let (du, _) = derivatives(profile);
    let grid = profile.grid();
    for i in 0..profile.len() {
        let row = [
            t,
            grid.r(i),
            profile.u()[i],
            du[i],
            g.h[i],
            g.w[i],
            g.a2[i],
            g.kappa1[i],
            g.kappa2[i],
        ];
        let cells: Vec<String> = row.iter().map(|v| num(*v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
}

/// One row per (sample, node); an empty iterator gives the header alone.
pub fn profiles_csv<'a>(
    samples: impl IntoIterator<Item = (f64, &'a GraphProfile, &'a GeometrySample)>,
) -> String {
    let mut out = format!("{TRAJECTORY_HEADER}\n");
    for (t, p, g) in samples {
        push_rows(&mut out, t, p, g);
    }
    out
}

pub fn trajectory_csv(traj: &FlowTrajectory) -> String {
    profiles_csv(
        traj.samples
            .iter()
            .map(|s| (s.t(), &s.profile, &s.geometry)),
    )
}

/// Series in the given order, each in time order.
pub fn monitor_csv<'a>(series: impl IntoIterator<Item = &'a Series>) -> String {
    let mut out = format!("{MONITOR_HEADER}\n");
    for s in series {
        for (t, v) in s.t.iter().zip(&s.values) {
            let _ = writeln!(out, "{},{},{}", num(*t), s.name, num(*v));
        }
    }
    out
}

pub fn termination_name(t: &Termination) -> &'static str {
    match t {
        Termination::ReachedTEnd => "reached_t_end",
        Termination::BlowupUnresolved => "blowup_unresolved",
        Termination::StepCap => "step_cap",
        Termination::NumericalFailure { .. } => "numerical_failure",
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Check {
    pub status: CheckStatus,
    pub value: f64,
    pub limit: f64,
}

impl Check {
    fn from(pass: bool, value: f64, limit: f64) -> Self {
        let status = if pass {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        };
        Self {
            status,
            value,
            limit,
        }
    }

    pub fn at_most(value: f64, limit: f64) -> Self {
        Self::from(value <= limit, value, limit)
    }

    pub fn at_least(value: f64, limit: f64) -> Self {
        Self::from(value >= limit, value, limit)
    }

    pub fn flag(pass: bool, value: f64, limit: f64) -> Self {
        Self::from(pass, value, limit)
    }

    pub fn passed(&self) -> bool {
        self.status == CheckStatus::Pass
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolitonFit {
    #[serde(rename = "N")]
    pub n: Option<f64>,
    pub residual: f64,
}

/// The `summary.json` object.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub config: serde_json::Value,
    pub termination: Option<String>,
    pub classification_hint: Option<String>,
    pub loglog_slope: Option<f64>,
    #[serde(rename = "max_tA2")]
    pub max_t_a2: Option<f64>,
    pub pinching_margins: Option<BTreeMap<String, f64>>,
    pub delta_min_series_min: Option<f64>,
    pub soliton_fit: Option<SolitonFit>,
    pub checks: BTreeMap<String, Check>,
}

impl Summary {
    pub fn new(config: serde_json::Value) -> Self {
        Self {
            config,
            termination: None,
            classification_hint: None,
            loglog_slope: None,
            max_t_a2: None,
            pinching_margins: None,
            delta_min_series_min: None,
            soliton_fit: None,
            checks: BTreeMap::new(),
        }
    }

    pub fn failed_checks(&self) -> Vec<String> {
        self.checks
            .iter()
            .filter(|(_, c)| !c.passed())
            .map(|(k, _)| k.clone())
            .collect()
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Running,
    Complete,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub status: RunStatus,
    pub code_version: String,
    pub config: serde_json::Value,
    pub output_dir: PathBuf,
    pub eps_smooth: BTreeMap<String, f64>,
    pub started_unix: f64,
    pub finished_unix: Option<f64>,
    pub wall_seconds: Option<f64>,
    pub termination: Option<String>,
    pub error: Option<String>,
    pub files: Vec<FileEntry>,
}

fn now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

impl RunManifest {
    pub fn start(command: &str, config: serde_json::Value, output_dir: &Path) -> Self {
        Self {
            command: command.into(),
            status: RunStatus::Running,
            code_version: concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")).into(),
            config,
            output_dir: output_dir.to_path_buf(),
            eps_smooth: BTreeMap::new(),
            started_unix: now(),
            finished_unix: None,
            wall_seconds: None,
            termination: None,
            error: None,
            files: Vec::new(),
        }
    }

    pub fn finish(&mut self, error: Option<&CliError>, files: Vec<FileEntry>) {
        let end = now();
        self.finished_unix = Some(end);
        self.wall_seconds = Some(end - self.started_unix);
        self.status = if error.is_some() {
            RunStatus::Failed
        } else {
            RunStatus::Complete
        };
        self.error = error.map(|e| e.to_string());
        self.files = files;
    }
}

pub const MANIFEST_NAME: &str = "manifest.json";

/// Output directory that records the size and SHA-256 of every file written through it.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: BTreeMap<String, FileEntry>,
}

impl OutputDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(root).map_err(CliError::io(root))?;
        Ok(Self {
            root: root.to_path_buf(),
            files: BTreeMap::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, rel: &str, contents: &str) -> CliResult<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(CliError::io(parent))?;
        }
        std::fs::write(&path, contents).map_err(CliError::io(&path))?;
        let entry = FileEntry {
            path: rel.to_string(),
            bytes: contents.len() as u64,
            sha256: sha256_hex(contents.as_bytes()),
        };
        self.files.insert(rel.to_string(), entry);
        Ok(())
    }

    pub fn files(&self) -> Vec<FileEntry> {
        self.files.values().cloned().collect()
    }

    pub fn write_manifest(&self, manifest: &RunManifest) -> CliResult<()> {
        let path = self.root.join(MANIFEST_NAME);
        std::fs::write(&path, to_json(manifest)).map_err(CliError::io(&path))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

//! Experiment orchestration for every subcommand.

use std::collections::BTreeMap;

use mcflab_core::monitors::{noncollapse_preservation, pinching_check, type_classifier};
use mcflab_core::rescaling::{rescale_flow, select_blowup_points, soliton_match};
use mcflab_core::solitons::{expander_profile, translation_residual, translator_profile};
use mcflab_core::{
    evolve, Error, FlowTrajectory, GraphProfile, InitialData, MonitorReport, OdeOptions, Series,
    ShootingOptions,
};

use crate::config::{ExperimentConfig, InitialDataSpec};
use crate::error::{CliError, CliResult};
use crate::output::{
    monitor_csv, num, profiles_csv, termination_name, to_json, trajectory_csv, Check, OutputDir,
    RunManifest, SolitonFit, Summary,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Evolve,
    Soliton,
    Rescale,
    Classify,
    Noncollapse,
    Table1,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Evolve => "evolve",
            Self::Soliton => "soliton",
            Self::Rescale => "rescale",
            Self::Classify => "classify",
            Self::Noncollapse => "noncollapse",
            Self::Table1 => "table1",
        }
    }
}

/// What a finished run reports back to the caller.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub summary: Summary,
    pub manifest: RunManifest,
}

fn config_echo(cfg: &ExperimentConfig) -> serde_json::Value {
    serde_json::to_value(cfg).expect("config is serializable")
}

/// Runs `command`, writing every output and the manifest into `cfg.output_dir`.
///
/// The manifest is written with status `running` before any numerics start and rewritten when
/// the run ends, successfully or not. With `check`, failed checks turn into [`CliError::Check`].
pub fn run(command: Command, cfg: &ExperimentConfig, check: bool) -> CliResult<RunOutcome> {
    cfg.validate()?;
    let mut out = OutputDir::create(&cfg.output_dir)?;
    let mut manifest = RunManifest::start(command.name(), config_echo(cfg), &cfg.output_dir);
    out.write_manifest(&manifest)?;

    let result = execute(command, cfg, &mut out, &mut manifest);
    let outcome = match &result {
        Ok(summary) => {
            manifest.termination = summary.termination.clone();
            match (&summary.termination, summary.failed_checks()) {
                (Some(t), _) if t != "reached_t_end" => {
                    Err(CliError::Numerical(format!("flow terminated early: {t}")))
                }
                (_, failed) if check && !failed.is_empty() => Err(CliError::Check(failed)),
                _ => Ok(()),
            }
        }
        Err(_) => Ok(()),
    };
    let error = result.as_ref().err().or(outcome.as_ref().err());
    manifest.finish(error, out.files());
    out.write_manifest(&manifest)?;
    let summary = result?;
    outcome?;
    Ok(RunOutcome { summary, manifest })
}

fn execute(
    command: Command,
    cfg: &ExperimentConfig,
    out: &mut OutputDir,
    manifest: &mut RunManifest,
) -> CliResult<Summary> {
    if command == Command::Table1 {
        return table1(cfg, out, manifest);
    }
    let data = cfg.initial_data.resolve()?;
    data.validate()?;
    if let Some(eps) = data.eps_smooth(cfg.h) {
        manifest
            .eps_smooth
            .insert(cfg.initial_data.kind().into(), eps);
    }
    if command == Command::Soliton {
        return soliton(cfg, out);
    }
    let profile = data.profile(cfg.grid()?)?;
    let traj = evolve(&profile, &cfg.solver)?;
    let mut summary = Summary::new(config_echo(cfg));
    summary.termination = Some(termination_name(&traj.termination).into());
    match command {
        Command::Evolve => evolve_all(cfg, &data, &traj, out, &mut summary)?,
        Command::Classify => classify(cfg, &traj, out, &mut summary)?,
        Command::Noncollapse => noncollapse(cfg, &traj, out, &mut summary)?,
        Command::Rescale => rescale(cfg, &traj, out, &mut summary)?,
        Command::Soliton | Command::Table1 => unreachable!(),
    }
    out.write("summary.json", &to_json(&summary))?;
    Ok(summary)
}

/// Monitor results that are undefined for the data (too few samples, not mean convex, flat)
/// become `None`; anything else is an error.
fn optional<T>(r: mcflab_core::Result<T>) -> CliResult<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(
            Error::TooFewSamples { .. }
            | Error::NotMeanConvex { .. }
            | Error::OutOfRange(_)
            | Error::EmptyTrajectory,
        ) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn record_classification(summary: &mut Summary, report: &MonitorReport) {
    if let Some(c) = report.classification {
        summary.classification_hint = Some(c.hint.as_str().into());
        summary.loglog_slope = Some(c.loglog_slope);
        summary.max_t_a2 = Some(c.max_t_a2);
    }
}

fn evolve_all(
    cfg: &ExperimentConfig,
    data: &InitialData,
    traj: &FlowTrajectory,
    out: &mut OutputDir,
    summary: &mut Summary,
) -> CliResult<()> {
    out.write("trajectory.csv", &trajectory_csv(traj))?;
    let mut series: Vec<Series> = Vec::new();
    let classifier = optional(type_classifier(traj, &cfg.monitors))?;
    if let Some(r) = &classifier {
        record_classification(summary, r);
        series.extend(r.series.iter().cloned());
    }
    let pinching = optional(pinching_check(traj, &cfg.monitors))?;
    if let Some(r) = &pinching {
        summary.pinching_margins = Some(r.margins.clone());
        series.extend(r.series.iter().cloned());
    }
    if let Some(r) = optional(noncollapse_preservation(traj, &cfg.monitors))? {
        summary.delta_min_series_min = r.margin("delta_min");
        series.extend(r.series.iter().cloned());
    }
    let t_last = traj.last().map_or(0.0, |s| s.t());
    for &j in cfg.rescaling.j_list.iter().filter(|j| **j <= t_last) {
        let fit = optional(
            select_blowup_points(traj, j, cfg.rescaling.gamma)
                .and_then(|sel| rescale_flow(traj, &sel))
                .and_then(|rf| soliton_match(&rf, cfg.rescaling.match_radius)),
        );
        if let Ok(Some(m)) = fit {
            summary.soliton_fit = Some(SolitonFit {
                n: Some(m.speed),
                residual: m.residual,
            });
        }
    }
    out.write("monitors.csv", &monitor_csv(&series))?;
    summary.checks = data_checks(cfg, data, traj, classifier.as_ref(), pinching.as_ref());
    Ok(())
}

fn classify(
    cfg: &ExperimentConfig,
    traj: &FlowTrajectory,
    out: &mut OutputDir,
    summary: &mut Summary,
) -> CliResult<()> {
    let report = type_classifier(traj, &cfg.monitors)?;
    record_classification(summary, &report);
    out.write("monitors.csv", &monitor_csv(&report.series))?;
    if let (Some(expected), Some(c)) = (expected_hint(&cfg.initial_data), report.classification) {
        summary.checks.insert(
            format!("hint_{expected}"),
            Check::flag(
                c.hint.as_str() == expected,
                c.loglog_slope,
                threshold(cfg, expected),
            ),
        );
    }
    Ok(())
}

fn threshold(cfg: &ExperimentConfig, hint: &str) -> f64 {
    if hint == "type_iii_consistent" {
        cfg.monitors.slope_type_iii
    } else {
        cfg.monitors.slope_type_iib
    }
}

/// Hint expected for data whose behaviour is known: curvature decaying fast enough for
/// `t |A|^2` to stay bounded, or staying away from zero so that it grows.
fn expected_hint(data: &InitialDataSpec) -> Option<&'static str> {
    match data {
        InitialDataSpec::PowerGraph { alpha, .. } if *alpha < 1.0 => Some("type_iii_consistent"),
        InitialDataSpec::PowerGraph { alpha, .. } if *alpha >= 2.0 => Some("type_iib_consistent"),
        InitialDataSpec::Translator { .. } => Some("type_iib_consistent"),
        InitialDataSpec::Expander { .. } | InitialDataSpec::Plane { .. } => {
            Some("type_iii_consistent")
        }
        _ => None,
    }
}

fn noncollapse(
    cfg: &ExperimentConfig,
    traj: &FlowTrajectory,
    out: &mut OutputDir,
    summary: &mut Summary,
) -> CliResult<()> {
    let report = noncollapse_preservation(traj, &cfg.monitors)?;
    let worst = report.margin("delta_min").unwrap_or(f64::NAN);
    summary.delta_min_series_min = Some(worst);
    let margin = report.margin("preservation").unwrap_or(f64::NAN);
    summary.checks.insert(
        "noncollapse_preserved".into(),
        Check::at_least(worst, worst - margin),
    );
    out.write("monitors.csv", &monitor_csv(&report.series))?;
    Ok(())
}

fn rescale(
    cfg: &ExperimentConfig,
    traj: &FlowTrajectory,
    out: &mut OutputDir,
    summary: &mut Summary,
) -> CliResult<()> {
    let mut rows: BTreeMap<&str, Series> = BTreeMap::new();
    let names = [
        "t_sel",
        "L",
        "effective_gamma",
        "base_curvature",
        "soliton_speed",
        "soliton_residual",
    ];
    for name in names {
        rows.insert(name, Series::new(name));
    }
    let mut residuals = Vec::new();
    for &j in &cfg.rescaling.j_list {
        let sel = select_blowup_points(traj, j, cfg.rescaling.gamma)?;
        let rflow = rescale_flow(traj, &sel)?;
        let m = soliton_match(&rflow, cfg.rescaling.match_radius)?;
        let slices = rflow
            .samples
            .iter()
            .map(|s| (s.t_prime, &s.profile, &s.geometry));
        out.write(&format!("rescaled_j{j}.csv"), &profiles_csv(slices))?;
        let base = rflow.base_curvature();
        let values = [
            sel.t_sel,
            sel.l,
            sel.effective_gamma,
            base,
            m.speed,
            m.residual,
        ];
        for (name, v) in names.iter().zip(values) {
            rows.get_mut(name).expect("series exists").push(j, v);
        }
        summary.checks.insert(
            format!("base_curvature_j{j}"),
            Check::at_most((base - 1.0).abs(), cfg.checks.base_curvature_tol),
        );
        residuals.push(m.residual);
        summary.soliton_fit = Some(SolitonFit {
            n: Some(m.speed),
            residual: m.residual,
        });
    }
    if residuals.len() > 1 {
        let rises = residuals.windows(2).filter(|w| !(w[1] <= w[0])).count();
        summary.checks.insert(
            "soliton_residual_nonincreasing".into(),
            Check::at_most(rises as f64, 0.0),
        );
    }
    out.write("monitors.csv", &monitor_csv(names.iter().map(|n| &rows[n])))?;
    Ok(())
}

fn soliton(cfg: &ExperimentConfig, out: &mut OutputDir) -> CliResult<Summary> {
    let options = OdeOptions::default();
    let sol = match cfg.initial_data {
        InitialDataSpec::Translator { speed } => {
            translator_profile(speed, cfg.n, cfg.r_max, cfg.h, &options)?
        }
        InitialDataSpec::Expander { c, slope } => expander_profile(
            c,
            cfg.n,
            slope,
            cfg.r_max,
            cfg.h,
            &options,
            &ShootingOptions::default(),
        )?,
        ref other => {
            return Err(CliError::Config(format!(
                "soliton needs initial_data.kind translator or expander, not {}",
                other.kind()
            )))
        }
    };
    let geometry = mcflab_core::geometry_at(&sol.profile);
    out.write(
        "profile.csv",
        &profiles_csv([(0.0, &sol.profile, &geometry)]),
    )?;
    let mut shooting = Series::new("shooting_slope");
    for (u0, slope) in &sol.shooting_trace {
        shooting.push(*u0, *slope);
    }
    out.write("monitors.csv", &monitor_csv([&shooting]))?;

    let mut summary = Summary::new(config_echo(cfg));
    let speed = match cfg.initial_data {
        InitialDataSpec::Translator { speed } => Some(speed),
        _ => None,
    };
    summary.soliton_fit = Some(SolitonFit {
        n: speed,
        residual: sol.residual_max,
    });
    summary.checks.insert(
        "certified".into(),
        Check::at_most(sol.residual_max, options.certification_tol),
    );
    if let Some(speed) = speed {
        summary.checks.insert(
            "translation_residual".into(),
            Check::at_most(
                translation_residual(&sol.profile, speed),
                cfg.checks.steadiness_tol,
            ),
        );
    }
    out.write("summary.json", &to_json(&summary))?;
    Ok(summary)
}

/// Acceptance checks attached to the initial data of a full run.
fn data_checks(
    cfg: &ExperimentConfig,
    data: &InitialData,
    traj: &FlowTrajectory,
    classifier: Option<&MonitorReport>,
    pinching: Option<&MonitorReport>,
) -> BTreeMap<String, Check> {
    let mut checks = BTreeMap::new();
    let (Some(first), Some(last)) = (traj.first(), traj.last()) else {
        return checks;
    };
    match data {
        InitialData::Translator { speed } => {
            let shift = speed * (last.t() - first.t());
            let err = deviation(&last.profile, |i| first.profile.u()[i] + shift, None);
            checks.insert(
                "translator_steadiness".into(),
                Check::at_most(err, cfg.checks.steadiness_tol),
            );
        }
        InitialData::Expander { c, .. } => {
            let lambda = (2.0 * c * (last.t() - first.t()) + 1.0).sqrt();
            let radius = cfg.checks.self_similarity_radius.unwrap_or(cfg.r_max / 3.0);
            let grid = *last.profile.grid();
            let err = deviation(
                &last.profile,
                |i| lambda * first.profile.interpolate(grid.r(i) / lambda),
                Some(grid.nearest(radius)),
            );
            checks.insert(
                "expander_self_similarity".into(),
                Check::at_most(err, cfg.checks.self_similarity_tol),
            );
        }
        InitialData::Plane { .. } => {
            let worst = traj
                .samples
                .iter()
                .map(|s| s.geometry.max_a2())
                .fold(0.0, f64::max);
            checks.insert("curvature_zero".into(), Check::at_most(worst.sqrt(), 1e-12));
        }
        InitialData::PowerGraph { alpha, .. } => {
            checks = table_row_checks(cfg, *alpha, traj, classifier, pinching);
        }
        InitialData::Tabulated { .. } => {}
    }
    checks
}

/// `max |u_i - exact(i)| / max(1, |exact(i)|)` over nodes up to `last` (all nodes if `None`).
fn deviation(profile: &GraphProfile, exact: impl Fn(usize) -> f64, last: Option<usize>) -> f64 {
    let end = last.map_or(profile.len(), |k| k + 1);
    (0..end)
        .map(|i| {
            let e = exact(i);
            (profile.u()[i] - e).abs() / e.abs().max(1.0)
        })
        .fold(0.0, f64::max)
}

/// `(t, |A|(0, t))` from the trend window start onwards.
fn axis_window(cfg: &ExperimentConfig, traj: &FlowTrajectory) -> Vec<(f64, f64)> {
    let t_last = traj.last().map_or(0.0, |s| s.t());
    let start = cfg.checks.trend_start.min(t_last / 5.0);
    traj.samples
        .iter()
        .filter(|s| s.t() >= start - 1e-12)
        .map(|s| (s.t(), s.geometry.norm_a(0)))
        .collect()
}

/// Trend checks for the graph of `|y|^alpha`, one set per regime of the exponent.
fn table_row_checks(
    cfg: &ExperimentConfig,
    alpha: f64,
    traj: &FlowTrajectory,
    classifier: Option<&MonitorReport>,
    pinching: Option<&MonitorReport>,
) -> BTreeMap<String, Check> {
    let mut checks = BTreeMap::new();
    let axis = axis_window(cfg, traj);
    if axis.len() < 2 {
        return checks;
    }
    let classification = classifier.and_then(|r| r.classification);
    let n = traj.grid().map_or(cfg.n, |g| g.n()) as f64;
    if (alpha - 2.0).abs() < 1e-12 {
        let max_a = traj
            .samples
            .iter()
            .map(|s| s.geometry.max_a2().sqrt())
            .fold(0.0, f64::max);
        let floor = traj
            .samples
            .iter()
            .map(|s| s.geometry.norm_a(0))
            .fold(f64::INFINITY, f64::min);
        checks.insert(
            "max_A_bound".into(),
            Check::at_most(max_a, 2.0 * n * n * (1.0 + cfg.checks.bound_slack)),
        );
        checks.insert(
            "axis_A_floor".into(),
            Check::at_least(floor, cfg.checks.axis_floor),
        );
        if let Some(p) = pinching {
            let margin = p.series("two_n_w").map_or(f64::NAN, Series::min);
            let h_max = p.series("h_max").map_or(f64::NAN, Series::max);
            checks.insert(
                "pinching_two_n_w".into(),
                Check::at_least(margin, -cfg.monitors.pinching_tol * h_max),
            );
        }
    } else if alpha > 2.0 {
        let falls = axis.windows(2).filter(|w| !(w[1].1 > w[0].1)).count();
        checks.insert(
            "axis_A_increasing".into(),
            Check::at_most(falls as f64, 0.0),
        );
        if let Some(c) = classification {
            checks.insert(
                "type_iib_slope".into(),
                Check::at_least(c.loglog_slope, cfg.monitors.slope_type_iib),
            );
        }
    } else if alpha > 1.0 {
        let rises = axis.windows(2).filter(|w| !(w[1].1 < w[0].1)).count();
        let ratio = axis[axis.len() - 1].1 / axis[0].1;
        checks.insert(
            "axis_A_decreasing".into(),
            Check::at_most(rises as f64, 0.0),
        );
        checks.insert(
            "axis_A_decay".into(),
            Check::at_most(ratio, cfg.checks.decay_ratio),
        );
    } else if alpha < 1.0 {
        if let Some(r) = classifier {
            if let Some(t_a2) = r.series("t_max_A2") {
                let start = axis[0].0;
                let at_start = t_a2
                    .window(start - 1e-12, start + 1e-12)
                    .next()
                    .map_or(f64::NAN, |p| p.1);
                let late = t_a2
                    .window(start, f64::INFINITY)
                    .map(|p| p.1)
                    .fold(0.0, f64::max);
                checks.insert(
                    "t_max_A2_bounded".into(),
                    Check::at_most(late / at_start, cfg.monitors.bound_factor),
                );
            }
        }
        if let Some(c) = classification {
            checks.insert(
                "type_iii_hint".into(),
                Check::flag(
                    c.hint.as_str() == "type_iii_consistent",
                    c.loglog_slope,
                    cfg.monitors.slope_type_iii,
                ),
            );
        }
    }
    checks
}

/// Row of the power-graph suite; `status` is `ok` or the error that stopped the run.
#[derive(Debug, Clone, PartialEq)]
struct Table1Row {
    alpha: f64,
    status: Result<Summary, String>,
    axis: Vec<(f64, f64)>,
    max_a: f64,
    eps: f64,
}

fn row_config(cfg: &ExperimentConfig, alpha: f64) -> ExperimentConfig {
    let mut row = cfg.clone();
    row.initial_data = InitialDataSpec::PowerGraph {
        alpha,
        eps_smooth: None,
    };
    row.table1.alphas = vec![alpha];
    row
}

fn alpha_dir(alpha: f64) -> String {
    format!("alpha_{alpha}")
}

/// Runs one exponent and renders its files; nothing here touches the shared output directory.
fn table1_row(cfg: &ExperimentConfig, alpha: f64) -> (Table1Row, Vec<(String, String)>) {
    let row_cfg = row_config(cfg, alpha);
    let data = InitialData::PowerGraph {
        alpha,
        eps_smooth: None,
    };
    let eps = data.eps_smooth(cfg.h).unwrap_or(0.0);
    let mut row = Table1Row {
        alpha,
        status: Err(String::new()),
        axis: Vec::new(),
        max_a: f64::NAN,
        eps,
    };
    let run = || -> CliResult<(Summary, Vec<Series>, FlowTrajectory)> {
        let profile = data.profile(row_cfg.grid()?)?;
        let traj = evolve(&profile, &row_cfg.solver)?;
        let mut summary = Summary::new(config_echo(&row_cfg));
        summary.termination = Some(termination_name(&traj.termination).into());
        let classifier = optional(type_classifier(&traj, &row_cfg.monitors))?;
        let pinching = optional(pinching_check(&traj, &row_cfg.monitors))?;
        let mut series = Vec::new();
        let mut max_a = Series::new("max_A");
        for s in &traj.samples {
            max_a.push(s.t(), s.geometry.max_a2().sqrt());
        }
        series.push(max_a);
        if let Some(r) = &classifier {
            record_classification(&mut summary, r);
            series.extend(r.series.iter().cloned());
        }
        if let Some(p) = &pinching {
            summary.pinching_margins = Some(p.margins.clone());
        }
        summary.checks = data_checks(
            &row_cfg,
            &data,
            &traj,
            classifier.as_ref(),
            pinching.as_ref(),
        );
        Ok((summary, series, traj))
    };
    let mut files = Vec::new();
    let dir = alpha_dir(alpha);
    match run() {
        Ok((summary, series, traj)) => {
            row.axis = axis_window(&row_cfg, &traj);
            row.max_a = series[0].max();
            files.push((format!("{dir}/monitors.csv"), monitor_csv(&series)));
            files.push((format!("{dir}/summary.json"), to_json(&summary)));
            row.status = Ok(summary);
        }
        Err(e) => row.status = Err(e.to_string()),
    }
    (row, files)
}

fn table1(
    cfg: &ExperimentConfig,
    out: &mut OutputDir,
    manifest: &mut RunManifest,
) -> CliResult<Summary> {
    let rows: Vec<(Table1Row, Vec<(String, String)>)> = std::thread::scope(|scope| {
        let handles: Vec<_> = cfg
            .table1
            .alphas
            .iter()
            .map(|&alpha| scope.spawn(move || table1_row(cfg, alpha)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("table1 worker panicked"))
            .collect()
    });

    let mut summary = Summary::new(config_echo(cfg));
    let mut table = String::from(
        "alpha,eps_smooth,termination,classification_hint,loglog_slope,max_tA2,A_axis_start,\
         A_axis_end,max_A,checks\n",
    );
    let mut errors = Vec::new();
    let mut terminations = Vec::new();
    for (row, files) in &rows {
        for (path, contents) in files {
            out.write(path, contents)?;
        }
        manifest.eps_smooth.insert(alpha_dir(row.alpha), row.eps);
        let dir = alpha_dir(row.alpha);
        match &row.status {
            Ok(s) => {
                for (name, c) in &s.checks {
                    summary.checks.insert(format!("{dir}.{name}"), *c);
                }
                let termination = s.termination.clone().unwrap_or_default();
                if termination != "reached_t_end" {
                    terminations.push(format!("{dir}: {termination}"));
                }
                let failed = s.failed_checks().len();
                let (a0, a1) = match (row.axis.first(), row.axis.last()) {
                    (Some(a), Some(b)) => (a.1, b.1),
                    _ => (f64::NAN, f64::NAN),
                };
                table.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{}\n",
                    row.alpha,
                    num(row.eps),
                    termination,
                    s.classification_hint.as_deref().unwrap_or(""),
                    s.loglog_slope.map_or(String::new(), num),
                    s.max_t_a2.map_or(String::new(), num),
                    num(a0),
                    num(a1),
                    num(row.max_a),
                    if failed == 0 {
                        "pass".to_string()
                    } else {
                        format!("fail:{failed}")
                    },
                ));
            }
            Err(e) => {
                errors.push(format!("{dir}: {e}"));
                table.push_str(&format!("{},{},error,,,,,,,\n", row.alpha, num(row.eps)));
            }
        }
    }
    out.write("table1.csv", &table)?;
    summary.termination = Some(if terminations.is_empty() && errors.is_empty() {
        "reached_t_end".into()
    } else {
        terminations
            .into_iter()
            .chain(errors.iter().cloned())
            .collect::<Vec<_>>()
            .join("; ")
    });
    out.write("summary.json", &to_json(&summary))?;
    if !errors.is_empty() {
        return Err(CliError::Numerical(errors.join("; ")));
    }
    Ok(summary)
}

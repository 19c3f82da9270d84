use crate::error::{Error, Result};
use crate::flow::FlowTrajectory;
use crate::geometry;

use super::{MonitorConfig, MonitorReport, Series};

/// Residual of `(d_t - Δ) W = |A|^2 W`, with `d_t` following the normal motion, at samples that
/// have neighbours on both sides. Nodes within `boundary_nodes` of the outer edge are skipped.
pub fn w_evolution_residual(
    traj: &FlowTrajectory,
    config: &MonitorConfig,
) -> Result<MonitorReport> {
    if traj.len() < 3 {
        return Err(Error::TooFewSamples {
            needed: 3,
            got: traj.len(),
        });
    }
    let mut report = MonitorReport::new("w_evolution_residual", config);
    let mut residual = Series::new("w_residual_max");
    let mut argmax = Series::new("w_residual_argmax_r");
    for k in 1..traj.len() - 1 {
        let sample = &traj.samples[k];
        let dt_w = traj.normal_time_derivative(k, |s| s.geometry.w.clone())?;
        let g = &sample.geometry;
        let lap = geometry::laplace_beltrami_radial(&sample.profile, &g.w)?;
        let inner = g.len().saturating_sub(config.boundary_nodes);
        let (worst, at) = (0..inner)
            .map(|i| ((dt_w[i] - lap[i] - g.a2[i] * g.w[i]).abs(), i))
            .fold((0.0, 0), |acc, v| if v.0 > acc.0 { v } else { acc });
        residual.push(sample.t(), worst);
        argmax.push(sample.t(), sample.profile.grid().r(at));
    }
    report
        .margins
        .insert("max_residual".into(), -residual.max());
    report.series.push(residual);
    report.series.push(argmax);
    Ok(report)
}

/// `max_p |d_s^l H| / H^{l+1}` per sample for `l = 1` or `2` (meridian arc-length derivatives),
/// over nodes with `H` above the floor.
pub fn gradient_ratio(
    traj: &FlowTrajectory,
    l: usize,
    config: &MonitorConfig,
) -> Result<MonitorReport> {
    if !(l == 1 || l == 2) {
        return Err(Error::InvalidConfig(format!(
            "gradient order l = {l} must be 1 or 2"
        )));
    }
    if traj.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let mut report = MonitorReport::new("gradient_ratio", config);
    let mut series = Series::new(format!("grad{l}_ratio_max"));
    let mut masked = 0;
    for s in &traj.samples {
        let h = &s.geometry.h;
        let mut d = geometry::arc_length_derivative(&s.profile, h)?;
        if l == 2 {
            d = geometry::arc_length_derivative(&s.profile, &d)?;
        }
        let inner = h.len().saturating_sub(config.boundary_nodes);
        let mut worst: f64 = 0.0;
        for i in 0..inner {
            if h[i] > config.h_floor {
                worst = worst.max(d[i].abs() / h[i].powi(l as i32 + 1));
            } else {
                masked += 1;
            }
        }
        series.push(s.t(), worst);
    }
    report.masked_nodes = masked;
    report.margins.insert("max_ratio".into(), series.max());
    report.series.push(series);
    Ok(report)
}

//! Rescalings of a computed flow.
//!
//! * Expander normalization `x -> x / sqrt(2t + 1)`, `s = log(2t + 1) / 2`, whose fixed points
//!   are the self-expanders `H = <X, nu>`.
//! * Essential blow-up sequence: for a window `[0, j]` pick `(P_j, t_j)` maximizing
//!   `t (j - t) H^2`, set `L_j = |H|(P_j, t_j)` and look at `L_j (M_{t_j + t / L_j^2} - x(P_j, t_j))`
//!   for `t` in `[alpha_j, Omega_j] = [-t_j L_j^2, (j - t_j) L_j^2]`.
//! * The Harnack quantity of a convex flow, minimized over tangent vectors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{self, FlowTrajectory};
use crate::geometry::{self, GeometrySample};
use crate::grid::{GraphProfile, RadialGrid};

/// Curvatures at or below this value are treated as flat for the Harnack infimum.
pub const KAPPA_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedState {
    /// Normalized time `log(2t + 1) / 2`.
    pub s: f64,
    /// `sqrt(2t + 1)`.
    pub scale: f64,
    /// `u / scale` on the grid `r / scale`; its time stamp is `s`.
    pub profile: GraphProfile,
    pub source_t: f64,
}

pub fn normalize(profile: &GraphProfile) -> Result<NormalizedState> {
    let t = profile.t();
    let scale = (2.0 * t + 1.0).sqrt();
    let s = 0.5 * (2.0 * t + 1.0).ln();
    let grid = profile.grid().scaled(1.0 / scale)?;
    let u = profile.u().iter().map(|v| v / scale).collect();
    Ok(NormalizedState {
        s,
        scale,
        profile: GraphProfile::new(grid, u, s)?,
        source_t: t,
    })
}

pub fn denormalize(state: &NormalizedState) -> Result<GraphProfile> {
    let grid = state.profile.grid().scaled(state.scale)?;
    let u = state.profile.u().iter().map(|v| v * state.scale).collect();
    GraphProfile::new(grid, u, state.source_t)
}

impl NormalizedState {
    /// The normalized profile interpolated onto another grid (e.g. to compare different `s`).
    pub fn resample_onto(&self, grid: RadialGrid) -> Result<GraphProfile> {
        GraphProfile::from_fn(grid, self.s, |rho| self.profile.interpolate(rho))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupSelection {
    pub j: f64,
    pub gamma: f64,
    /// Best score over every other stored sample divided by the best score over all samples.
    pub effective_gamma: f64,
    pub sample_index: usize,
    pub p_index: usize,
    pub t_sel: f64,
    /// `|H|` at the selected point.
    pub l: f64,
    pub score: f64,
    pub alpha_j: f64,
    pub omega_j: f64,
}

/// First maximizer of `t (j - t) H^2` over a table of `H^2` rows, scanning `t` then `r`.
/// Only rows with `0 < t < j` take part. Returns `(row, node, score)`.
pub fn argmax_blowup_score(times: &[f64], h2: &[Vec<f64>], j: f64) -> Option<(usize, usize, f64)> {
    let mut best: Option<(usize, usize, f64)> = None;
    for (k, (&t, row)) in times.iter().zip(h2).enumerate() {
        if !(t > 0.0 && t < j) {
            continue;
        }
        let weight = t * (j - t);
        for (p, &v) in row.iter().enumerate() {
            let score = weight * v;
            if best.is_none_or(|b| score > b.2) {
                best = Some((k, p, score));
            }
        }
    }
    best
}

pub fn select_blowup_points(traj: &FlowTrajectory, j: f64, gamma: f64) -> Result<BlowupSelection> {
    if traj.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "gamma = {gamma} must lie in (0, 1]"
        )));
    }
    let t_last = traj.last().map_or(0.0, |s| s.t());
    if !(j > 0.0 && j <= t_last * (1.0 + 1e-12)) {
        return Err(Error::OutOfRange(format!(
            "window j = {j} is not covered by the trajectory (last sample at t = {t_last})"
        )));
    }
    let times = traj.times();
    let h2: Vec<Vec<f64>> = traj
        .samples
        .iter()
        .map(|s| s.geometry.h.iter().map(|h| h * h).collect())
        .collect();
    let (k, p, score) = argmax_blowup_score(&times, &h2, j)
        .ok_or_else(|| Error::OutOfRange(format!("no sample strictly inside (0, {j})")))?;

    let even_times: Vec<f64> = times.iter().step_by(2).copied().collect();
    let even_h2: Vec<Vec<f64>> = h2.iter().step_by(2).cloned().collect();
    let coarse = argmax_blowup_score(&even_times, &even_h2, j).map_or(0.0, |b| b.2);
    let effective_gamma = if score > 0.0 { coarse / score } else { 1.0 };

    let t_sel = times[k];
    let l = traj.samples[k].geometry.h[p].abs();
    Ok(BlowupSelection {
        j,
        gamma,
        effective_gamma,
        sample_index: k,
        p_index: p,
        t_sel,
        l,
        score,
        alpha_j: -t_sel * l * l,
        omega_j: (j - t_sel) * l * l,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescaledSlice {
    /// Rescaled time `L^2 (t - t_sel)`.
    pub t_prime: f64,
    /// Heights `L (u - u(P, t_sel))` on the grid `L r`; time stamp is the source time.
    pub profile: GraphProfile,
    pub geometry: GeometrySample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescaledFlow {
    pub selection: BlowupSelection,
    /// Radial coordinate of the base point after scaling (the profile keeps its axis).
    pub base_radius: f64,
    pub samples: Vec<RescaledSlice>,
    /// Index into `samples` of the `t' = 0` slice.
    pub zero_index: usize,
}

impl RescaledFlow {
    pub fn zero_slice(&self) -> &RescaledSlice {
        &self.samples[self.zero_index]
    }

    /// Mean curvature of the `t' = 0` slice at the base point.
    pub fn base_curvature(&self) -> f64 {
        self.zero_slice().geometry.h[self.selection.p_index]
    }
}

pub fn rescale_flow(traj: &FlowTrajectory, sel: &BlowupSelection) -> Result<RescaledFlow> {
    let base = traj
        .samples
        .get(sel.sample_index)
        .ok_or_else(|| Error::OutOfRange("selection refers to a missing sample".into()))?;
    if (base.t() - sel.t_sel).abs() > 1e-12 || sel.p_index >= base.profile.len() {
        return Err(Error::OutOfRange(
            "selection does not match the trajectory".into(),
        ));
    }
    if !(sel.l > 0.0) {
        return Err(Error::OutOfRange(
            "selected point has zero curvature".into(),
        ));
    }
    let l = sel.l;
    let u_base = base.profile.u()[sel.p_index];
    let base_radius = l * base.profile.grid().r(sel.p_index);
    let mut samples = Vec::new();
    let mut zero_index = 0;
    for (k, s) in traj.samples.iter().enumerate() {
        let t_prime = l * l * (s.t() - sel.t_sel);
        if t_prime < sel.alpha_j - 1e-12 || t_prime > sel.omega_j + 1e-12 {
            continue;
        }
        if k == sel.sample_index {
            zero_index = samples.len();
        }
        let grid = s.profile.grid().scaled(l)?;
        let u = s.profile.u().iter().map(|v| l * (v - u_base)).collect();
        let profile = GraphProfile::new(grid, u, s.t())?;
        let geometry = geometry::geometry_at(&profile);
        samples.push(RescaledSlice {
            t_prime,
            profile,
            geometry,
        });
    }
    Ok(RescaledFlow {
        selection: *sel,
        base_radius,
        samples,
        zero_index,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolitonMatch {
    /// Least-squares translation speed (mean vertical velocity over the window).
    pub speed: f64,
    /// Max deviation of the vertical velocity from `speed` over the window.
    pub residual: f64,
    pub nodes: usize,
    /// Velocity vanishes identically: a hyperplane, matched by `speed = 0`.
    pub flat: bool,
}

/// Fits a translator to the nodes of `profile` with `|r - center| <= radius`.
pub fn fit_translator(profile: &GraphProfile, center: f64, radius: f64) -> Result<SolitonMatch> {
    let v = flow::rhs(profile)?;
    let grid = profile.grid();
    let window: Vec<f64> = (0..grid.len())
        .filter(|&i| (grid.r(i) - center).abs() <= radius)
        .map(|i| v[i])
        .collect();
    if window.is_empty() {
        return Err(Error::OutOfRange(format!(
            "no nodes within {radius} of r = {center}"
        )));
    }
    let scale = window.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if scale < 1e-12 {
        return Ok(SolitonMatch {
            speed: 0.0,
            residual: 0.0,
            nodes: window.len(),
            flat: true,
        });
    }
    let speed = window.iter().sum::<f64>() / window.len() as f64;
    let residual = window.iter().map(|x| (x - speed).abs()).fold(0.0, f64::max);
    Ok(SolitonMatch {
        speed,
        residual,
        nodes: window.len(),
        flat: false,
    })
}

/// Translator fit of the `t' = 0` slice within rescaled distance `radius` of the base point.
pub fn soliton_match(rflow: &RescaledFlow, radius: f64) -> Result<SolitonMatch> {
    fit_translator(&rflow.zero_slice().profile, rflow.base_radius, radius)
}

/// Selection, rescaling and translator fit for each window in `j_list`.
pub fn soliton_match_trend(
    traj: &FlowTrajectory,
    j_list: &[f64],
    gamma: f64,
    radius: f64,
) -> Result<Vec<(BlowupSelection, SolitonMatch)>> {
    j_list
        .iter()
        .map(|&j| {
            let sel = select_blowup_points(traj, j, gamma)?;
            let rflow = rescale_flow(traj, &sel)?;
            Ok((sel, soliton_match(&rflow, radius)?))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnackSample {
    pub t: f64,
    /// `None` where `kappa1 <= KAPPA_FLOOR` or on the outer boundary node.
    pub values: Vec<Option<f64>>,
    pub masked: usize,
}

impl HarnackSample {
    pub fn min(&self) -> Option<f64> {
        self.values.iter().flatten().copied().reduce(f64::min)
    }

    pub fn max_abs(&self) -> Option<f64> {
        self.values
            .iter()
            .flatten()
            .map(|v| v.abs())
            .reduce(f64::max)
    }
}

/// `inf_V Z = d_t H + [H / 2t] - (d_s H)^2 / kappa1` at sample `k`, with `d_t` following the
/// normal motion and `d_s` the meridian arc-length derivative. The infimum is attained at
/// `V = -h^{-1} grad H`, which is meridional on a rotationally symmetric surface.
pub fn harnack_min(
    traj: &FlowTrajectory,
    k: usize,
    include_time_term: bool,
) -> Result<HarnackSample> {
    let dt_h = traj.normal_time_derivative(k, |s| s.geometry.h.clone())?;
    let sample = &traj.samples[k];
    let t = sample.t();
    if include_time_term && !(t > 0.0) {
        return Err(Error::OutOfRange("the H/2t term needs t > 0".into()));
    }
    let geo = &sample.geometry;
    let ds_h = geometry::arc_length_derivative(&sample.profile, &geo.h)?;
    let last = geo.len() - 1;
    let mut masked = 0;
    let values = (0..geo.len())
        .map(|i| {
            if i == last || !(geo.kappa1[i] > KAPPA_FLOOR) {
                masked += 1;
                return None;
            }
            let time_term = if include_time_term {
                geo.h[i] / (2.0 * t)
            } else {
                0.0
            };
            Some(dt_h[i] + time_term - ds_h[i] * ds_h[i] / geo.kappa1[i])
        })
        .collect();
    Ok(HarnackSample { t, values, masked })
}

/// `sqrt(t) H` along normal trajectories changes at rate `sqrt(t) (d_t H + H / 2t)`; returns that
/// rate per node at sample `k` (non-negative on convex flows by the Harnack inequality with `V = 0`).
pub fn sqrt_t_h_rate(traj: &FlowTrajectory, k: usize) -> Result<Vec<f64>> {
    let dt_h = traj.normal_time_derivative(k, |s| s.geometry.h.clone())?;
    let sample = &traj.samples[k];
    let t = sample.t();
    if !(t > 0.0) {
        return Err(Error::OutOfRange("sqrt(t) H needs t > 0".into()));
    }
    Ok(dt_h
        .iter()
        .zip(&sample.geometry.h)
        .map(|(d, h)| t.sqrt() * (d + h / (2.0 * t)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> (Vec<f64>, Vec<Vec<f64>>) {
        (
            vec![1.0, 2.0, 3.0],
            vec![vec![0.5, 0.2], vec![0.3, 0.4], vec![0.6, 0.1]],
        )
    }

    #[test]
    fn synthetic_table_selection() {
        let (t, h2) = table();
        let (k, p, score) = argmax_blowup_score(&t, &h2, 4.0).unwrap();
        assert_eq!((k, p), (2, 0));
        assert!((score - 1.8).abs() < 1e-12);
    }

    #[test]
    fn constant_curvature_selects_vertex_of_parabola() {
        let t: Vec<f64> = (0..=40).map(|k| k as f64 * 0.1).collect();
        let h2 = vec![vec![1.0; 3]; t.len()];
        let (k, p, _) = argmax_blowup_score(&t, &h2, 4.0).unwrap();
        assert!((t[k] - 2.0).abs() < 1e-12);
        assert_eq!(p, 0);
    }

    #[test]
    fn normalization_arithmetic() {
        let g = RadialGrid::new(2, 0.1, 20).unwrap();
        let p = GraphProfile::from_fn(g, 1.5, |r| r * r + 1.0).unwrap();
        let s = normalize(&p).unwrap();
        assert!((s.scale - 2.0).abs() < 1e-15);
        assert!((s.s - std::f64::consts::LN_2).abs() < 1e-12);
        assert!((s.profile.h() - 0.05).abs() < 1e-15);
        assert!((s.profile.u()[10] - 0.5 * (1.0 + 1.0)).abs() < 1e-12);
        let back = denormalize(&s).unwrap();
        assert_eq!(back.t(), 1.5);
        for (a, b) in back.u().iter().zip(p.u()) {
            assert!((a - b).abs() < 1e-14);
        }
        let zero = normalize(&p.clone().with_time(0.0)).unwrap();
        assert_eq!(zero.s, 0.0);
        assert_eq!(zero.profile.u(), p.u());
    }

    #[test]
    fn plane_fit_is_flagged_flat() {
        let g = RadialGrid::new(2, 0.1, 20).unwrap();
        let p = GraphProfile::from_fn(g, 0.0, |_| 3.0).unwrap();
        let m = fit_translator(&p, 0.0, 1.0).unwrap();
        assert!(m.flat);
        assert_eq!((m.speed, m.residual), (0.0, 0.0));
    }
}

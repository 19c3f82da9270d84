//! Largest interior and exterior tangent balls in the meridian plane.
//!
//! A ball of radius `rho` touching the surface at `x` from the side the normal points to has
//! centre `X(x) + rho nu(x)`; it excludes every other point `y` exactly when
//! `rho <= |X(y) - X(x)|^2 / (2 <X(y) - X(x), nu(x)>)` for all `y` with a positive denominator.
//! The exterior ball is the same with `nu` reversed. Points of the reflected branch `(-r, u)` are
//! included as obstacles so that balls centred on the axis are seen.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::FlowTrajectory;
use crate::geometry;
use crate::grid::GraphProfile;

use super::{MonitorConfig, MonitorReport, Series};

/// A point of a meridian curve with the data the tangent-ball search needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    /// `(r, x_{n+1})` in the meridian half-plane (r may be negative on reflected branches).
    pub x: [f64; 2],
    /// Unit normal, pointing to the interior side.
    pub normal: [f64; 2],
    pub h: f64,
    /// Largest positive principal curvature (0 if none).
    pub kappa_in: f64,
    /// Largest negative principal curvature in absolute value (0 if none).
    pub kappa_out: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoncollapseSample {
    /// `f64::INFINITY` marks an unbounded radius.
    pub r_interior: Vec<f64>,
    pub r_exterior: Vec<f64>,
    pub delta_in: Vec<f64>,
    pub delta_ext: Vec<f64>,
    /// Minimum over nodes of the finite `delta_in`, `delta_ext` values.
    pub global_min_delta: f64,
    pub unbounded_interior: usize,
    pub unbounded_exterior: usize,
}

/// Tangent-ball radii at every point of `curve`; `obstacles` are additional points that the balls
/// must avoid.
pub fn noncollapse_curve(curve: &[CurvePoint], obstacles: &[[f64; 2]]) -> NoncollapseSample {
    let all: Vec<[f64; 2]> = curve
        .iter()
        .map(|c| c.x)
        .chain(obstacles.iter().copied())
        .collect();
    let mut out = NoncollapseSample {
        r_interior: Vec::with_capacity(curve.len()),
        r_exterior: Vec::with_capacity(curve.len()),
        delta_in: Vec::with_capacity(curve.len()),
        delta_ext: Vec::with_capacity(curve.len()),
        global_min_delta: f64::INFINITY,
        unbounded_interior: 0,
        unbounded_exterior: 0,
    };
    for (i, p) in curve.iter().enumerate() {
        let mut r_in = cap(p.kappa_in);
        let mut r_out = cap(p.kappa_out);
        for (k, y) in all.iter().enumerate() {
            if k == i {
                continue;
            }
            let d = [y[0] - p.x[0], y[1] - p.x[1]];
            let d2 = d[0] * d[0] + d[1] * d[1];
            if d2 == 0.0 {
                continue;
            }
            let along = d[0] * p.normal[0] + d[1] * p.normal[1];
            if along > 0.0 {
                r_in = r_in.min(d2 / (2.0 * along));
            } else if along < 0.0 {
                r_out = r_out.min(d2 / (-2.0 * along));
            }
        }
        let (d_in, d_out) = (p.h * r_in, p.h * r_out);
        if r_in.is_finite() {
            out.global_min_delta = out.global_min_delta.min(d_in);
        } else {
            out.unbounded_interior += 1;
        }
        if r_out.is_finite() {
            out.global_min_delta = out.global_min_delta.min(d_out);
        } else {
            out.unbounded_exterior += 1;
        }
        out.r_interior.push(r_in);
        out.r_exterior.push(r_out);
        out.delta_in.push(d_in);
        out.delta_ext.push(d_out);
    }
    out
}

fn cap(kappa: f64) -> f64 {
    if kappa > 0.0 {
        1.0 / kappa
    } else {
        f64::INFINITY
    }
}

/// Tangent-ball radii of a mean-convex profile, searching the meridian plane including the
/// reflected branch.
pub fn noncollapse_delta(profile: &GraphProfile) -> Result<NoncollapseSample> {
    let g = geometry::geometry_at(profile);
    if let Some(index) = g.h.iter().position(|h| !(*h > 0.0)) {
        return Err(Error::NotMeanConvex {
            index,
            h: g.h[index],
        });
    }
    let (du, _) = geometry::derivatives(profile);
    let grid = profile.grid();
    let curve: Vec<CurvePoint> = (0..grid.len())
        .map(|i| {
            let s = (1.0 + du[i] * du[i]).sqrt();
            let (k1, k2) = (g.kappa1[i], g.kappa2[i]);
            CurvePoint {
                x: [grid.r(i), profile.u()[i]],
                normal: [-du[i] / s, 1.0 / s],
                h: g.h[i],
                kappa_in: k1.max(k2).max(0.0),
                kappa_out: (-k1.min(k2)).max(0.0),
            }
        })
        .collect();
    let mirror: Vec<[f64; 2]> = (1..grid.len())
        .map(|i| [-grid.r(i), profile.u()[i]])
        .collect();
    Ok(noncollapse_curve(&curve, &mirror))
}

/// Meridian of the round sphere of the given radius centred at the origin, as a closed polyline
/// with `points` vertices; `H = n / radius`.
pub fn sphere_meridian(n: usize, radius: f64, points: usize) -> Vec<CurvePoint> {
    (0..points)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / points as f64;
            let (s, c) = theta.sin_cos();
            CurvePoint {
                x: [radius * c, radius * s],
                normal: [-c, -s],
                h: n as f64 / radius,
                kappa_in: 1.0 / radius,
                kappa_out: 0.0,
            }
        })
        .collect()
}

/// Series of the global noncollapsing constant; passes when it never drops more than
/// `noncollapse_tol` below its initial (or configured) value.
pub fn noncollapse_preservation(
    traj: &FlowTrajectory,
    config: &MonitorConfig,
) -> Result<MonitorReport> {
    if traj.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let mut report = MonitorReport::new("noncollapse_preservation", config);
    let mut series = Series::new("delta_min");
    for s in &traj.samples {
        series.push(s.t(), noncollapse_delta(&s.profile)?.global_min_delta);
    }
    let delta0 = config.delta0.unwrap_or(series.values[0]);
    let worst = series.min();
    report.margins.insert("delta_min".into(), worst);
    report.margins.insert(
        "preservation".into(),
        worst - (delta0 - config.noncollapse_tol),
    );
    report.passed = Some(worst >= delta0 - config.noncollapse_tol);
    report.series.push(series);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RadialGrid;

    #[test]
    fn sphere_polyline_is_n_noncollapsed() {
        for n in [2usize, 3] {
            let s = noncollapse_curve(&sphere_meridian(n, 1.5, 400), &[]);
            assert_eq!(s.unbounded_exterior, 400);
            assert!((s.global_min_delta - n as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn paraboloid_interior_radius_at_vertex() {
        let grid = RadialGrid::new(2, 0.05, 201).unwrap();
        let p = GraphProfile::from_fn(grid, 0.0, |r| r * r).unwrap();
        let s = noncollapse_delta(&p).unwrap();
        assert!((s.r_interior[0] - 0.5).abs() < 1e-9);
        assert!(s.r_exterior.iter().all(|r| r.is_infinite()));
        assert!((s.delta_in[0] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn plane_is_rejected() {
        let grid = RadialGrid::new(2, 0.1, 20).unwrap();
        let p = GraphProfile::from_fn(grid, 0.0, |_| 1.0).unwrap();
        assert!(matches!(
            noncollapse_delta(&p),
            Err(Error::NotMeanConvex { index: 0, .. })
        ));
    }

    #[test]
    fn dent_bounds_the_exterior_ball() {
        // A concave kink: the exterior ball at the kink is limited by its neighbours.
        let pts = [[-1.0, 1.0], [0.0, 0.0], [1.0, 1.0]];
        let curve = [CurvePoint {
            x: [0.0, 0.0],
            normal: [0.0, -1.0],
            h: 1.0,
            kappa_in: 0.0,
            kappa_out: 0.0,
        }];
        let s = noncollapse_curve(&curve, &pts);
        assert!(s.r_interior[0].is_infinite());
        assert!((s.r_exterior[0] - 1.0).abs() < 1e-12);
    }
}

//! Rotationally symmetric translators and self-expanders.
//!
//! Both satisfy `u''/(1+u'^2) + (n-1) u'/r = F(r, u, u')` with `u'(0) = 0`:
//!
//! * translator with speed `N`: `F = N`, so the graph moves as `u + N t`;
//! * expander with constant `c`: `F = c (u - r u')`, i.e. `H = c <X, nu>`, so that
//!   `lambda E(r / lambda)`, `lambda = sqrt(2 c t + 1)`, solves the flow.
//!
//! The profiles are integrated as a first-order system in `(u, p = u')` with classical RK4 on
//! the grid cells, subdividing cells where the system is stiff. On the axis the equation closes
//! as `n u''(0) = F(0, u(0), 0)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow;
use crate::geometry;
use crate::grid::{GraphProfile, RadialGrid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SolitonKind {
    Translator { speed: f64 },
    Expander { c: f64, target_slope: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolitonProfile {
    pub kind: SolitonKind,
    pub profile: GraphProfile,
    /// `u'` carried by the integrator at every node.
    pub slope: Vec<f64>,
    /// Max ODE residual with sixth-order differences of the integrated slope (inner 90% of nodes).
    pub residual_max: f64,
    /// Limit of `u'/r` fitted as `a + b / r^2` over the outer quarter of the grid.
    pub asymptotic_slope_ratio: f64,
    /// `(u(0), u'(r_max))` pairs visited by the shooting method; empty for translators.
    pub shooting_trace: Vec<(f64, f64)>,
}

impl SolitonProfile {
    pub fn n(&self) -> usize {
        self.profile.n()
    }
}

/// Integration and certification settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeOptions {
    /// Minimum RK4 substeps per grid cell.
    pub substeps: usize,
    /// Largest `|dp'/dp| * dr` allowed for a substep.
    pub stiffness_limit: f64,
    /// Profiles whose `residual_max` exceeds this are rejected.
    pub certification_tol: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            substeps: 8,
            stiffness_limit: 0.5,
            certification_tol: 1e-6,
        }
    }
}

/// Shooting settings for the expander.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootingOptions {
    /// `u(0)` bracket, in units of `1/c`.
    pub bracket: (f64, f64),
    pub max_iterations: usize,
    pub slope_tol: f64,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self {
            bracket: (1e-3, 1e3),
            max_iterations: 60,
            slope_tol: 1e-3,
        }
    }
}

/// Right-hand side `F(r, u, p)` of the radial soliton equation.
#[derive(Debug, Clone, Copy)]
enum Forcing {
    Translator(f64),
    Expander(f64),
}

impl Forcing {
    fn eval(self, r: f64, u: f64, p: f64) -> f64 {
        match self {
            Forcing::Translator(speed) => speed,
            Forcing::Expander(c) => c * (u - r * p),
        }
    }

    /// `|d p'/d p|`, used to pick substeps.
    fn stiffness(self, n: f64, r: f64, p: f64) -> f64 {
        let g = 1.0 + p * p;
        let radial = if r > 0.0 { (n - 1.0) / r } else { 0.0 };
        let own = match self {
            Forcing::Translator(_) => 0.0,
            Forcing::Expander(c) => c * r,
        };
        g * (radial + own)
    }
}

/// `(u', p')` of the first-order system.
fn system(forcing: Forcing, n: f64, r: f64, u: f64, p: f64) -> (f64, f64) {
    let f = forcing.eval(r, u, p);
    if r == 0.0 {
        (p, f / n)
    } else {
        (p, (1.0 + p * p) * (f - (n - 1.0) * p / r))
    }
}

/// Integrates from `u(0) = u0`, `u'(0) = 0` over the grid. Returns `None` if the slope blows up.
fn integrate(
    grid: &RadialGrid,
    forcing: Forcing,
    u0: f64,
    options: &OdeOptions,
) -> Option<(Vec<f64>, Vec<f64>)> {
    let n = grid.n() as f64;
    let h = grid.h();
    let m = grid.len();
    let mut u = Vec::with_capacity(m);
    let mut p = Vec::with_capacity(m);
    let (mut uc, mut pc) = (u0, 0.0);
    u.push(uc);
    p.push(pc);
    for i in 0..m - 1 {
        let r0 = grid.r(i);
        let stiff = forcing.stiffness(n, r0.max(h), pc) * h;
        let k = options
            .substeps
            .max((stiff / options.stiffness_limit).ceil() as usize);
        let dr = h / k as f64;
        for s in 0..k {
            let r = r0 + s as f64 * dr;
            let (a1, b1) = system(forcing, n, r, uc, pc);
            let (a2, b2) = system(
                forcing,
                n,
                r + 0.5 * dr,
                uc + 0.5 * dr * a1,
                pc + 0.5 * dr * b1,
            );
            let (a3, b3) = system(
                forcing,
                n,
                r + 0.5 * dr,
                uc + 0.5 * dr * a2,
                pc + 0.5 * dr * b2,
            );
            let (a4, b4) = system(forcing, n, r + dr, uc + dr * a3, pc + dr * b3);
            uc += dr / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
            pc += dr / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        }
        if !(uc.is_finite() && pc.is_finite()) || pc.abs() > 1e12 {
            return None;
        }
        u.push(uc);
        p.push(pc);
    }
    Some((u, p))
}

/// Sixth-order derivative of the slope `p`, using its odd extension `p(-r) = -p(r)` on the axis
/// and one-sided fourth-order stencils in the last three nodes.
fn slope_derivative(h: f64, p: &[f64]) -> Vec<f64> {
    let m = p.len();
    let at = |k: isize| {
        if k < 0 {
            -p[(-k) as usize]
        } else {
            p[k as usize]
        }
    };
    (0..m)
        .map(|i| {
            if i + 3 < m {
                let k = i as isize;
                (-at(k - 3) + 9.0 * at(k - 2) - 45.0 * at(k - 1) + 45.0 * at(k + 1)
                    - 9.0 * at(k + 2)
                    + at(k + 3))
                    / (60.0 * h)
            } else {
                (25.0 * p[i] - 48.0 * p[i - 1] + 36.0 * p[i - 2] - 16.0 * p[i - 3] + 3.0 * p[i - 4])
                    / (12.0 * h)
            }
        })
        .collect()
}

/// Max over the inner 90% of nodes of the ODE residual evaluated on `(u, p)` with `p'` taken by
/// sixth-order differences.
fn ode_residual(grid: &RadialGrid, forcing: Forcing, u: &[f64], p: &[f64]) -> f64 {
    let n = grid.n() as f64;
    let dp = slope_derivative(grid.h(), p);
    let inner = ((grid.len() - 1) as f64 * 0.9).floor() as usize;
    (0..=inner)
        .map(|i| {
            let r = grid.r(i);
            let lhs = if i == 0 {
                n * dp[0]
            } else {
                dp[i] / (1.0 + p[i] * p[i]) + (n - 1.0) * p[i] / r
            };
            (lhs - forcing.eval(r, u[i], p[i])).abs()
        })
        .fold(0.0, f64::max)
}

/// Least-squares fit of `u'/r = a + b r^{-2}` over the outer quarter; returns `a`.
fn fit_slope_ratio(grid: &RadialGrid, p: &[f64]) -> f64 {
    let m = grid.len();
    let start = (3 * (m - 1)) / 4;
    let (mut s11, mut s12, mut s22, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (i, pi) in p.iter().enumerate().take(m).skip(start.max(1)) {
        let r = grid.r(i);
        let x = 1.0 / (r * r);
        let y = pi / r;
        s11 += 1.0;
        s12 += x;
        s22 += x * x;
        y1 += y;
        y2 += x * y;
    }
    let det = s11 * s22 - s12 * s12;
    if det.abs() < 1e-300 {
        return y1 / s11;
    }
    (y1 * s22 - y2 * s12) / det
}

/// Bowl soliton moving with speed `speed` in the `e_{n+1}` direction, normalized by `u(0) = 0`.
pub fn translator_profile(
    speed: f64,
    n: usize,
    r_max: f64,
    h: f64,
    options: &OdeOptions,
) -> Result<SolitonProfile> {
    if !(speed.is_finite() && speed > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "translator speed N = {speed} must be > 0"
        )));
    }
    let grid = RadialGrid::covering(n, h, r_max)?;
    let forcing = Forcing::Translator(speed);
    let (u, p) = integrate(&grid, forcing, 0.0, options)
        .ok_or_else(|| Error::OutOfRange("translator integration overflowed".into()))?;
    for i in 0..grid.len() {
        let (_, d2u) = system(forcing, n as f64, grid.r(i), u[i], p[i]);
        if !(d2u > 0.0) || (i > 0 && !(p[i] > 0.0)) {
            return Err(Error::NotConvex { index: i, d2u });
        }
    }
    finish(
        grid,
        SolitonKind::Translator { speed },
        forcing,
        u,
        p,
        Vec::new(),
        options,
    )
}

fn finish(
    grid: RadialGrid,
    kind: SolitonKind,
    forcing: Forcing,
    u: Vec<f64>,
    p: Vec<f64>,
    shooting_trace: Vec<(f64, f64)>,
    options: &OdeOptions,
) -> Result<SolitonProfile> {
    let residual_max = ode_residual(&grid, forcing, &u, &p);
    if !(residual_max <= options.certification_tol) {
        return Err(Error::ResidualTooLarge {
            residual: residual_max,
            tol: options.certification_tol,
        });
    }
    let asymptotic_slope_ratio = fit_slope_ratio(&grid, &p);
    Ok(SolitonProfile {
        kind,
        profile: GraphProfile::new(grid, u, 0.0)?,
        slope: p,
        residual_max,
        asymptotic_slope_ratio,
        shooting_trace,
    })
}

/// Self-expander `H = c <X, nu>` whose slope at `r_max` equals `target_slope`, found by
/// bisection on `u(0)`.
pub fn expander_profile(
    c: f64,
    n: usize,
    target_slope: f64,
    r_max: f64,
    h: f64,
    options: &OdeOptions,
    shooting: &ShootingOptions,
) -> Result<SolitonProfile> {
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "expander constant c = {c} must be > 0"
        )));
    }
    if !(target_slope.is_finite() && target_slope > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "target slope b = {target_slope} must be > 0"
        )));
    }
    let grid = RadialGrid::covering(n, h, r_max)?;
    let forcing = Forcing::Expander(c);
    let outer_slope = |u0: f64| -> f64 {
        integrate(&grid, forcing, u0, options).map_or(f64::INFINITY, |(_, p)| p[p.len() - 1])
    };
    let mut trace = Vec::new();
    let (mut lo, mut hi) = (shooting.bracket.0 / c, shooting.bracket.1 / c);
    let (s_lo, s_hi) = (outer_slope(lo), outer_slope(hi));
    trace.push((lo, s_lo));
    trace.push((hi, s_hi));
    if !(s_lo < target_slope && s_hi > target_slope) {
        return Err(Error::BracketNotFound {
            lo,
            hi,
            target: target_slope,
        });
    }
    let mut best = (lo, s_lo);
    for _ in 0..shooting.max_iterations {
        // Bisect in log space: the bracket spans several decades.
        let mid = (lo * hi).sqrt();
        let s = outer_slope(mid);
        trace.push((mid, s));
        if (s - target_slope).abs() < (best.1 - target_slope).abs() {
            best = (mid, s);
        }
        if s < target_slope {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi / lo - 1.0) < 1e-15 {
            break;
        }
    }
    if !((best.1 - target_slope).abs() <= shooting.slope_tol) {
        return Err(Error::BracketNotFound {
            lo,
            hi,
            target: target_slope,
        });
    }
    let (u, p) = integrate(&grid, forcing, best.0, options)
        .ok_or_else(|| Error::OutOfRange("expander integration overflowed".into()))?;
    trace.sort_by(|a, b| a.0.total_cmp(&b.0));
    finish(
        grid,
        SolitonKind::Expander { c, target_slope },
        forcing,
        u,
        p,
        trace,
        options,
    )
}

/// Max over nodes of `|u''/(1+u'^2) + (n-1)u'/r - N|` with the solver's stencils.
pub fn translation_residual(profile: &GraphProfile, speed: f64) -> f64 {
    translation_residual_within(profile, speed, profile.len())
}

/// As [`translation_residual`] over the first `nodes` nodes.
pub fn translation_residual_within(profile: &GraphProfile, speed: f64, nodes: usize) -> f64 {
    let v = flow::rhs(profile).unwrap_or_else(|_| vec![f64::NAN; profile.len()]);
    v.iter()
        .take(nodes)
        .map(|x| (x - speed).abs())
        .fold(0.0, f64::max)
}

/// Max over nodes of `|u''/(1+u'^2) + (n-1)u'/r - c (u - r u')|`.
pub fn expander_residual(profile: &GraphProfile, c: f64) -> f64 {
    expander_residual_within(profile, c, profile.len())
}

pub fn expander_residual_within(profile: &GraphProfile, c: f64, nodes: usize) -> f64 {
    let v = flow::rhs(profile).unwrap_or_else(|_| vec![f64::NAN; profile.len()]);
    let (du, _) = geometry::derivatives(profile);
    let grid = profile.grid();
    (0..nodes.min(profile.len()))
        .map(|i| (v[i] - c * (profile.u()[i] - grid.r(i) * du[i])).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn translator_axis_closure_and_convexity() {
        let s = translator_profile(1.0, 2, 20.0, 0.05, &OdeOptions::default()).unwrap();
        let (_, d2u0) = system(Forcing::Translator(1.0), 2.0, 0.0, 0.0, 0.0);
        assert_eq!(d2u0, 0.5);
        assert_eq!(s.profile.u()[0], 0.0);
        assert!(s.profile.u().windows(2).all(|w| w[1] > w[0]));
        assert!(s.residual_max <= 1e-6, "residual {}", s.residual_max);
        assert!((s.asymptotic_slope_ratio - 1.0).abs() <= 0.05);
    }

    #[test]
    fn translator_slope_ratio_for_higher_dimension() {
        let s = translator_profile(1.0, 3, 20.0, 0.05, &OdeOptions::default()).unwrap();
        assert!(
            (s.asymptotic_slope_ratio - 0.5).abs() <= 0.025,
            "{}",
            s.asymptotic_slope_ratio
        );
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let o = OdeOptions::default();
        assert!(translator_profile(0.0, 2, 10.0, 0.05, &o).is_err());
        assert!(translator_profile(1.0, 1, 10.0, 0.05, &o).is_err());
        let s = ShootingOptions::default();
        assert!(expander_profile(-1.0, 2, 1.0, 10.0, 0.05, &o, &s).is_err());
        assert!(expander_profile(1.0, 2, 0.0, 10.0, 0.05, &o, &s).is_err());
    }

    #[test]
    fn expander_target_outside_bracket_is_reported() {
        let shooting = ShootingOptions {
            bracket: (1e-3, 1e-2),
            ..Default::default()
        };
        let err = expander_profile(1.0, 2, 1.0, 10.0, 0.05, &OdeOptions::default(), &shooting);
        assert!(matches!(err, Err(Error::BracketNotFound { .. })), "{err:?}");
    }

    #[test]
    fn residual_of_plane() {
        let g = RadialGrid::new(2, 0.1, 30).unwrap();
        let plane = GraphProfile::from_fn(g, 0.0, |_| 0.0).unwrap();
        assert_eq!(translation_residual(&plane, 1.0), 1.0);
        let lifted = GraphProfile::from_fn(g, 0.0, |_| 0.7).unwrap();
        assert!((expander_residual(&lifted, 1.0) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn residual_of_paraboloid_on_axis() {
        let g = RadialGrid::new(2, 0.05, 41).unwrap();
        let p = GraphProfile::from_fn(g, 0.0, |r| r * r).unwrap();
        // rhs = 2/(1+4r^2) + 2 on the interior, 4 on the axis; the largest gap to N = 2 is 2.
        assert!((translation_residual(&p, 2.0) - 2.0).abs() < 1e-9);
    }
}

//! Pointwise geometry of a rotationally symmetric graph.
//!
//! The unit normal points upward, `nu = (-u' e_r + e_{n+1}) / sqrt(1 + u'^2)`, and the fixed
//! direction for `W = <nu, omega>`-type quantities is `omega = -e_{n+1}` up to the sign that makes
//! `W = (1 + u'^2)^{-1/2} > 0`. Principal curvatures:
//!
//! * meridian `kappa1 = u'' / (1 + u'^2)^{3/2}`,
//! * rotational `kappa2 = u' / (r (1 + u'^2)^{1/2})` with multiplicity `n - 1`.
//!
//! On the axis `u'/r` is replaced by its limit `u''(0)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GraphProfile, RadialGrid};

/// Per-node geometric scalars of a profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometrySample {
    pub w: Vec<f64>,
    pub h: Vec<f64>,
    pub kappa1: Vec<f64>,
    pub kappa2: Vec<f64>,
    pub a2: Vec<f64>,
}

impl GeometrySample {
    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    pub fn max_a2(&self) -> f64 {
        self.a2.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_h(&self) -> f64 {
        self.h.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `|A|` at node `i`.
    pub fn norm_a(&self, i: usize) -> f64 {
        self.a2[i].sqrt()
    }
}

/// First and second radial derivatives of a grid function.
///
/// Centered second-order stencils in the interior, the even extension `f(-r) = f(r)` at the
/// axis (`f'(0) = 0`, `f''(0) = 2 (f_1 - f_0) / h^2`) and second-order one-sided stencils at the
/// outer node.
pub fn grid_derivatives(grid: &RadialGrid, f: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = grid.len();
    if f.len() != m {
        return Err(Error::LengthMismatch {
            expected: m,
            got: f.len(),
        });
    }
    let h = grid.h();
    let mut d1 = vec![0.0; m];
    let mut d2 = vec![0.0; m];
    d2[0] = 2.0 * (f[1] - f[0]) / (h * h);
    for i in 1..m - 1 {
        d1[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
        d2[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / (h * h);
    }
    let k = m - 1;
    d1[k] = (3.0 * f[k] - 4.0 * f[k - 1] + f[k - 2]) / (2.0 * h);
    d2[k] = (2.0 * f[k] - 5.0 * f[k - 1] + 4.0 * f[k - 2] - f[k - 3]) / (h * h);
    Ok((d1, d2))
}

/// `(u', u'')` of a profile; see [`grid_derivatives`] for the stencils.
pub fn derivatives(profile: &GraphProfile) -> (Vec<f64>, Vec<f64>) {
    grid_derivatives(profile.grid(), profile.u()).expect("profile length matches its grid")
}

/// `u'/r`, closed on the axis by `u''(0)`.
pub(crate) fn slope_over_r(grid: &RadialGrid, du: &[f64], d2u: &[f64]) -> Vec<f64> {
    (0..grid.len())
        .map(|i| if i == 0 { d2u[0] } else { du[i] / grid.r(i) })
        .collect()
}

/// Geometry from precomputed derivatives.
pub fn geometry_from_derivatives(grid: &RadialGrid, du: &[f64], d2u: &[f64]) -> GeometrySample {
    let n = grid.n() as f64;
    let m = grid.len();
    let q = slope_over_r(grid, du, d2u);
    let mut out = GeometrySample {
        w: Vec::with_capacity(m),
        h: Vec::with_capacity(m),
        kappa1: Vec::with_capacity(m),
        kappa2: Vec::with_capacity(m),
        a2: Vec::with_capacity(m),
    };
    for i in 0..m {
        let g = 1.0 + du[i] * du[i];
        let sg = g.sqrt();
        let k1 = d2u[i] / (g * sg);
        let k2 = q[i] / sg;
        out.w.push(1.0 / sg);
        out.kappa1.push(k1);
        out.kappa2.push(k2);
        out.h.push(k1 + (n - 1.0) * k2);
        out.a2.push(k1 * k1 + (n - 1.0) * k2 * k2);
    }
    out
}

pub fn geometry_at(profile: &GraphProfile) -> GeometrySample {
    let (du, d2u) = derivatives(profile);
    geometry_from_derivatives(profile.grid(), &du, &d2u)
}

/// Laplace-Beltrami operator of the induced metric applied to a radial function `f`:
///
/// `Δf = f''/(1+u'^2) + (n-1) f' / (r (1+u'^2)) - u' u'' f' / (1+u'^2)^2`,
///
/// with `Δf(0) = n f''(0)` on the axis.
pub fn laplace_beltrami_radial(profile: &GraphProfile, f: &[f64]) -> Result<Vec<f64>> {
    let grid = profile.grid();
    let (df, d2f) = grid_derivatives(grid, f)?;
    let (du, d2u) = derivatives(profile);
    let n = grid.n() as f64;
    Ok((0..grid.len())
        .map(|i| {
            if i == 0 {
                return n * d2f[0] / (1.0 + du[0] * du[0]);
            }
            let g = 1.0 + du[i] * du[i];
            d2f[i] / g + (n - 1.0) * df[i] / (grid.r(i) * g) - du[i] * d2u[i] * df[i] / (g * g)
        })
        .collect())
}

/// Derivative of `f` with respect to arc length along the meridian, `f' / sqrt(1 + u'^2)`.
pub fn arc_length_derivative(profile: &GraphProfile, f: &[f64]) -> Result<Vec<f64>> {
    let (df, _) = grid_derivatives(profile.grid(), f)?;
    let (du, _) = derivatives(profile);
    Ok(df
        .iter()
        .zip(&du)
        .map(|(d, p)| d / (1.0 + p * p).sqrt())
        .collect())
}

/// Support function `<X, nu> = (u - r u') / sqrt(1 + u'^2)` per node.
pub fn support_function(profile: &GraphProfile) -> Vec<f64> {
    let (du, _) = derivatives(profile);
    let grid = profile.grid();
    profile
        .u()
        .iter()
        .zip(&du)
        .enumerate()
        .map(|(i, (u, p))| (u - grid.r(i) * p) / (1.0 + p * p).sqrt())
        .collect()
}

/// Index of the first non-finite entry, if any.
pub(crate) fn first_non_finite(values: &[f64]) -> Option<usize> {
    values.iter().position(|v| !v.is_finite())
}

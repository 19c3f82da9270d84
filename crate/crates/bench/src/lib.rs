//! Fixtures shared by the benchmarks.

use mcflab_core::{GraphProfile, PowerGraph, RadialGrid};

/// `|y|^alpha` on the default rig (`n = 2`, `r_max = 30`, `h = 0.05`).
pub fn power_profile(alpha: f64) -> GraphProfile {
    let grid = RadialGrid::covering(2, 0.05, 30.0).expect("valid grid");
    let eps = PowerGraph::default_eps(alpha, grid.h());
    PowerGraph::new(alpha, eps)
        .and_then(|p| p.profile(grid))
        .expect("valid power graph")
}

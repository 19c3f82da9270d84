use mcflab_core::flow::{self, step_with_dt};
use mcflab_core::geometry;
use mcflab_core::solitons::{translator_profile, OdeOptions};
use mcflab_core::{
    evolve, GraphProfile, OuterBoundary, PowerGraph, RadialGrid, Sampling, SolverConfig,
    Termination,
};
use proptest::prelude::*;

fn grid(h: f64, r_max: f64) -> RadialGrid {
    RadialGrid::covering(2, h, r_max).unwrap()
}

fn config(t_end: f64, interval: f64) -> SolverConfig {
    SolverConfig::default()
        .with_t_end(t_end)
        .with_sampling(Sampling::Interval(interval))
}

#[test]
fn plane_is_stationary() {
    let p = GraphProfile::from_fn(grid(0.1, 5.0), 0.0, |_| 3.0).unwrap();
    let next = step_with_dt(&p, 0.1, OuterBoundary::OneSided).unwrap();
    assert_eq!(next.u(), p.u());
    let traj = evolve(&p, &config(1.0, 0.25)).unwrap();
    assert_eq!(traj.termination, Termination::ReachedTEnd);
    assert_eq!(traj.times(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    assert!(traj.samples.iter().all(|s| s.profile.u() == p.u()));
}

#[test]
fn paraboloid_step_size_and_axis_speed() {
    let p = GraphProfile::from_fn(grid(0.05, 30.0), 0.0, |r| r * r).unwrap();
    let (_, dt) = flow::step(&p, &SolverConfig::default()).unwrap();
    assert!((dt - 0.0005).abs() < 1e-15);
    let v = flow::rhs(&p).unwrap();
    assert!((v[0] - 4.0).abs() < 1e-10);
}

#[test]
fn step_is_halved_for_large_curvature() {
    let cfg = SolverConfig::default();
    let base = cfg.time_step(0.05, 0.0);
    assert_eq!(cfg.time_step(0.05, 0.1 / base * 1.5), base / 2.0);
    assert_eq!(cfg.time_step(0.05, 0.1 / base * 3.0), base / 4.0);
}

#[test]
fn translator_moves_up_by_one_step() {
    let sol = translator_profile(1.0, 2, 10.0, 0.05, &OdeOptions::default()).unwrap();
    let dt = 1e-3;
    let next = step_with_dt(&sol.profile, dt, OuterBoundary::OneSided).unwrap();
    let worst = next
        .u()
        .iter()
        .zip(sol.profile.u())
        .map(|(a, b)| (a - b - dt).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-3 * dt, "{worst}");
}

#[test]
fn invalid_configs_are_rejected() {
    let p = GraphProfile::from_fn(grid(0.1, 5.0), 0.0, |r| r * r).unwrap();
    let bad = [
        SolverConfig {
            cfl_safety: 0.0,
            ..Default::default()
        },
        SolverConfig {
            cfl_safety: 1.5,
            ..Default::default()
        },
        SolverConfig {
            t_end: -1.0,
            ..Default::default()
        },
        SolverConfig {
            max_steps: 0,
            ..Default::default()
        },
        SolverConfig {
            sampling: Sampling::Stride(0),
            ..Default::default()
        },
        SolverConfig {
            sampling: Sampling::Interval(0.0),
            ..Default::default()
        },
    ];
    for cfg in bad {
        assert!(evolve(&p, &cfg).is_err(), "{cfg:?}");
    }
}

#[test]
fn step_cap_and_stride_sampling() {
    let p = GraphProfile::from_fn(grid(0.1, 5.0), 0.0, |r| r * r).unwrap();
    let cfg = SolverConfig {
        max_steps: 25,
        sampling: Sampling::Stride(10),
        ..Default::default()
    };
    let traj = evolve(&p, &cfg).unwrap();
    assert_eq!(traj.termination, Termination::StepCap);
    assert_eq!(traj.stats.dt.len(), 25);
    // t = 0, steps 10 and 20, and the final state.
    assert_eq!(traj.len(), 4);
    let t = traj.times();
    assert!(t.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn growing_curvature_beyond_resolution_stops_the_run() {
    let p = PowerGraph::new(6.0, 0.0)
        .unwrap()
        .profile(grid(0.25, 5.0))
        .unwrap();
    let cfg = SolverConfig {
        t_end: 50.0,
        blowup_threshold: 0.05,
        ..Default::default()
    };
    let traj = evolve(&p, &cfg).unwrap();
    assert_eq!(traj.termination, Termination::BlowupUnresolved);
    let last = traj.last().unwrap();
    assert!(last.geometry.max_a2() * 0.25 * 0.25 > 0.05);
}

#[test]
fn paraboloid_and_its_lift_stay_ordered() {
    let g = grid(0.05, 30.0);
    let a = GraphProfile::from_fn(g, 0.0, |r| r * r).unwrap();
    let cfg = config(1.0, 0.1);
    let ta = evolve(&a, &cfg).unwrap();
    let tb = evolve(&a.shifted(1.0), &cfg).unwrap();
    for (sa, sb) in ta.samples.iter().zip(&tb.samples) {
        let gap = sa
            .profile
            .u()
            .iter()
            .zip(sb.profile.u())
            .map(|(x, y)| y - x)
            .fold(f64::INFINITY, f64::min);
        assert!(gap >= 1.0 - 1e-9, "t = {} gap {gap}", sa.t());
    }
}

#[test]
fn convexity_is_preserved() {
    for alpha in [2.0, 3.0, 1.5] {
        let g = grid(0.05, 10.0);
        let eps = PowerGraph::default_eps(alpha, g.h());
        let p = PowerGraph::new(alpha, eps).unwrap().profile(g).unwrap();
        let traj = evolve(&p, &config(0.5, 0.1)).unwrap();
        for s in &traj.samples {
            let (du, d2u) = geometry::derivatives(&s.profile);
            let inner = du.len() - 3;
            assert!(du[..inner].iter().all(|v| *v >= -1e-9), "alpha {alpha}");
            assert!(d2u[..inner].iter().all(|v| *v >= -1e-6), "alpha {alpha}");
        }
    }
}

#[test]
fn paraboloid_domain_doubling() {
    let cfg = SolverConfig::default().with_t_end(0.5);
    let report = flow::domain_sensitivity(&cfg, 2, 0.05, 30.0, |r| r * r, 5).unwrap();
    assert_eq!(report.times.len(), 6);
    assert!(report.max_discrepancy < 1e-3, "{}", report.max_discrepancy);
}

#[test]
fn plane_domain_doubling_is_exact() {
    let cfg = SolverConfig::default().with_t_end(0.2);
    let report = flow::domain_sensitivity(&cfg, 2, 0.1, 5.0, |_| 1.0, 2).unwrap();
    assert_eq!(report.max_discrepancy, 0.0);
}

#[test]
fn cubic_domain_discrepancy_shrinks_with_radius() {
    let cfg = SolverConfig::default().with_t_end(0.2);
    let d: Vec<f64> = [2.0, 4.0]
        .iter()
        .map(|r| {
            flow::domain_sensitivity(&cfg, 2, 0.05, *r, |r| r.powi(3), 4)
                .unwrap()
                .max_discrepancy
        })
        .collect();
    assert!(d.iter().all(|v| v.is_finite()));
    assert!(d[1] < d[0], "{d:?}");
}

/// Follows a marker moving with normal velocity `H nu` from node `i` of sample `k` to the
/// neighbouring sample times and differences `H` along its path.
fn marker_derivative(traj: &flow::FlowTrajectory, k: usize, i: usize) -> f64 {
    let field = |s: &flow::FlowSample, values: Vec<f64>| {
        GraphProfile::new(*s.profile.grid(), values, s.t()).unwrap()
    };
    let drift = |s: &flow::FlowSample| {
        let (du, _) = geometry::derivatives(&s.profile);
        let ut = flow::rhs(&s.profile).unwrap();
        let v: Vec<f64> = (0..du.len())
            .map(|i| -ut[i] * du[i] / (1.0 + du[i] * du[i]))
            .collect();
        field(s, v)
    };
    let here = &traj.samples[k];
    let r0 = here.profile.grid().r(i);
    let v0 = drift(here).interpolate(r0);
    let mut h_at = [0.0; 2];
    for (slot, kk) in [k - 1, k + 1].into_iter().enumerate() {
        let other = &traj.samples[kk];
        let dt = other.t() - here.t();
        let guess = r0 + dt * v0;
        let r = r0 + 0.5 * dt * (v0 + drift(other).interpolate(guess));
        h_at[slot] = field(other, other.geometry.h.clone()).interpolate(r);
    }
    (h_at[1] - h_at[0]) / (traj.samples[k + 1].t() - traj.samples[k - 1].t())
}

#[test]
fn normal_time_derivative_matches_marker_particles() {
    let g = grid(0.02, 8.0);
    let p = PowerGraph::new(3.0, 0.0).unwrap().profile(g).unwrap();
    let traj = evolve(&p, &config(0.6, 0.002)).unwrap();
    for k in [100, 200, 290] {
        let dh = traj
            .normal_time_derivative(k, |s| s.geometry.h.clone())
            .unwrap();
        for r in [0.5, 1.0, 2.0, 3.0] {
            let i = g.nearest(r);
            let oracle = marker_derivative(&traj, k, i);
            let tol = 2e-3 * oracle.abs().max(1.0);
            assert!(
                (dh[i] - oracle).abs() < tol,
                "k {k} r {r}: {} vs {oracle}",
                dh[i]
            );
            // The uncorrected graph-time derivative misses the oracle by far more.
            let (a, b) = (&traj.samples[k - 1], &traj.samples[k + 1]);
            let graph = (b.geometry.h[i] - a.geometry.h[i]) / (b.t() - a.t());
            assert!(
                (graph - oracle).abs() > 10.0 * tol,
                "k {k} r {r}: {graph} vs {oracle}"
            );
        }
    }
}

fn profiles() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.0f64..3.0, 0.0f64..1.0, 0.0f64..0.3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rhs_equals_vertical_speed_of_normal_motion((a, b, c) in profiles(), n in 2usize..5) {
        let g = RadialGrid::covering(n, 0.05, 4.0).unwrap();
        let p = GraphProfile::from_fn(g, 0.0, |r| a * r * r + b * r.powi(4) + c * (3.0 * r).cos()).unwrap();
        let v = flow::rhs(&p).unwrap();
        let (du, _) = geometry::derivatives(&p);
        let geo = geometry::geometry_at(&p);
        for i in 0..v.len() {
            let speed = (1.0 + du[i] * du[i]).sqrt() * geo.h[i];
            prop_assert!((v[i] - speed).abs() <= 1e-10 * geo.h[i].abs().max(1.0));
        }
    }

    #[test]
    fn interval_sampling_lands_on_marks(interval in 0.01f64..0.2) {
        let p = GraphProfile::from_fn(grid(0.1, 5.0), 0.0, |r| r * r).unwrap();
        let traj = evolve(&p, &config(0.5, interval)).unwrap();
        let t = traj.times();
        for (k, tk) in t.iter().enumerate().take(t.len() - 1) {
            prop_assert!((tk - k as f64 * interval).abs() < 1e-12);
        }
        prop_assert!((t[t.len() - 1] - 0.5).abs() < 1e-12);
        prop_assert!(t.windows(2).all(|w| w[1] > w[0]));
    }
}

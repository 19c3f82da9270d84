use mcflab_core::monitors::{
    comparison_check, eh_conditions, gradient_ratio, halfspace_check, noncollapse_curve,
    noncollapse_delta, noncollapse_preservation, pinching_check, sphere_meridian, type_classifier,
    w_evolution_residual,
};
use mcflab_core::solitons::{translator_profile, OdeOptions};
use mcflab_core::{
    evolve, ClassificationHint, FlowTrajectory, GraphProfile, MonitorConfig, PowerGraph,
    RadialGrid, Sampling, SolverConfig,
};
use proptest::prelude::*;

fn config(t_end: f64, interval: f64) -> SolverConfig {
    SolverConfig::default()
        .with_t_end(t_end)
        .with_sampling(Sampling::Interval(interval))
}

fn frozen(profile: &GraphProfile, samples: usize) -> FlowTrajectory {
    let profiles = (0..samples)
        .map(|k| profile.clone().with_time(0.1 * k as f64))
        .collect();
    FlowTrajectory::from_profiles(profiles).unwrap()
}

fn plane(h: f64, r_max: f64) -> GraphProfile {
    GraphProfile::from_fn(RadialGrid::covering(2, h, r_max).unwrap(), 0.0, |_| 0.0).unwrap()
}

fn translator_run(h: f64, t_end: f64, interval: f64) -> FlowTrajectory {
    let sol = translator_profile(1.0, 2, 20.0, h, &OdeOptions::default()).unwrap();
    evolve(&sol.profile, &config(t_end, interval)).unwrap()
}

#[test]
fn plane_classifies_as_type_iii() {
    let traj = evolve(&plane(0.1, 5.0), &config(1.0, 0.05)).unwrap();
    let report = type_classifier(&traj, &MonitorConfig::default()).unwrap();
    let c = report.classification.unwrap();
    assert_eq!(c.hint, ClassificationHint::TypeIiiConsistent);
    assert_eq!(c.max_t_a2, 0.0);
    assert!(report
        .series("t_max_A2")
        .unwrap()
        .values
        .iter()
        .all(|v| *v == 0.0));
}

#[test]
fn translator_classifies_as_type_iib() {
    let traj = translator_run(0.05, 2.0, 0.1);
    let c = type_classifier(&traj, &MonitorConfig::default())
        .unwrap()
        .classification
        .unwrap();
    assert_eq!(c.hint, ClassificationHint::TypeIibConsistent);
    assert!((c.loglog_slope - 1.0).abs() < 0.05, "{}", c.loglog_slope);
}

#[test]
fn classifier_needs_ten_positive_times() {
    let traj = frozen(&plane(0.1, 2.0), 10);
    assert!(type_classifier(&traj, &MonitorConfig::default()).is_err());
    let traj = frozen(&plane(0.1, 2.0), 11);
    assert!(type_classifier(&traj, &MonitorConfig::default()).is_ok());
}

#[test]
fn paraboloid_pinching_constants() {
    let g = RadialGrid::covering(2, 0.05, 30.0).unwrap();
    let p = GraphProfile::from_fn(g, 0.0, |r| r * r).unwrap();
    let report = pinching_check(&frozen(&p, 3), &MonitorConfig::default()).unwrap();
    let lo = report.series("w_over_h_min").unwrap().values[0];
    let hi = report.series("w_over_h_max").unwrap().values[0];
    assert!((lo - 0.25).abs() < 1e-12, "{lo}");
    assert!(hi < 0.5 && hi > 0.49, "{hi}");
    assert!(report.margin("lower_c1").unwrap() >= -1e-12);
    assert!(report.margin("upper_c2").unwrap() >= 0.0);
    // Equality H = 2nW on the axis.
    assert!(report.margin("two_n_w").unwrap().abs() < 1e-12);
    assert_eq!(report.passed, Some(true));
}

#[test]
fn plane_pinching_ratio_is_unbounded() {
    let report = pinching_check(&frozen(&plane(0.1, 3.0), 3), &MonitorConfig::default()).unwrap();
    assert_eq!(report.masked_nodes, 3 * 31);
    assert!(report.margin("lower_c1").unwrap() > 0.0);
    assert!(report.margin("upper_c2").unwrap() < 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pinching_verdict_is_scale_invariant(lambda in 0.2f64..5.0, a in 0.5f64..2.0) {
        let g = RadialGrid::covering(2, 0.1, 6.0).unwrap();
        let profiles: Vec<GraphProfile> = (0..4)
            .map(|k| GraphProfile::from_fn(g, 0.1 * k as f64, |r| a * r * r + 0.05 * k as f64 * r.powi(4)).unwrap())
            .collect();
        let scaled: Vec<GraphProfile> = profiles
            .iter()
            .map(|p| {
                let u = p.u().iter().map(|v| lambda * v).collect();
                GraphProfile::new(g.scaled(lambda).unwrap(), u, lambda * lambda * p.t()).unwrap()
            })
            .collect();
        let cfg = MonitorConfig::default();
        let a_rep = pinching_check(&FlowTrajectory::from_profiles(profiles).unwrap(), &cfg).unwrap();
        let b_rep = pinching_check(&FlowTrajectory::from_profiles(scaled).unwrap(), &cfg).unwrap();
        for name in ["w_over_h_min", "w_over_h_max"] {
            let (x, y) = (&a_rep.series(name).unwrap().values, &b_rep.series(name).unwrap().values);
            for (u, v) in x.iter().zip(y) {
                prop_assert!((u * lambda - v).abs() <= 1e-9 * v.abs().max(1.0));
            }
        }
    }

    #[test]
    fn sphere_noncollapsing_constant(n in 2usize..6, radius in 0.5f64..5.0, points in 64usize..256) {
        let s = noncollapse_curve(&sphere_meridian(n, radius, points), &[]);
        let h = 2.0 * std::f64::consts::PI * radius / points as f64;
        for d in &s.delta_in {
            prop_assert!((d - n as f64).abs() <= 2.0 * h * n as f64);
        }
        prop_assert_eq!(s.unbounded_exterior, points);
    }
}

#[test]
fn w_residual_vanishes_on_plane() {
    let traj = evolve(&plane(0.1, 5.0), &config(0.5, 0.1)).unwrap();
    let report = w_evolution_residual(&traj, &MonitorConfig::default()).unwrap();
    assert!(report.series("w_residual_max").unwrap().max() < 1e-12);
}

#[test]
fn w_residual_is_second_order_on_paraboloid() {
    let run = |h: f64| {
        let g = RadialGrid::covering(2, h, 10.0).unwrap();
        let p = GraphProfile::from_fn(g, 0.0, |r| r * r).unwrap();
        let traj = evolve(&p, &config(0.5, 0.01)).unwrap();
        let report = w_evolution_residual(&traj, &MonitorConfig::default()).unwrap();
        report
            .series("w_residual_max")
            .unwrap()
            .window(0.1, 0.5)
            .map(|p| p.1)
            .fold(0.0, f64::max)
    };
    let (coarse, fine) = (run(0.1), run(0.05));
    assert!(coarse / fine > 3.5, "{coarse} {fine}");
}

#[test]
fn gradient_ratio_of_sphere_cap_vanishes() {
    // Lower hemisphere of radius 2 over r <= 1.5: H is constant along the meridian, so the
    // ratio is pure discretization error. Differencing the O(h^2) error of H across the axis
    // stencil leaves O(h) next to the axis.
    let ratio = |h: f64| {
        let g = RadialGrid::covering(2, h, 1.5).unwrap();
        let cap = GraphProfile::from_fn(g, 0.0, |r| 2.0 - (4.0 - r * r).sqrt()).unwrap();
        let report = gradient_ratio(&frozen(&cap, 2), 1, &MonitorConfig::default()).unwrap();
        report.margin("max_ratio").unwrap()
    };
    let (coarse, fine) = (ratio(0.02), ratio(0.01));
    assert!(fine < 5e-4 && coarse / fine > 1.8, "{coarse} {fine}");
    let g = RadialGrid::covering(2, 0.1, 1.5).unwrap();
    let cap = GraphProfile::from_fn(g, 0.0, |r| 2.0 - (4.0 - r * r).sqrt()).unwrap();
    assert!(gradient_ratio(&frozen(&cap, 2), 3, &MonitorConfig::default()).is_err());
}

#[test]
fn translator_gradient_ratio_is_steady() {
    let traj = translator_run(0.05, 1.0, 0.1);
    for l in [1, 2] {
        let report = gradient_ratio(&traj, l, &MonitorConfig::default()).unwrap();
        let v = &report.series(&format!("grad{l}_ratio_max")).unwrap().values;
        let spread = v.iter().map(|x| (x - v[0]).abs()).fold(0.0, f64::max);
        assert!(v[0].is_finite() && spread < 1e-2 * v[0], "l {l}: {v:?}");
    }
}

#[test]
fn noncollapse_series_of_frozen_profile_is_constant() {
    let g = RadialGrid::covering(2, 0.1, 5.0).unwrap();
    let p = GraphProfile::from_fn(g, 0.0, |r| r * r + 0.1 * r.powi(4)).unwrap();
    let report = noncollapse_preservation(&frozen(&p, 4), &MonitorConfig::default()).unwrap();
    let v = &report.series("delta_min").unwrap().values;
    assert!(v.iter().all(|x| *x == v[0]));
    assert_eq!(report.passed, Some(true));
}

#[test]
fn translator_noncollapse_is_constant() {
    let traj = translator_run(0.1, 1.0, 0.25);
    let report = noncollapse_preservation(&traj, &MonitorConfig::default()).unwrap();
    let v = &report.series("delta_min").unwrap().values;
    let spread = v.iter().map(|x| (x - v[0]).abs()).fold(0.0, f64::max);
    assert!(spread < 1e-2, "{v:?}");
}

#[test]
fn noncollapse_rejects_plane() {
    assert!(noncollapse_delta(&plane(0.1, 2.0)).is_err());
}

#[test]
fn growth_conditions() {
    let cfg = MonitorConfig::default();
    let flat = eh_conditions(&plane(0.1, 5.0), &cfg);
    assert_eq!(flat.series("upsilon_max").unwrap().values[0], 1.0);
    assert_eq!(flat.series("growth_ratio_max").unwrap().values[0], 0.0);
    assert_eq!(flat.passed, Some(true));

    let g = RadialGrid::covering(2, 0.05, 30.0).unwrap();
    let bowl = GraphProfile::from_fn(g, 0.0, |r| r * r).unwrap();
    let r = eh_conditions(&bowl, &cfg);
    let upsilon = r.series("upsilon_max").unwrap().values[0];
    assert!((upsilon - (1.0f64 + 4.0 * 900.0).sqrt()).abs() < 1e-9);
    assert_eq!(r.series("upsilon_argmax_r").unwrap().values[0], 30.0);
    assert!(r.margin("linear_gradient").unwrap() < 0.0);

    let eps = PowerGraph::default_eps(0.5, 0.05);
    let root = PowerGraph::new(0.5, eps).unwrap().profile(g).unwrap();
    assert!(
        eh_conditions(&root, &cfg)
            .margin("linear_gradient")
            .unwrap()
            > 0.0
    );
}

#[test]
fn halfspace_cases() {
    let g = RadialGrid::covering(2, 0.1, 3.0).unwrap();
    let p = GraphProfile::from_fn(g, 0.0, |r| r * r).unwrap();
    let down = halfspace_check(&p, &[0.0, 0.0, -1.0]).unwrap();
    assert!(down.contained && down.margin == 1.0 && down.inf_u == 0.0);
    assert!(!halfspace_check(&p, &[1.0, 0.0, 0.0]).unwrap().contained);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let tilted = halfspace_check(&p, &[s, 0.0, s]).unwrap();
    assert!(tilted.contained && (tilted.margin - s).abs() < 1e-15);
    assert!(halfspace_check(&p, &[0.0, 1.0]).is_err());
    assert!(halfspace_check(&p, &[0.0, 0.0, 2.0]).is_err());
}

#[test]
fn comparison_of_paraboloid_and_lift() {
    let g = RadialGrid::covering(2, 0.05, 30.0).unwrap();
    let lower = GraphProfile::from_fn(g, 0.0, |r| r * r).unwrap();
    let cfg = config(1.0, 0.1);
    let a = evolve(&lower, &cfg).unwrap();
    let b = evolve(&lower.shifted(1.0), &cfg).unwrap();
    let report = comparison_check(&a, &b, &MonitorConfig::default()).unwrap();
    assert_eq!(report.passed, Some(true));
    assert!(report.margin("ordering").unwrap() >= 1.0 - 1e-9);

    let same = comparison_check(&a, &a, &MonitorConfig::default()).unwrap();
    assert!(same
        .series("max_u1_minus_u2")
        .unwrap()
        .values
        .iter()
        .all(|v| *v == 0.0));

    let other = evolve(
        &GraphProfile::from_fn(RadialGrid::covering(2, 0.1, 30.0).unwrap(), 0.0, |r| r * r)
            .unwrap(),
        &cfg,
    )
    .unwrap();
    assert!(comparison_check(&a, &other, &MonitorConfig::default()).is_err());
}

#[test]
fn monitors_are_deterministic() {
    let traj = translator_run(0.1, 0.5, 0.05);
    let cfg = MonitorConfig::default();
    assert_eq!(
        pinching_check(&traj, &cfg).unwrap(),
        pinching_check(&traj, &cfg).unwrap()
    );
    assert_eq!(
        noncollapse_preservation(&traj, &cfg).unwrap(),
        noncollapse_preservation(&traj, &cfg).unwrap()
    );
}

#[test]
fn invalid_monitor_config() {
    let bad = MonitorConfig {
        epsilon: 0.0,
        ..Default::default()
    };
    assert!(bad.validate().is_err());
    let bad = MonitorConfig {
        delta_growth: -1.0,
        ..Default::default()
    };
    assert!(bad.validate().is_err());
    assert!(MonitorConfig::default().validate().is_ok());
}

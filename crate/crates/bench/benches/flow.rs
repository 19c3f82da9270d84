use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use mcflab_bench::power_profile;
use mcflab_core::monitors::noncollapse_delta;
use mcflab_core::solitons::{translator_profile, OdeOptions};
use mcflab_core::{evolve, geometry_at, rhs, step, Sampling, SolverConfig};

fn pointwise(c: &mut Criterion) {
    let p = power_profile(2.0);
    c.bench_function("geometry_at/601", |b| b.iter(|| geometry_at(black_box(&p))));
    c.bench_function("rhs/601", |b| b.iter(|| rhs(black_box(&p)).unwrap()));
    let cfg = SolverConfig::default();
    c.bench_function("step/601", |b| {
        b.iter(|| step(black_box(&p), &cfg).unwrap())
    });
}

fn trajectories(c: &mut Criterion) {
    let mut group = c.benchmark_group("evolve");
    group.sample_size(10);
    let p = power_profile(3.0);
    let cfg = SolverConfig::default()
        .with_t_end(0.5)
        .with_sampling(Sampling::Interval(0.05));
    group.bench_function("alpha3_t0.5", |b| {
        b.iter(|| evolve(black_box(&p), &cfg).unwrap())
    });
    group.finish();
}

fn solitons_and_balls(c: &mut Criterion) {
    let options = OdeOptions::default();
    c.bench_function("translator_profile/r20", |b| {
        b.iter(|| translator_profile(1.0, 2, 20.0, 0.05, &options).unwrap())
    });
    let p = power_profile(2.0);
    let mut group = c.benchmark_group("noncollapse");
    group.sample_size(10);
    group.bench_function("paraboloid/601", |b| {
        b.iter(|| noncollapse_delta(black_box(&p)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, pointwise, trajectories, solitons_and_balls);
criterion_main!(benches);

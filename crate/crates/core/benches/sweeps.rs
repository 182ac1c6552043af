use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use tongues_core::orbits::{continue_in_x_independent, find_orbits, guess_grid, NewtonSettings};
use tongues_core::tongue::sweep_independent;
use tongues_core::{Execution, MapParams, TrigPoly};

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn sin_map(p: i64, q: u32) -> MapParams {
    MapParams::new(TrigPoly::sin_k(1, 1.0), p, q, 0.0, 0.0).unwrap()
}

fn profile(c: &mut Criterion) {
    let settings = NewtonSettings::default();
    let mut group = c.benchmark_group("profile_q3_grid192");
    let m = sin_map(1, 3);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| continue_in_x_independent(black_box(0.2), &m, 192, &settings, exec).unwrap())
        });
    }
    group.finish();
}

fn tongue_sweep(c: &mut Criterion) {
    let settings = NewtonSettings::default();
    let mut group = c.benchmark_group("sweep_q2_8eps");
    group.sample_size(10);
    let m = sin_map(1, 2);
    let eps: Vec<f64> = (1..=8).map(|i| 0.05 * i as f64).collect();
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| sweep_independent(&m, black_box(&eps), 64, &settings, exec).unwrap())
        });
    }
    group.finish();
}

fn multistart(c: &mut Criterion) {
    let settings = NewtonSettings::default();
    let mut group = c.benchmark_group("multistart_q5");
    let m = sin_map(2, 5).with_eps(0.3).with_delta(1e-4);
    let guesses = guess_grid(80, &[-0.1, 0.0, 0.1]);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| find_orbits(&m, black_box(&guesses), &settings, exec))
        });
    }
    group.finish();
}

criterion_group!(benches, profile, tongue_sweep, multistart);
criterion_main!(benches);

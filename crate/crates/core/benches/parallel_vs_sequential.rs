use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;
use sgm_core::fields::{theta_grid, theta_profile, Mode};
use sgm_core::scattering::Polarization;
use sgm_core::sgm_asymptotic::enumerate_many;
use sgm_core::Execution;
use std::hint::black_box;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn enumerate(c: &mut Criterion) {
    let ells: Vec<u32> = (400..=700).step_by(25).collect();
    let mut g = c.benchmark_group("enumerate_many");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| enumerate_many(Polarization::TE, black_box(&ells), 50.0, 1.8217, exec))
        });
    }
    g.finish();
}

fn profile(c: &mut Criterion) {
    let mode = Mode::new(Polarization::TE, 350, 345, 808.0, Complex64::new(1.8217, -1e-6), None).unwrap();
    let thetas = theta_grid(4001);
    let mut g = c.benchmark_group("theta_profile");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| theta_profile(&mode, black_box(20.0), 1.0, &thetas, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, enumerate, profile);
criterion_main!(benches);

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use jellium_bench::rectangular;
use jellium_core::epstein::{direct_w_sum, epstein_zeta, epstein_zeta_deriv0};
use jellium_core::jellium_finite::{hexagonal_patch, jellium_energy};
use jellium_core::optimize::{minimize_sphere, sphere_energy_and_gradient, OptimizerOptions};
use jellium_core::periodic::e_per_with_gradient;
use jellium_core::specfun::{hurwitz_zeta, upper_incomplete_gamma};
use jellium_core::{EwaldParams, Lattice, PointConfiguration, SphereConfiguration};

fn special_functions(c: &mut Criterion) {
    c.bench_function("upper_incomplete_gamma", |b| {
        b.iter(|| upper_incomplete_gamma(black_box(1.3), black_box(2.7)))
    });
    c.bench_function("hurwitz_zeta", |b| b.iter(|| hurwitz_zeta(black_box(2.5), black_box(0.3))));
}

fn epstein(c: &mut Criterion) {
    let p = EwaldParams::default();
    let tri = Lattice::triangular();
    let rect = rectangular(2.0);
    c.bench_function("epstein_zeta triangular s=3", |b| b.iter(|| epstein_zeta(&tri, black_box(3.0), &p)));
    c.bench_function("epstein_zeta_deriv0 rectangular", |b| {
        b.iter(|| epstein_zeta_deriv0(black_box(&rect), &p))
    });
    let mut slow = c.benchmark_group("cell-charge");
    slow.sample_size(10);
    slow.bench_function("direct_w_sum square s=1", |b| {
        let sq = Lattice::square(2).unwrap();
        b.iter(|| direct_w_sum(&sq, black_box(1.0), 1e-6))
    });
    slow.finish();
}

fn periodic(c: &mut Criterion) {
    let p = EwaldParams::default();
    let cfg = PointConfiguration::perfect_sublattice(&Lattice::triangular(), 6).unwrap();
    c.bench_function("e_per_with_gradient n=36", |b| b.iter(|| e_per_with_gradient(black_box(&cfg), &p)));
}

fn sphere(c: &mut Criterion) {
    let cfg = SphereConfiguration::random(200, 1).unwrap();
    c.bench_function("sphere gradient n=200", |b| {
        b.iter(|| sphere_energy_and_gradient(black_box(&cfg.points)))
    });
    let opts = OptimizerOptions {
        restarts: 1,
        record_trace: false,
        ..OptimizerOptions::default()
    };
    let mut g = c.benchmark_group("minimize");
    g.sample_size(10);
    g.bench_function("sphere n=30", |b| b.iter(|| minimize_sphere(black_box(30), &opts)));
    g.finish();
}

fn finite(c: &mut Criterion) {
    let (domain, points) = hexagonal_patch(2).unwrap();
    let mut g = c.benchmark_group("finite");
    g.sample_size(10);
    g.bench_function("jellium_energy 19 points", |b| {
        b.iter(|| jellium_energy(&domain, black_box(&points), 1e-8))
    });
    g.finish();
}

criterion_group!(benches, special_functions, epstein, periodic, sphere, finite);
criterion_main!(benches);

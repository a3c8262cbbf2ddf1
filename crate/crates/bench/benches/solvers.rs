use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use weyl_lab_bench::{flag, perturbed_flag};
use weyl_lab_core::linalg::{eigenvalues, log_abs_det, singular_values, DEFAULT_EIG_TOL};
use weyl_lab_core::quantize::{quantize_general, quantize_separable};
use weyl_lab_core::Symbol;

fn bench_quantize(c: &mut Criterion) {
    let p = Symbol::named("scottish-flag", 1).unwrap();
    let mut group = c.benchmark_group("quantize");
    for n in [64usize, 256] {
        group.bench_with_input(BenchmarkId::new("general", n), &n, |b, &n| {
            b.iter(|| quantize_general(black_box(&p), n).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("separable", n), &n, |b, &n| {
            b.iter(|| quantize_separable(black_box(&p), n).unwrap())
        });
    }
    group.finish();
}

fn bench_dense(c: &mut Criterion) {
    let mut group = c.benchmark_group("dense");
    group.sample_size(10);
    for n in [64usize, 128] {
        let a = perturbed_flag(n, 1e-8);
        group.bench_with_input(BenchmarkId::new("eigenvalues", n), &a, |b, a| {
            b.iter(|| eigenvalues(black_box(a), DEFAULT_EIG_TOL).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("singular_values", n), &a, |b, a| {
            b.iter(|| singular_values(black_box(a)).unwrap())
        });
        let f = flag(n);
        group.bench_with_input(BenchmarkId::new("log_abs_det", n), &f, |b, f| {
            b.iter(|| log_abs_det(black_box(f)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_quantize, bench_dense);
criterion_main!(benches);

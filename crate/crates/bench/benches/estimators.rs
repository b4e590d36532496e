use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use trawl::{estimate_trawl, lambda_n, psi_n, EstimatorMethod, TestFunction};
use trawl_bench::{sample_path, SIZES};

fn a_hat(c: &mut Criterion) {
    let mut group = c.benchmark_group("a_hat");
    for n in SIZES {
        let path = sample_path(n);
        group.throughput(Throughput::Elements(n as u64));
        group.bench_with_input(BenchmarkId::new("fft", n), &path, |b, p| {
            b.iter(|| estimate_trawl(black_box(p), EstimatorMethod::Fft).unwrap())
        });
        // quadratic; the largest size is slow enough to skip
        if n <= 1 << 12 {
            group.bench_with_input(BenchmarkId::new("naive", n), &path, |b, p| {
                b.iter(|| estimate_trawl(black_box(p), EstimatorMethod::Naive).unwrap())
            });
        }
    }
    group.finish();
}

fn functionals(c: &mut Criterion) {
    let n = 1 << 14;
    let est = estimate_trawl(&sample_path(n), EstimatorMethod::Fft).unwrap();
    let g = TestFunction::power(4.0).unwrap();
    c.bench_function("psi_lambda_power4", |b| {
        b.iter(|| {
            let t = black_box(1.0);
            psi_n(&est, &g, t).unwrap() + lambda_n(&est, &g, t).unwrap()
        })
    });
}

criterion_group!(benches, a_hat, functionals);
criterion_main!(benches);

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use trawl::{AvarKernel, TestFunction, TrawlSpec};

fn kernels(c: &mut Criterion) {
    let families = [
        ("exponential", TrawlSpec::exponential(1.0).unwrap()),
        ("power_law", TrawlSpec::power_law(3.0, 1.0).unwrap()),
        ("triangle", TrawlSpec::compact_triangle(1.0).unwrap()),
    ];
    let mut group = c.benchmark_group("sigma_a");
    for (label, trawl) in &families {
        let k = AvarKernel::new(*trawl, 1.0).unwrap();
        group.bench_function(*label, |b| {
            b.iter(|| k.sigma_a_matrix(black_box(0.3), black_box(0.7)).unwrap())
        });
    }
    group.finish();

    let k = AvarKernel::new(families[0].1, 1.0).unwrap();
    let g = TestFunction::Square;
    c.bench_function("limit_cov_psi_square", |b| {
        b.iter(|| k.limit_cov_psi(&g, black_box(1.0), black_box(0.5)).unwrap())
    });
}

criterion_group!(benches, kernels);
criterion_main!(benches);

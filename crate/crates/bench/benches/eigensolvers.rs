//! Dense symmetric and generalized eigensolver costs at the sizes the
//! extractors hit in practice.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use kmva::linalg::{eig_gen, eig_sym};
use kmva::SolverConfig;
use kmva_bench::gaussian;
use ndarray::Array2;
use std::hint::black_box;

fn spd(n: usize, seed: u64) -> Array2<f64> {
    let g = gaussian(n, n, seed);
    let mut s = g.t().dot(&g);
    for i in 0..n {
        s[(i, i)] += 1.0;
    }
    s
}

fn bench_eig(c: &mut Criterion) {
    let cfg = SolverConfig::default();
    let mut group = c.benchmark_group("eigensolvers");
    for &n in &[50usize, 150] {
        let a = spd(n, 7);
        let b = spd(n, 8);
        group.bench_with_input(BenchmarkId::new("sym-top5", n), &n, |bch, _| {
            bch.iter(|| eig_sym(black_box(&a), 5, &cfg).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("gen-top5", n), &n, |bch, _| {
            bch.iter(|| eig_gen(black_box(&a), &b, 5, &cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_eig);
criterion_main!(benches);

//! Sequential against rayon batch evaluation on two campaign workloads:
//! λ, μ over a batch of map pairs, and the Virasoro relation sweep.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;
use vircocycle::cocycle::{self, CocycleInstance};
use vircocycle::corpus;
use vircocycle::par;
use vircocycle::virasoro::{self, GradedPolySpace};
use vircocycle::welding::WeldOptions;
use vircocycle::C64;

fn cocycle_batch(c: &mut Criterion) {
    let pairs = corpus::map_pairs(corpus::DEFAULT_SEED, 8).unwrap();
    let opts = WeldOptions::default();
    let job = |p: &corpus::MapPair| {
        let inst = CocycleInstance::new(&p.r_minus, &p.p_plus, 24, &opts).unwrap();
        cocycle::lambda_mu_integral(&inst).unwrap()
    };
    let mut g = c.benchmark_group("cocycle_batch");
    g.sample_size(10);
    g.bench_function("sequential", |b| {
        b.iter(|| par::map_seq(black_box(&pairs), job))
    });
    #[cfg(feature = "parallel")]
    g.bench_function("rayon", |b| b.iter(|| par::map_par(black_box(&pairs), job)));
    g.finish();
}

fn relation_sweep(c: &mut Criterion) {
    let space = GradedPolySpace::new(8);
    let pairs: Vec<(i64, i64)> = (-3..=3)
        .flat_map(|n| (-3..=3).map(move |m| (n, m)))
        .collect();
    let (a, b) = (C64::new(0.7, 0.0), C64::new(0.3, 0.0));
    let job = |&(n, m): &(i64, i64)| {
        virasoro::commutator_check(n, m, a, b, &space)
            .unwrap()
            .residual
    };
    let mut g = c.benchmark_group("relation_sweep");
    g.sample_size(10);
    g.bench_function("sequential", |bch| {
        bch.iter(|| par::map_seq(black_box(&pairs), job))
    });
    #[cfg(feature = "parallel")]
    g.bench_function("rayon", |bch| {
        bch.iter(|| par::map_par(black_box(&pairs), job))
    });
    g.finish();
}

criterion_group!(benches, cocycle_batch, relation_sweep);
criterion_main!(benches);

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mpfair_bench::{builtin, random_multipoint};
use mpfair_core::{verify_maxmin, water_fill, FairnessPolicy};

fn examples(c: &mut Criterion) {
    let mut group = c.benchmark_group("water_fill");
    for name in ["example1", "example2"] {
        let net = builtin(name);
        for policy in FairnessPolicy::ALL {
            group.bench_with_input(BenchmarkId::new(name, policy), &policy, |b, &p| {
                b.iter(|| water_fill(black_box(&net), p))
            });
        }
    }
    group.finish();
}

fn random(c: &mut Criterion) {
    let nets = random_multipoint(32);
    let mut group = c.benchmark_group("random_multipoint_32");
    for policy in FairnessPolicy::ALL {
        group.bench_with_input(BenchmarkId::new("water_fill", policy), &policy, |b, &p| {
            b.iter(|| nets.iter().map(|n| water_fill(n, p).0.len()).sum::<usize>())
        });
    }
    let allocations: Vec<_> = nets
        .iter()
        .map(|n| water_fill(n, FairnessPolicy::VcFlow).0)
        .collect();
    group.bench_function("verify_maxmin/vc-flow", |b| {
        b.iter(|| {
            nets.iter()
                .zip(&allocations)
                .filter(|(n, a)| verify_maxmin(n, FairnessPolicy::VcFlow, a).passed())
                .count()
        })
    });
    group.finish();
}

criterion_group!(benches, examples, random);
criterion_main!(benches);

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mpfair_bench::builtin;
use mpfair_core::{run_simulation, MergeAlgorithm, SimConfig};

fn simulate(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulate_100ms");
    group.sample_size(10);
    for name in ["example1", "example2"] {
        let net = builtin(name);
        for alg in [MergeAlgorithm::Turnaround, MergeAlgorithm::BitMark] {
            let config = SimConfig {
                merge_alg: alg,
                duration_ns: 100_000_000,
                record_trace: false,
                ..SimConfig::default()
            };
            group.bench_with_input(BenchmarkId::new(name, alg), &config, |b, cfg| {
                b.iter(|| run_simulation(black_box(&net), cfg).converged)
            });
        }
    }
    group.finish();
}

criterion_group!(benches, simulate);
criterion_main!(benches);

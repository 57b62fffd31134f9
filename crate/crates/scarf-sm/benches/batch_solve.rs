//! Compares the rayon-backed batch solve against the sequential loop on
//! batches of random instances of growing size.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use scarf_sm::marriage::{random_instance, solve_batch, solve_batch_sequential, SolveOptions};
use scarf_sm::trace::TraceLevel;

fn bench_batch(c: &mut Criterion) {
    let options = SolveOptions {
        trace_level: TraceLevel::Summary,
        assert_invariants: false,
        max_iterations: None,
    };
    let mut group = c.benchmark_group("batch_solve");
    for &k in &[8usize, 16, 32] {
        let instances: Vec<_> = (0..32).map(|seed| random_instance(k, seed)).collect();
        group.bench_with_input(BenchmarkId::new("sequential", k), &instances, |b, xs| {
            b.iter(|| solve_batch_sequential(xs, &options));
        });
        group.bench_with_input(BenchmarkId::new("batch", k), &instances, |b, xs| {
            b.iter(|| solve_batch(xs, &options));
        });
    }
    group.finish();
}

criterion_group!(benches, bench_batch);
criterion_main!(benches);

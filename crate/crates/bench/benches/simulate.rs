use std::hint::black_box;

use coinflip_bench::workload;
use coinflip_core::quantum::{classical_play, honest_run};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn honest(c: &mut Criterion) {
    let mut group = c.benchmark_group("honest_run");
    for depth in [4, 8, 12] {
        let game = workload(depth, 1).remove(0);
        group.bench_with_input(BenchmarkId::from_parameter(depth), &game, |b, g| {
            b.iter(|| honest_run(black_box(g)).unwrap())
        });
    }
    group.finish();
}

fn classical(c: &mut Criterion) {
    let game = workload(5, 1).remove(0);
    c.bench_function("classical_play 10^4 samples depth 5", |b| {
        b.iter(|| classical_play(black_box(&game), 10_000, 1).unwrap())
    });
}

criterion_group!(benches, honest, classical);
criterion_main!(benches);

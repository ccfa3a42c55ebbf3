use std::hint::black_box;

use coinflip_bench::workload;
use coinflip_core::optimal::optimal_shared;
use coinflip_core::{eval_ab, eval_h, eval_p, eval_w, eval_z};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn recursions(c: &mut Criterion) {
    let mut group = c.benchmark_group("recursions");
    for depth in [8, 12, 16] {
        let game = workload(depth, 1).remove(0);
        group.bench_with_input(BenchmarkId::new("h_a_b", depth), &game, |b, g| {
            b.iter(|| (eval_h(black_box(g)), eval_ab(black_box(g))))
        });
        group.bench_with_input(BenchmarkId::new("p_w_z", depth), &game, |b, g| {
            let (_, bt) = eval_ab(g);
            let h = eval_h(g).root();
            b.iter(|| (eval_p(g), eval_w(g, black_box(&bt)), eval_z(g, &bt, h).unwrap()))
        });
    }
    group.finish();
}

fn shared_family(c: &mut Criterion) {
    c.bench_function("optimal_shared n=1000", |b| {
        b.iter(|| {
            let (s, root) = optimal_shared(black_box(1000)).unwrap();
            s.roots(root)
        })
    });
}

criterion_group!(benches, recursions, shared_family);
criterion_main!(benches);

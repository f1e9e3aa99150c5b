use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use symile_core::oracle::{
    abc_reports, bound_value, build_synth_table, build_xor1d_table, optimal_scorer_for, IMode, Partition,
};

fn bench_information(c: &mut Criterion) {
    let mut g = c.benchmark_group("abc_reports");
    for dims in [1usize, 3, 5] {
        let t = build_synth_table(0.5, dims, IMode::Shared).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(dims), &t, |b, t| {
            b.iter(|| abc_reports(black_box(t), dims).unwrap())
        });
    }
    g.finish();
}

fn bench_bound(c: &mut Criterion) {
    let t = build_xor1d_table();
    let part = Partition::new(&t, &[&["a"], &["b"], &["c"]]).unwrap();
    let g_star = optimal_scorer_for(&part);
    let mut g = c.benchmark_group("bound_value_1k_batches");
    for n in [2usize, 32, 128] {
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| bound_value(&part, &g_star, 0, n, 1000, 0).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, bench_information, bench_bound);
criterion_main!(benches);

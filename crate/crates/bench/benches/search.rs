use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use losstree_bench::rate;
use losstree_core::{optimize_tree, SearchBounds};

fn optimize(c: &mut Criterion) {
    let mut group = c.benchmark_group("optimize_tree");
    group.sample_size(10);
    let bounds = SearchBounds {
        max_depth: 5,
        max_branch: 40,
        max_qubits: 100_000,
    };
    for target in [1e-3, 1e-6] {
        group.bench_with_input(BenchmarkId::from_parameter(target), &target, |bench, &t| {
            bench.iter(|| optimize_tree(rate(0.2), t, &bounds).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, optimize);
criterion_main!(benches);

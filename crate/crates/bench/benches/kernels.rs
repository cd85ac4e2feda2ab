use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use offbench_core::{gen_matrix, OpKind};

fn kernels(c: &mut Criterion) {
    let mut g = c.benchmark_group("kernels");
    g.sample_size(20);
    for op in OpKind::ALL {
        for n in [50, 200] {
            let m = gen_matrix(7, n).unwrap();
            g.bench_with_input(BenchmarkId::new(op.name(), n), &m, |b, m| b.iter(|| op.apply(m).unwrap()));
        }
    }
    g.finish();
}

criterion_group!(benches, kernels);
criterion_main!(benches);

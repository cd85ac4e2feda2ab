use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use offbench_core::{decode, encode, gen_matrix, CodecKind};

fn codecs(c: &mut Criterion) {
    for kind in CodecKind::ALL {
        let mut enc = c.benchmark_group(format!("encode/{kind}"));
        for n in [100, 400] {
            let m = gen_matrix(1, n).unwrap();
            enc.throughput(Throughput::Elements((n * n) as u64));
            enc.bench_with_input(BenchmarkId::from_parameter(n), &m, |b, m| b.iter(|| encode(kind, m).unwrap()));
        }
        enc.finish();

        let mut dec = c.benchmark_group(format!("decode/{kind}"));
        for n in [100, 400] {
            let bytes = encode(kind, &gen_matrix(1, n).unwrap()).unwrap().bytes;
            dec.throughput(Throughput::Bytes(bytes.len() as u64));
            dec.bench_with_input(BenchmarkId::from_parameter(n), &bytes, |b, bytes| {
                b.iter(|| decode(kind, bytes).unwrap())
            });
        }
        dec.finish();
    }
}

criterion_group!(benches, codecs);
criterion_main!(benches);

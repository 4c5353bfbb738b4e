use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nnta::nlrt::nlrt_iterate;
use nnta::tt::nttsvd;
use nnta::tucker::nsthosvd;
use nnta::{NlrtState, ProjectionOptions, TruncationStrategy};
use nnta_bench::hilbert_cube;
use std::hint::black_box;

fn strategies() -> [(&'static str, TruncationStrategy); 4] {
    [
        ("det", TruncationStrategy::Deterministic),
        ("hmt(1,11)", TruncationStrategy::Hmt { power: 1, sketch: 11, seed: 3 }),
        ("hmt(0,15)", TruncationStrategy::Hmt { power: 0, sketch: 15, seed: 3 }),
        ("tropp(6,35)", TruncationStrategy::Tropp { sketch: 6, cosketch: 35, seed: 3 }),
    ]
}

/// One alternating-projection sweep per sample.
fn single_iteration(c: &mut Criterion) {
    let mut g = c.benchmark_group("iteration");
    g.sample_size(10);
    for n in [32, 64, 96] {
        let x = hilbert_cube(n);
        for (name, strategy) in strategies() {
            let opts = ProjectionOptions::new(1, strategy);
            g.bench_with_input(BenchmarkId::new(format!("nsthosvd/{name}"), n), &x, |b, x| {
                b.iter(|| black_box(nsthosvd(x, &[3, 2, 4], &opts).unwrap()))
            });
            g.bench_with_input(BenchmarkId::new(format!("nttsvd/{name}"), n), &x, |b, x| {
                b.iter(|| black_box(nttsvd(x, &[3, 2], &opts).unwrap()))
            });
        }
        g.bench_with_input(BenchmarkId::new("nlrt", n), &x, |b, x| {
            b.iter(|| {
                let state = NlrtState::from_tensor(x, &[3, 2, 4]).unwrap();
                black_box(nlrt_iterate(x, state, 1).unwrap())
            })
        });
    }
    g.finish();
}

criterion_group!(benches, single_iteration);
criterion_main!(benches);

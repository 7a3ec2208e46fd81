use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use netgrid::{wavelet_square, Execution, GridContainer};

fn refined_square(levels: usize) -> GridContainer {
    let mut g = wavelet_square(1.0).unwrap();
    for _ in 0..levels {
        let leaves = g.leaf_view().elements().to_vec();
        for e in leaves {
            g.mark(1, e);
        }
        g.pre_adapt().unwrap();
        g.adapt().unwrap();
        g.post_adapt().unwrap();
    }
    g
}

fn batch_geometry(c: &mut Criterion) {
    let mut group = c.benchmark_group("leaf_sweeps");
    for levels in [4, 6] {
        let g = refined_square(levels);
        let view = g.leaf_view();
        for exec in [Execution::Sequential, Execution::Parallel] {
            let id = format!("{exec:?}");
            group.bench_with_input(BenchmarkId::new(format!("volumes/{id}"), view.size(0)), &exec, |b, &exec| {
                b.iter(|| view.element_volumes(exec).unwrap())
            });
            group.bench_with_input(BenchmarkId::new(format!("intersections/{id}"), view.size(0)), &exec, |b, &exec| {
                b.iter(|| view.all_intersections(exec).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, batch_geometry);
criterion_main!(benches);

use bwave_bench::decaying_mode;
use bwave_core::adjoint::solve_adjoint;
use bwave_core::objective::gradient;
use bwave_core::state::solve_forward;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const MESHES: [(usize, usize); 3] = [(31, 256), (63, 512), (127, 1024)];

fn forward(c: &mut Criterion) {
    let mut group = c.benchmark_group("forward");
    for (n, m) in MESHES {
        let p = decaying_mode(n, m);
        group.bench_with_input(BenchmarkId::from_parameter(n), &p, |b, p| {
            b.iter(|| solve_forward(p).unwrap())
        });
    }
    group.finish();
}

fn adjoint(c: &mut Criterion) {
    let mut group = c.benchmark_group("adjoint");
    for (n, m) in MESHES {
        let p = decaying_mode(n, m);
        let tr = solve_forward(&p).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &(p, tr), |b, (p, tr)| {
            b.iter(|| solve_adjoint(p, tr).unwrap())
        });
    }
    group.finish();
}

fn reduced_gradient(c: &mut Criterion) {
    let mut group = c.benchmark_group("gradient");
    for (n, m) in MESHES {
        let p = decaying_mode(n, m);
        group.bench_with_input(BenchmarkId::from_parameter(n), &p, |b, p| {
            b.iter(|| gradient(p).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, forward, adjoint, reduced_gradient);
criterion_main!(benches);

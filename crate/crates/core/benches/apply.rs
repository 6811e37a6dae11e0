//! Operator-application throughput: rayon data-parallel output loop
//! against the sequential fallback, for the forward and two-time kernels.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use quadprop::coefficients::free_particle;
use quadprop::evolution::{apply_forward_with, apply_composed_with, ExecMode};
use quadprop::{Grid, Propagator, WaveFunction};

fn modes() -> Vec<(&'static str, ExecMode)> {
    #[allow(unused_mut)]
    let mut m = vec![("seq", ExecMode::Sequential)];
    #[cfg(feature = "parallel")]
    m.push(("par", ExecMode::Parallel));
    m
}

fn bench_forward(c: &mut Criterion) {
    let prop = Propagator::new(free_particle()).unwrap();
    let mut group = c.benchmark_group("apply_forward");
    for &n in &[501usize, 2001] {
        let grid = Grid::new(-10.0, 10.0, n).unwrap();
        let psi = WaveFunction::gaussian(grid, 0.0, 1.0, 0.0);
        for (label, mode) in modes() {
            group.bench_with_input(BenchmarkId::new(label, n), &n, |b, _| {
                b.iter(|| apply_forward_with(&prop, &psi, 0.5, mode).unwrap())
            });
        }
    }
    group.finish();
}

fn bench_composed(c: &mut Criterion) {
    let prop = Propagator::new(free_particle()).unwrap();
    let mut group = c.benchmark_group("apply_composed");
    let grid = Grid::new(-10.0, 10.0, 1001).unwrap();
    let psi = WaveFunction::gaussian(grid, 0.0, 1.0, 0.0);
    for (label, mode) in modes() {
        group.bench_function(label, |b| {
            b.iter(|| apply_composed_with(&prop, &psi, 1.0, 0.4, mode).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_forward, bench_composed);
criterion_main!(benches);

use bondfield::field::{field_grid_with, sup_grad_with, BoundingBox};
use bondfield::operator::{solve, DEFAULT_TOL};
use bondfield::sweep::{run_sweep_with, SweepConfig};
use bondfield::{ComplexPotential, ConformalFrame, Execution};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

const POLICIES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn potential(eps: f64) -> ComplexPotential {
    let frame = ConformalFrame::from_params(1.0, eps).unwrap();
    ComplexPotential::new(solve(&frame, 0.5, DEFAULT_TOL).unwrap())
}

fn bench_sup_grad(c: &mut Criterion) {
    let mut group = c.benchmark_group("sup_grad");
    group.sample_size(10);
    for eps in [1e-2, 1e-4] {
        let pot = potential(eps);
        for (name, exec) in POLICIES {
            group.bench_with_input(BenchmarkId::new(name, eps), &pot, |b, pot| {
                b.iter(|| sup_grad_with(black_box(pot), exec))
            });
        }
    }
    group.finish();
}

fn bench_field_grid(c: &mut Criterion) {
    let mut group = c.benchmark_group("field_grid_128x64");
    group.sample_size(10);
    let pot = potential(1e-3);
    let bbox = BoundingBox::new(-3.0, -1.5, 3.0, 1.5).unwrap();
    for (name, exec) in POLICIES {
        group.bench_function(name, |b| {
            b.iter(|| field_grid_with(black_box(&pot), bbox, 128, 64, exec).unwrap())
        });
    }
    group.finish();
}

fn bench_sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    let cfgs: Vec<_> = [1e-1, 1e-2, 1e-3]
        .iter()
        .flat_map(|&eps| [0.25, 1.0, 4.0].map(|g| SweepConfig::new(1.0, eps, g)))
        .collect();
    for (name, exec) in POLICIES {
        group.bench_function(name, |b| {
            b.iter(|| run_sweep_with(black_box(&cfgs), DEFAULT_TOL, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_sup_grad, bench_field_grid, bench_sweep);
criterion_main!(benches);

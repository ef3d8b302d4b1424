use adiabatic_core::builders::{build_separable_pair, grover_family, TargetState};
use adiabatic_core::evolution::{evolve, EvolutionSpec};
use adiabatic_core::positivity::{TrotterApproximant, TrotterOrder};
use adiabatic_core::spectral::krylov::{lowest_two, KrylovOptions};
use adiabatic_core::spectral::sweep::{gap_sweep, uniform_grid};
use adiabatic_core::{StateVector, SweepOptions};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn matvec(c: &mut Criterion) {
    let mut g = c.benchmark_group("matvec");
    for n in [10, 14, 18] {
        let op = grover_family(TargetState::new(n, 0).unwrap()).unwrap().at(0.6).unwrap();
        let x = vec![1.0f64; 1 << n];
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| op.apply_real(black_box(&x)).unwrap())
        });
    }
    g.finish();
}

fn eigensolver(c: &mut Criterion) {
    let mut g = c.benchmark_group("lowest_two");
    g.sample_size(10);
    for n in [8, 12, 16] {
        let op = grover_family(TargetState::new(n, 0).unwrap()).unwrap().at(0.6).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| lowest_two(&op, &KrylovOptions::default(), None).unwrap())
        });
    }
    g.finish();
}

fn sweep(c: &mut Criterion) {
    let mut g = c.benchmark_group("gap_sweep");
    g.sample_size(10);
    let fam = build_separable_pair(10).unwrap();
    let grid = uniform_grid(41);
    g.bench_function("separable-n10-41", |b| {
        b.iter(|| gap_sweep(&fam, &grid, &SweepOptions::default()).unwrap())
    });
    g.finish();
}

fn trotter(c: &mut Criterion) {
    let fam = build_separable_pair(10).unwrap();
    let t = TrotterApproximant::new(&fam, 0.5, 64, TrotterOrder::Symmetric).unwrap();
    let x = vec![1.0f64; 1 << 10];
    c.bench_function("trotter-n10-m64", |b| {
        b.iter(|| {
            let mut y = x.clone();
            t.apply_in_place(&mut y).unwrap();
            y
        })
    });
}

fn evolution(c: &mut Criterion) {
    let mut g = c.benchmark_group("evolve");
    g.sample_size(10);
    let fam = grover_family(TargetState::new(8, 0).unwrap()).unwrap();
    let psi = StateVector::uniform(8).unwrap();
    g.bench_function("grover-n8-T50", |b| {
        b.iter(|| evolve(&fam, &EvolutionSpec::linear(50.0), &psi).unwrap())
    });
    g.finish();
}

criterion_group!(benches, matvec, eigensolver, sweep, trotter, evolution);
criterion_main!(benches);

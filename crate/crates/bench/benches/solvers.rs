use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gbsde::bounds::{bihari_bound, psi};
use gbsde::drivers::catalog;
use gbsde::solver::{robust_oracle, solve_gbsde};
use gbsde::{PathEnsemble, SolverConfig, Support, TimeFn, TimeGrid};
use gbsde_bench::{exp_payoff, unit_lattice};

fn lattice_gamma_norm(c: &mut Criterion) {
    let ft = catalog::gamma_norm(2.0, 1.0).unwrap();
    let x = exp_payoff();
    let cfg = SolverConfig::default();
    let mut g = c.benchmark_group("lattice_gamma_norm");
    for n in [64, 256, 1024] {
        let l = unit_lattice(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &l, |b, l| b.iter(|| solve_gbsde(Support::Lattice(l), &x, &ft, &cfg).unwrap().y0()));
    }
    g.finish();
}

fn lsmc_gamma_norm(c: &mut Criterion) {
    let ft = catalog::gamma_norm(2.0, 1.0).unwrap();
    let x = exp_payoff();
    let cfg = SolverConfig::default();
    let grid = TimeGrid::uniform(1.0, 20).unwrap();
    let ens = PathEnsemble::sample(&grid, 1, 10_000, 7).unwrap();
    let mut g = c.benchmark_group("lsmc_gamma_norm");
    g.sample_size(10);
    g.bench_function("paths_10000_steps_20", |b| b.iter(|| solve_gbsde(Support::Ensemble(&ens), &x, &ft, &cfg).unwrap().y0()));
    g.finish();
}

fn robust(c: &mut Criterion) {
    let l = unit_lattice(200);
    let x = exp_payoff();
    c.bench_function("robust_oracle_200x21", |b| b.iter(|| robust_oracle(&l, &x, 2.0, 0.5, 21).unwrap().y0()));
}

fn bihari(c: &mut Criterion) {
    c.bench_function("psi_1e4", |b| b.iter(|| (1..=10_000).map(|k| psi(black_box(k as f64 * 1e-3)).unwrap()).sum::<f64>()));
    let l = unit_lattice(512);
    let xs = l.terminal_values(&exp_payoff());
    c.bench_function("bihari_bound_512", |b| b.iter(|| bihari_bound(&l, &xs, &TimeFn::Const(0.5)).unwrap().y0()));
}

criterion_group!(benches, lattice_gamma_norm, lsmc_gamma_norm, robust, bihari);
criterion_main!(benches);

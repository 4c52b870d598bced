use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use kinetic_net::asymptotic::heat::{HeatBc, HeatGrid, HeatSolver};
use kinetic_net::asymptotic::{build_expansion, Case, ExpansionConfig};
use kinetic_net::coupling::{build_boundary_matrix, dissipativity_report, BoundaryKind};
use kinetic_net::hermite::build_quadrature;
use kinetic_net::solver::{solve_network, InitialData, Scheme};
use kinetic_net::spectral::{char_decomposition, layer_matrix, stable_subspace};
use kinetic_net::Collision;
use kinetic_net_bench::{network, system};

fn quadrature(c: &mut Criterion) {
    let mut g = c.benchmark_group("quadrature");
    for n in [2, 6, 10, 16] {
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| build_quadrature(black_box(n)))
        });
    }
    g.finish();
}

fn spectral(c: &mut Criterion) {
    let mut g = c.benchmark_group("spectral");
    for n in [3, 6, 10] {
        let s = system(n, Collision::Q2);
        g.bench_with_input(BenchmarkId::new("char_decomposition", n), &s, |b, s| {
            b.iter(|| char_decomposition(s))
        });
        let h = layer_matrix(&s);
        g.bench_with_input(BenchmarkId::new("stable_subspace", n), &h, |b, h| {
            b.iter(|| stable_subspace(h))
        });
        let bm = build_boundary_matrix(BoundaryKind::B2 { edges: 4 }, &s);
        g.bench_with_input(BenchmarkId::new("dissipativity", n), &s, |b, s| {
            b.iter(|| dissipativity_report(&bm, s))
        });
    }
    g.finish();
}

fn solver(c: &mut Criterion) {
    let mut g = c.benchmark_group("network_solve");
    g.sample_size(10);
    let s = system(3, Collision::Q1);
    for (cells, scheme) in [
        (200, Scheme::Upwind),
        (200, Scheme::Fromm),
        (800, Scheme::Upwind),
    ] {
        let p = network(&s, 3, 0.05, cells, scheme);
        g.bench_function(format!("{scheme:?}/{cells}"), |b| {
            b.iter(|| solve_network(&p))
        });
    }
    g.finish();
}

fn heat(c: &mut Criterion) {
    let grid = HeatGrid::new(20.0, 0.01).unwrap();
    let f = vec![0.0; grid.points];
    c.bench_function("heat_step", |b| {
        let mut solver = HeatSolver::new(grid.clone(), 1.0, HeatBc::Slope, 1.0 / 1024.0);
        let mut h = vec![0.0; grid.points];
        b.iter(|| solver.step(&mut h, &f, &f, -1.0, -1.0))
    });
}

fn expansion(c: &mut Criterion) {
    let mut g = c.benchmark_group("expansion");
    g.sample_size(10);
    for case in Case::ALL {
        let s = system(3, case.collision());
        let init = InitialData::default_for(s.block);
        let cfg = ExpansionConfig {
            epsilon: 0.05,
            ..ExpansionConfig::default()
        };
        g.bench_function(case.tag(), |b| {
            b.iter(|| build_expansion(&s, case, &init, &cfg))
        });
    }
    g.finish();
}

criterion_group!(benches, quadrature, spectral, solver, heat, expansion);
criterion_main!(benches);

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use phc_bench::{cone_params, cone_surface, spiral_surface};
use phc_core::cone_dynamics::{period_from_ode, period_quad};
use phc_core::geometry::identity_suite;
use phc_core::local_graphs::{extract_graph, vertex_mode};
use phc_core::surfaces::{holomorphy_residual, Surface};
use phc_core::Circle;
use std::hint::black_box;

fn periods(c: &mut Criterion) {
    let mut g = c.benchmark_group("period");
    for p in cone_params() {
        g.bench_with_input(BenchmarkId::new("quadrature", format!("{:.4}", p.c)), &p, |b, p| {
            b.iter(|| period_quad(black_box(*p)).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("ode", format!("{:.4}", p.c)), &p, |b, p| {
            b.iter(|| period_from_ode(black_box(*p)).unwrap())
        });
    }
    g.finish();
}

fn residuals(c: &mut Criterion) {
    let mut g = c.benchmark_group("holomorphy_residual_64x64");
    let cone = cone_surface();
    let cone_grid = cone.grid(64, 64);
    g.bench_function("e15", |b| b.iter(|| holomorphy_residual(&cone, black_box(&cone_grid)).unwrap()));
    let spiral = spiral_surface();
    let spiral_grid = spiral.grid(64, 64);
    g.bench_function("e17", |b| b.iter(|| holomorphy_residual(&spiral, black_box(&spiral_grid)).unwrap()));
    g.finish();
}

fn vertex(c: &mut Criterion) {
    let mut g = c.benchmark_group("vertex_mode");
    for n in [0u32, 3] {
        g.bench_with_input(BenchmarkId::new("solve", n), &n, |b, &n| b.iter(|| vertex_mode(black_box(n)).unwrap()));
    }
    let mode = vertex_mode(2).unwrap();
    g.bench_function("residual_N2", |b| b.iter(|| mode.equation_residual(black_box(64)).unwrap()));
    g.finish();
}

fn geometry(c: &mut Criterion) {
    c.bench_function("identity_suite_1e4", |b| {
        b.iter(|| identity_suite(black_box(10_000), 7, Circle::default()).unwrap())
    });
}

fn graphs(c: &mut Criterion) {
    let s = spiral_surface();
    let mut g = c.benchmark_group("extract_graph");
    g.sample_size(10);
    g.bench_function("e17_64x64", |b| {
        b.iter(|| extract_graph(&s, [0.5, 1.5], [0.01, 0.3], black_box(64), 64, 2).unwrap())
    });
    g.finish();
}

criterion_group!(benches, periods, residuals, vertex, geometry, graphs);
criterion_main!(benches);

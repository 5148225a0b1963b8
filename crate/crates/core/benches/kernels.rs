//! Benchmarks for the grid-evaluation kernels that dominate solver
//! runtime. Every group runs the same code under both feature sets, so
//!
//! ```text
//! cargo bench -p fixpoint
//! cargo bench -p fixpoint --no-default-features
//! ```
//!
//! compares the rayon data-parallel kernels against the sequential
//! fallback on identical inputs (results are bit-identical either way;
//! only the wall time moves).

use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, Criterion};

use fixpoint::brouwer::completely_labeled_search;
use fixpoint::expr::{lipschitz_modulus, parse, ContinuityModulus};
use fixpoint::geometry::{Domain, Point};
use fixpoint::kakutani::{approx_kakutani, piecewise_affine_selection};
use fixpoint::minimax::{brute_gap, certified_inf};
use fixpoint::setvalued::{Segment, SetValuedMap};

/// Self-map of the unit cube contracting toward the center.
fn contraction(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| 0.5 + 0.4 * (0.5 - v)).collect()
}

fn seg(a: [f64; 2], b: [f64; 2]) -> Segment {
    Segment::new(Point::from_slice(&a), Point::from_slice(&b)).unwrap()
}

/// Step map with a vertical riser at `x = 0.5`; the standard example of
/// a map that needs set values to have a fixed point at all.
fn riser_map() -> SetValuedMap {
    SetValuedMap::from_polygonal_graph(
        vec![
            seg([0.0, 0.0], [0.5, 0.0]),
            seg([0.5, 0.0], [0.5, 1.0]),
            seg([0.5, 1.0], [1.0, 1.0]),
        ],
        Domain::unit_box(1),
        ContinuityModulus::lipschitz(1.0).unwrap(),
    )
    .unwrap()
}

fn bench_sperner(c: &mut Criterion) {
    let mut g = c.benchmark_group("sperner_search");
    g.bench_function("door_path_2d_k512", |b| {
        b.iter(|| completely_labeled_search(contraction, black_box(512), 2).unwrap())
    });
    // 3-D and up falls back to the exhaustive vertex-labeling scan,
    // which is the data-parallel path.
    g.bench_function("exhaustive_scan_3d_k20", |b| {
        b.iter(|| completely_labeled_search(contraction, black_box(20), 3).unwrap())
    });
    g.finish();
}

fn bench_kakutani(c: &mut Criterion) {
    let map = riser_map();
    let mut g = c.benchmark_group("kakutani");
    g.bench_function("selection_build_k1024", |b| {
        b.iter(|| piecewise_affine_selection(&map, black_box(1024)).unwrap())
    });
    g.bench_function("strong_solve_riser_eps1e-2", |b| {
        b.iter(|| approx_kakutani(&map, black_box(1e-2)).unwrap())
    });
    g.finish();
}

fn bench_minimax(c: &mut Criterion) {
    let f = parse("(x0 - 0.5)*(y0 - 0.5)").unwrap();
    let unit = Domain::unit_box(1);
    let omega = lipschitz_modulus(&f, &unit, Some(&unit)).unwrap();
    let mut g = c.benchmark_group("minimax");
    g.bench_function("brute_gap_k64", |b| {
        b.iter(|| brute_gap(&f, black_box(64)).unwrap())
    });
    g.bench_function("certified_inf_eps1e-3", |b| {
        b.iter(|| certified_inf(&f, &omega, black_box(&[0.3]), 1e-3).unwrap())
    });
    g.finish();
}

fn bench_geometry(c: &mut Criterion) {
    // Hull nets project every lattice point onto the hull, the heaviest
    // geometry kernel.
    let hexagon = Domain::hull(
        [
            [1.0, 0.0],
            [0.5, 0.9],
            [-0.5, 0.9],
            [-1.0, 0.0],
            [-0.5, -0.9],
            [0.5, -0.9],
        ]
        .iter()
        .map(|p| Point::from_slice(p))
        .collect(),
    )
    .unwrap();
    let mut g = c.benchmark_group("geometry");
    g.bench_function("hull_net_pitch_0.05", |b| {
        b.iter(|| hexagon.eps_net(black_box(0.05)).unwrap())
    });
    g.finish();
}

criterion_group! {
    name = kernels;
    config = Criterion::default()
        .sample_size(20)
        .measurement_time(Duration::from_secs(3))
        .warm_up_time(Duration::from_secs(1));
    targets = bench_sperner, bench_kakutani, bench_minimax, bench_geometry
}
criterion_main!(kernels);

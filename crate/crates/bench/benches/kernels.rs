use std::hint::black_box;

use capscale_core::*;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn bench_emst(c: &mut Criterion) {
    let mut g = c.benchmark_group("emst");
    for n in [64usize, 256, 1024] {
        let pts = generate_network(n, 1).unwrap().points().to_vec();
        g.bench_with_input(BenchmarkId::from_parameter(n), &pts, |b, pts| {
            b.iter(|| emst(black_box(pts)).unwrap().total_length)
        });
    }
    g.finish();
}

fn bench_feasibility(c: &mut Criterion) {
    let net = generate_network(10_000, 2).unwrap();
    let ts = disk_bipartite_assignment(&net, Point::new(0.5, 0.5), 0.1).unwrap();
    c.bench_function("is_feasible/disk_10k", |b| {
        b.iter(|| is_feasible(black_box(&ts), &net).unwrap())
    });
    c.bench_function("simultaneous_links/10k_t0.06", |b| {
        b.iter(|| count_simultaneous_links(&net, black_box(0.06), 0.0).unwrap())
    });
}

fn bench_union_area(c: &mut Criterion) {
    let centers = generate_network(200, 3).unwrap().points().to_vec();
    c.bench_function("union_of_disks_area/200x1000", |b| {
        b.iter(|| union_of_disks_area(black_box(&centers), 0.05, 1000).unwrap())
    });
}

fn bench_routing(c: &mut Criterion) {
    let t = 0.08;
    let net = generate_network(5000, 4).unwrap();
    let grid = build_grid(t).unwrap();
    let graph = build_cell_graph(&net, &grid, t);
    let router = Router::new(&net, &grid, &graph);
    let sessions = random_sessions(&net, 5, 5).unwrap();
    c.bench_function("route/5k_m5_x100", |b| {
        b.iter(|| {
            sessions[..100]
                .iter()
                .map(|s| router.route(s).unwrap().len())
                .sum::<usize>()
        })
    });
}

fn bench_cut(c: &mut Criterion) {
    let net = generate_network(10_000, 6).unwrap();
    let mut g = c.benchmark_group("cut_capacity");
    for mode in Mode::ALL {
        g.bench_with_input(BenchmarkId::from_parameter(mode), &mode, |b, &mode| {
            b.iter(|| cut_capacity(&net, &Cut::default(), mode, 0.1, 0.0).unwrap())
        });
    }
    g.finish();
}

fn bench_simulate(c: &mut Criterion) {
    let mut g = c.benchmark_group("simulate");
    g.sample_size(10);
    for mode in [Mode::Ptp, Mode::MptMpr] {
        let mut cfg = SimConfig::new(500, 0.15, 2, 7);
        cfg.slots = 64;
        cfg.warmup = Some(64);
        g.bench_with_input(BenchmarkId::from_parameter(mode), &mode, |b, &mode| {
            b.iter(|| simulate(&cfg, mode).unwrap().mean)
        });
    }
    g.finish();
}

criterion_group!(
    kernels,
    bench_emst,
    bench_feasibility,
    bench_union_area,
    bench_routing,
    bench_cut,
    bench_simulate
);
criterion_main!(kernels);

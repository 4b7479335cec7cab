use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dfsynth_bench::{clustered_sdfg, layered_workload, random_matrix};
use dfsynth_core::cluster::{cluster_greedy, cluster_mincut};
use dfsynth_core::decompose::decompose;
use dfsynth_core::hardware::dynapse_preset;
use dfsynth_core::mapping::{evaluate, explore, load_balanced_mapping, ExploreOptions};
use dfsynth_core::maxplus::{max_cycle_mean, period};
use dfsynth_core::schedule::{default_budget, self_timed_simulate};

fn cycle_mean(c: &mut Criterion) {
    let mut group = c.benchmark_group("max_cycle_mean");
    for n in [16, 64, 128] {
        let m = random_matrix(n as u64, n, 0.2);
        group.bench_with_input(BenchmarkId::from_parameter(n), &m, |b, m| b.iter(|| max_cycle_mean(black_box(m))));
    }
    group.finish();
}

fn sdfg_period(c: &mut Criterion) {
    let mut group = c.benchmark_group("sdfg_period");
    for layers in [[200, 100, 20], [800, 400, 100]] {
        let g = clustered_sdfg(1, &layers, 8, 16);
        group.bench_with_input(BenchmarkId::from_parameter(g.num_actors()), &g, |b, g| {
            b.iter(|| period(black_box(g)).unwrap())
        });
    }
    group.finish();
}

fn mapping(c: &mut Criterion) {
    let g = clustered_sdfg(2, &[400, 200, 50], 8, 16);
    let hw = dynapse_preset(2, 2, 16).unwrap();
    let m = load_balanced_mapping(&g, &hw).unwrap();
    c.bench_function("evaluate", |b| b.iter(|| evaluate(black_box(&g), &hw, &m).unwrap()));

    let e = evaluate(&g, &hw, &m).unwrap();
    let constrained = dfsynth_core::mapping::constrain(&g, &hw, &m).unwrap();
    let budget = default_budget(&constrained);
    c.bench_function("self_timed_simulate", |b| {
        b.iter(|| self_timed_simulate(black_box(&constrained), &e.order, budget).unwrap())
    });

    let small = clustered_sdfg(3, &[60, 30, 10], 6, 16);
    let opts = ExploreOptions { eta: 4, seed: 0, ..Default::default() };
    let mut group = c.benchmark_group("explore");
    group.sample_size(10);
    group.bench_function(BenchmarkId::from_parameter(small.num_actors()), |b| {
        b.iter(|| explore(black_box(&small), &hw, &opts).unwrap())
    });
    group.finish();
}

fn clustering(c: &mut Criterion) {
    let d = decompose(&layered_workload(4, &[1000, 500, 100], 10));
    let mut group = c.benchmark_group("cluster");
    group.sample_size(10);
    for n in [16, 64, 256] {
        group.bench_with_input(BenchmarkId::new("greedy", n), &n, |b, &n| b.iter(|| cluster_greedy(black_box(&d), n).unwrap()));
        group.bench_with_input(BenchmarkId::new("mincut", n), &n, |b, &n| {
            b.iter(|| cluster_mincut(black_box(&d), n, 0).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, cycle_mean, sdfg_period, mapping, clustering);
criterion_main!(benches);

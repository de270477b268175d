use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dwellflee::bounds::{edge_terms, flow_dwell_flee_impulsive};
use dwellflee::lyapunov::{min_dwell_bisection, SearchOptions, Template};
use dwellflee::model::{ImpulseSet, Jumps, ModeGraph, ModeId, SubsystemSpec, SwitchedSystemSpec};
use dwellflee::numlin::{real_matrix, NormSpec};
use dwellflee::sim::{empirical_probe, ProbeOptions};
use dwellflee::Execution;

fn hull_system() -> SwitchedSystemSpec {
    let modes = vec![
        SubsystemSpec::new("8", real_matrix(&[&[-5.0, 3.0, -3.0], &[0.0, -2.0, 2.0], &[0.0, 0.0, -1.0]])).unwrap(),
        SubsystemSpec::new("9", real_matrix(&[&[-2.0, 2.0, -1.0], &[4.0, 3.0, -4.0], &[7.0, 10.0, -10.0]])).unwrap(),
        SubsystemSpec::new("10", real_matrix(&[&[-1.0, -2.0, -3.0], &[1.0, 0.0, 1.0], &[0.0, -1.0, -3.0]])).unwrap(),
    ];
    let vertices = vec![
        real_matrix(&[&[-2.0, 1.0, 0.0], &[0.0, 2.0, -1.0], &[3.0, 0.0, 0.0]]),
        real_matrix(&[&[-3.0, 2.0, -1.0], &[1.0, 4.0, 2.0], &[-2.0, -1.0, 1.0]]),
        real_matrix(&[&[1.0, 1.0, -1.0], &[2.0, 0.0, 2.0], &[1.0, 0.0, 3.0]]),
    ];
    let ids: Vec<ModeId> = ["8", "9", "10"].iter().map(|s| ModeId::from(*s)).collect();
    SwitchedSystemSpec::new(
        modes,
        ModeGraph::complete(ids),
        Jumps::Impulses(ImpulseSet::hull(vertices)),
        NormSpec::Spectral,
    )
    .unwrap()
}

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn bench(c: &mut Criterion) {
    let spec = hull_system();
    let constraints = flow_dwell_flee_impulsive(&spec).unwrap();

    let mut group = c.benchmark_group("edge_terms");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| edge_terms(&spec, exec).unwrap()));
    }
    group.finish();

    let mut group = c.benchmark_group("probe");
    group.sample_size(20);
    for (name, exec) in MODES {
        let opts = ProbeOptions {
            trials: 32,
            horizon: 60.0,
            exec,
            ..ProbeOptions::default()
        };
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| empirical_probe(&spec, &constraints, &opts).unwrap())
        });
    }
    group.finish();

    let mut group = c.benchmark_group("bisection");
    group.sample_size(10);
    let opts = SearchOptions::default();
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| min_dwell_bisection(&spec, Template::ImpulseDwell, 0.5, 8.0, 1e-2, 4, exec, &opts).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);

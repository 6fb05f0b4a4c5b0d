//! Sequential against data-parallel execution of the batch stages: target
//! collection and a coverage sweep.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use covdive::diving::{collect_targets, Strategy};
use covdive::eval::{sweep_coverage, CoverageSweep, ScaleSet};
use covdive::io::gen_set_cover;
use covdive::mip::ClockKind;
use covdive::model::ModelParams;
use covdive::par::Parallelism;

const MODES: [(&str, Parallelism); 2] = [("sequential", Parallelism::Sequential), ("parallel", Parallelism::Parallel)];

fn collect(c: &mut Criterion) {
    let instances: Vec<_> = (0..16).map(|s| gen_set_cover(30, 60, 0.1, s).unwrap()).collect();
    let mut group = c.benchmark_group("collect_targets");
    group.sample_size(10);
    for (name, mode) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| collect_targets(&instances, 1.0, ClockKind::fixed(), mode).unwrap())
        });
    }
    group.finish();
}

fn sweep(c: &mut Criterion) {
    let params = ModelParams::init(16, 2, 0);
    let sets = vec![ScaleSet { scale: 1.0, instances: (0..8).map(|s| gen_set_cover(30, 60, 0.1, s).unwrap()).collect() }];
    let cfg = CoverageSweep {
        rhos: (0..6).map(|i| i as f64 / 5.0).collect(),
        strategy: Strategy::BernoulliRandom,
        samples: 8,
        budget: 0.05,
        clock: ClockKind::fixed(),
        seed: 0,
    };
    let mut group = c.benchmark_group("sweep_coverage");
    group.sample_size(10);
    for (name, mode) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| sweep_coverage(&params, &sets, &cfg, mode).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, collect, sweep);
criterion_main!(benches);

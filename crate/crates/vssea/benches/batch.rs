//! Compares sequential and data-parallel batch execution over a mixed set
//! of scenarios like the ones a sweep dispatches.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use vssea::scenario::{run_batch_sequential, ControllerKind, ScenarioConfig};

/// A sweep-like workload: every controller kind at a few observer
/// bandwidths, each scenario shortened so a full comparison stays quick.
fn workload() -> Vec<ScenarioConfig> {
    let kinds = [
        ControllerKind::Pp,
        ControllerKind::PpDob,
        ControllerKind::Lqr,
        ControllerKind::LqrDob,
        ControllerKind::Smc,
    ];
    let mut configs = Vec::new();
    for kind in kinds {
        for bandwidth in [50.0, 200.0, 800.0] {
            let mut config = ScenarioConfig::standard();
            config.controller.kind = kind;
            config.observer.bandwidth = bandwidth;
            config.sim.duration = 2.0;
            configs.push(config);
        }
    }
    configs
}

fn bench_batch(c: &mut Criterion) {
    let configs = workload();
    let mut group = c.benchmark_group("batch");
    group.throughput(Throughput::Elements(configs.len() as u64));
    group.sample_size(10);

    group.bench_with_input(
        BenchmarkId::new("sequential", configs.len()),
        &configs,
        |b, configs| {
            b.iter(|| {
                let results = run_batch_sequential(configs);
                assert!(results.iter().all(Result::is_ok));
                results
            })
        },
    );

    #[cfg(feature = "parallel")]
    group.bench_with_input(
        BenchmarkId::new("parallel", configs.len()),
        &configs,
        |b, configs| {
            b.iter(|| {
                let results = vssea::scenario::batch::run_batch_parallel(configs);
                assert!(results.iter().all(Result::is_ok));
                results
            })
        },
    );

    group.finish();
}

criterion_group!(benches, bench_batch);
criterion_main!(benches);

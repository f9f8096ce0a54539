use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sit_core::{run_batch_with, BatchConfig, ControlLaw, Execution, ModelParams};

fn batch_execution(c: &mut Criterion) {
    let mut cfg = BatchConfig::new(ControlLaw::vreg(5.0), ModelParams::default());
    cfg.n_sims = 32;
    cfg.sim.t_end = 200.0;
    cfg.checkpoints = vec![100.0, 200.0];

    let mut group = c.benchmark_group("batch_32x200d");
    group.sample_size(10);
    let modes = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];
    for (name, exec) in modes {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| run_batch_with(black_box(&cfg), exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, batch_execution);
criterion_main!(benches);

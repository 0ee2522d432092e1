//! Serial vs parallel throughput of the Monte Carlo trial engine on a
//! small phase-transition sweep.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use mpdn::experiment::{run_phase_transition, FamilyChoice, Jobs, PhaseConfig};
use mpdn::synth::NoiseSpec;

fn small_sweep() -> PhaseConfig {
    PhaseConfig {
        m: 60,
        n: 120,
        points: vec![vec![3.0], vec![0.5]],
        family: FamilyChoice::Dense,
        entry_law: Default::default(),
        noise: NoiseSpec::default(),
        trials: 24,
        seed: 0x5eed,
        record_eta: true,
    }
}

fn bench_trial_engine(c: &mut Criterion) {
    let config = small_sweep();
    let mut group = c.benchmark_group("phase_sweep");
    group.sample_size(10);
    group.bench_function("serial", |b| {
        b.iter(|| run_phase_transition(black_box(&config), Jobs::Serial).unwrap())
    });
    group.bench_function("parallel", |b| {
        b.iter(|| run_phase_transition(black_box(&config), Jobs::Parallel).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_trial_engine);
criterion_main!(benches);

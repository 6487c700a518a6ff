use std::collections::HashSet;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mpm_core::detector::detect;
use mpm_core::field::{encode_mpm, likelihood_of};
use mpm_core::metrics::{evaluate_tracking, DetectionMatchConfig};
use mpm_core::simulator::{degrade, simulate, NoiseConfig, OracleProvider, SimConfig};
use mpm_core::tracker::track_sequence;
use mpm_core::{DetectorConfig, EncoderConfig, TrackRegistry, TrackerConfig};

fn scenario(cells: usize) -> (SimConfig, EncoderConfig) {
    let sim = SimConfig {
        width: 512,
        height: 512,
        n_initial_cells: cells,
        n_frames: 30,
        division_prob: 0.01,
        seed: 7,
        ..SimConfig::default()
    };
    let mut enc = EncoderConfig::new(sim.width, sim.height);
    enc.cutoff_radius = 12.0;
    (sim, enc)
}

fn encoding(c: &mut Criterion) {
    let mut group = c.benchmark_group("encode");
    for cells in [10, 40, 120] {
        let (sim, enc) = scenario(cells);
        let oracle = OracleProvider::new(&simulate(&sim).unwrap(), enc).unwrap();
        let pairs = oracle.pairs(4, 5, &HashSet::new());
        group.bench_with_input(BenchmarkId::from_parameter(cells), &pairs, |b, pairs| {
            b.iter(|| encode_mpm(black_box(pairs), &enc, 5, 1).unwrap())
        });
    }
    group.finish();
}

fn detection(c: &mut Criterion) {
    let (sim, enc) = scenario(40);
    let oracle = OracleProvider::new(&simulate(&sim).unwrap(), enc).unwrap();
    let map = likelihood_of(&oracle.encode_without(4, 5, &HashSet::new()).unwrap());
    let cfg = DetectorConfig::default();
    c.bench_function("detect/512x512", |b| b.iter(|| detect(black_box(&map), &cfg, 5)));
}

fn tracking(c: &mut Criterion) {
    let mut group = c.benchmark_group("track");
    group.sample_size(10);
    let (sim, enc) = scenario(40);
    let anns = simulate(&sim).unwrap();
    let oracle = OracleProvider::new(&anns, enc).unwrap();
    let cfg = TrackerConfig::default();
    let last = sim.n_frames - 1;
    group.bench_function("clean", |b| {
        b.iter(|| track_sequence(oracle.clone(), 0, last, &cfg).unwrap())
    });
    let noise = NoiseConfig {
        drop_prob: 0.05,
        seed: 3,
        ..NoiseConfig::default()
    };
    group.bench_function("dropped", |b| {
        b.iter(|| {
            let p = degrade(oracle.clone(), noise.clone()).unwrap();
            track_sequence(p, 0, last, &cfg).unwrap()
        })
    });
    group.finish();

    let truth = TrackRegistry::from_annotations(&anns).unwrap();
    let pred = track_sequence(oracle, 0, last, &cfg).unwrap();
    let m = DetectionMatchConfig::default();
    c.bench_function("evaluate", |b| b.iter(|| evaluate_tracking(black_box(&truth), &pred, &m)));
}

criterion_group!(benches, encoding, detection, tracking);
criterion_main!(benches);

//! One worker thread against the default rayon pool on the data-parallel
//! hot paths: visual k-NN scoring, PSI scoring and the randomization test.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rayon::ThreadPool;

use crossmedia::corpus::Normalizer;
use crossmedia::embedding::{train_psi, TrainConfig};
use crossmedia::eval::{randomization_test, PerQueryScores, RandomizationConfig, TestMode};
use crossmedia::neighbor::NeighborModelConfig;
use crossmedia::pipeline::{score_image2text, score_psi, score_text2image, TestSet};
use crossmedia::synth::{generate, SynthConfig};

fn pools() -> Vec<(&'static str, ThreadPool)> {
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let default = rayon::ThreadPoolBuilder::new().build().unwrap();
    vec![("1-thread", single), ("default", default)]
}

fn scoring(c: &mut Criterion) {
    let corpus = generate(&SynthConfig {
        test_queries: 60,
        ..SynthConfig::default()
    })
    .unwrap();
    let test = TestSet::new(&corpus.judgments, &Normalizer::default());
    let cfg = NeighborModelConfig::default();
    let psi = train_psi(
        &corpus.log,
        &corpus.features,
        &TrainConfig {
            epochs: 2,
            common_dim: 32,
            ..TrainConfig::default()
        },
    )
    .unwrap()
    .model;

    let mut group = c.benchmark_group("scoring");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::new("image2text", name), |b| {
            b.iter(|| {
                pool.install(|| {
                    score_image2text(black_box(&test), &corpus.log, &corpus.features, &cfg)
                })
            })
        });
        group.bench_function(BenchmarkId::new("text2image", name), |b| {
            b.iter(|| {
                pool.install(|| {
                    score_text2image(black_box(&test), &corpus.log, &corpus.features, &cfg)
                })
            })
        });
        group.bench_function(BenchmarkId::new("psi", name), |b| {
            b.iter(|| pool.install(|| score_psi(black_box(&test), &psi, &corpus.features)))
        });
    }
    group.finish();
}

fn randomization(c: &mut Criterion) {
    let a: PerQueryScores = (0..200)
        .map(|i| (format!("q{i}"), (i as f64 * 0.37).sin().abs()))
        .collect();
    let b: PerQueryScores = (0..200)
        .map(|i| (format!("q{i}"), (i as f64 * 0.53).cos().abs()))
        .collect();
    let cfg = RandomizationConfig {
        trials: 20_000,
        mode: TestMode::MonteCarlo,
        ..RandomizationConfig::default()
    };
    let mut group = c.benchmark_group("randomization");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::new("monte_carlo", name), |bench| {
            bench.iter(|| pool.install(|| randomization_test(black_box(&a), &b, &cfg)))
        });
    }
    group.finish();
}

criterion_group!(benches, scoring, randomization);
criterion_main!(benches);

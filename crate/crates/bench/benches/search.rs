use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use pathsel_bench::bench_dataset;
use pathsel_core::scenario::{extract_features, ground_truth_path_loss};
use pathsel_core::search::population_diversity;
use pathsel_core::{
    evaluate_mask, generate_scene, run_search, Basis, FeatureMask, Policy, PredictorConfig, SceneConfig,
    ScoreWeights, SearchConfig,
};

fn bench_scene(c: &mut Criterion) {
    let scene = generate_scene(&SceneConfig::intersection(), 1).unwrap();
    c.bench_function("scene/generate_intersection", |b| {
        b.iter(|| generate_scene(black_box(&SceneConfig::intersection()), 1).unwrap())
    });
    c.bench_function("scene/features_route", |b| {
        b.iter(|| {
            for i in 0..scene.route_len() {
                black_box(extract_features(&scene, i).unwrap());
            }
        })
    });
    c.bench_function("scene/path_loss_route", |b| {
        b.iter(|| {
            for i in 0..scene.route_len() {
                black_box(ground_truth_path_loss(&scene, i).unwrap());
            }
        })
    });
}

fn bench_evaluate(c: &mut Criterion) {
    let ds = bench_dataset();
    let w = ScoreWeights::default();
    let mut group = c.benchmark_group("evaluate_mask");
    for basis in [Basis::Linear, Basis::Quadratic] {
        let cfg = PredictorConfig {
            basis,
            ..Default::default()
        };
        for k in [2usize, 5, 10] {
            let mask = FeatureMask::from_indices(10, 0..k).unwrap();
            group.bench_with_input(BenchmarkId::new(format!("{basis:?}"), k), &mask, |b, m| {
                b.iter(|| evaluate_mask(*m, &ds, &w, &cfg).unwrap())
            });
        }
    }
    group.finish();
}

fn bench_search(c: &mut Criterion) {
    let ds = bench_dataset();
    let w = ScoreWeights::default();
    let pc = PredictorConfig::default();
    let mut group = c.benchmark_group("run_search");
    group.sample_size(10);
    for jobs in [1usize, 4] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build().unwrap();
        group.bench_with_input(BenchmarkId::new("p25_t50_jobs", jobs), &jobs, |b, _| {
            b.iter(|| {
                pool.install(|| {
                    let cfg = SearchConfig {
                        master_seed: 3,
                        ..Default::default()
                    };
                    run_search(&ds, &cfg, &w, &pc).unwrap()
                })
            })
        });
    }
    group.finish();

    let policy = Policy::uniform(10, 0.5).unwrap();
    let mut rng = pathsel_core::seed::rng(0, &[]);
    let pop = pathsel_core::search::sample_population(&policy, 25, &mut rng);
    c.bench_function("diagnostics/diversity_p25", |b| {
        b.iter(|| population_diversity(black_box(&pop)).unwrap())
    });
}

criterion_group!(benches, bench_scene, bench_evaluate, bench_search);
criterion_main!(benches);

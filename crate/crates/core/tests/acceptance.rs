//! End-to-end acceptance checks. Runs without the libtest harness so every
//! criterion prints its `PASS`/`FAIL` line; exits non-zero if any fails.

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::OnceLock;
use std::time::Instant;

use pathsel_core::dataset::{planted_dataset, PlantedSpec};
use pathsel_core::harness::{self, ExperimentConfig, Method, TaskOutcome};
use pathsel_core::scoring::{implied_trend_error, total_score};
use pathsel_core::search::{crossover, mutate, normalized_entropy, population_diversity, repair};
use pathsel_core::{
    run_search, seed, Dataset, FeatureMask, PredictorConfig, ScoreWeights, SearchConfig, Split,
};
use rand::seq::index::sample;
use rand::Rng;

const SEEDS: u64 = 10;

fn verdict(criterion: u32, pass: bool, detail: String) {
    println!(
        "criterion {criterion}: {} | {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

/// Ten default-config pipelines, one per master seed.
fn sweep() -> &'static Vec<Vec<TaskOutcome>> {
    static SWEEP: OnceLock<Vec<Vec<TaskOutcome>>> = OnceLock::new();
    SWEEP.get_or_init(|| {
        let start = Instant::now();
        let runs = (0..SEEDS)
            .map(|s| {
                let cfg = ExperimentConfig {
                    master_seed: s,
                    ..Default::default()
                };
                harness::run_in_memory(&cfg, None).expect("pipeline")
            })
            .collect();
        println!("sweep of {SEEDS} seeds took {:.1?}", start.elapsed());
        runs
    })
}

fn outcome<'a>(run: &'a [TaskOutcome], task: &str) -> &'a TaskOutcome {
    run.iter().find(|o| o.task.id == task).expect("task present")
}

fn criterion_1_score_identity() {
    let start = Instant::now();
    let w = ScoreWeights::default();
    // (task, method, cardinality, RMSE dB, total score) from the published table.
    let rows: [(&str, &str, usize, f64, f64); 13] = [
        ("1", "agent", 4, 3.736, -5.242),
        ("1", "full", 10, 4.823, -6.860),
        ("1", "random", 4, 5.725, -8.018),
        ("1", "mi_ge_em", 4, 3.829, -5.380),
        ("1", "mi_ge_struct", 4, 4.174, -5.633),
        ("2", "agent", 4, 2.664, -3.646),
        ("2", "full", 10, 6.153, -7.465),
        ("2", "random", 4, 8.750, -11.446),
        ("2", "mi_ge_em", 4, 3.083, -4.292),
        ("2", "mi_ge_struct", 4, 3.639, -4.599),
        ("3", "agent", 4, 3.377, -4.634),
        ("3-intersection", "agent", 4, 3.918, -5.399),
        ("3-square", "agent", 4, 2.731, -3.708),
    ];
    let ec1 = implied_trend_error(3.736, -5.242, 4, &w);
    let mut ok = (ec1 - 4.62).abs() < 1e-3;
    let mut details = vec![format!("task1 agent E_c = {ec1:.6}")];
    for (task, method, k, rmse, total) in rows {
        let ec = implied_trend_error(rmse, total, k, &w);
        // forward direction: the score rebuilt from the implied E_c is exact
        let mask = FeatureMask::from_indices(10, 0..k).unwrap();
        let back = total_score(rmse, ec, &mask, &w).unwrap().total;
        ok &= ec >= 0.0 && (back - total).abs() < 1e-12;
        details.push(format!("{task}/{method} {ec:.3}"));
    }
    let elapsed = start.elapsed();
    ok &= elapsed.as_secs_f64() < 1.0;
    verdict(1, ok, format!("{} ({elapsed:.1?})", details.join(", ")));
}

fn brute_entropy(p: &[f64]) -> f64 {
    let h = |q: f64| if q == 0.0 { 0.0 } else { -q * q.log2() };
    p.iter().map(|&q| h(q) + h(1.0 - q)).sum::<f64>() / p.len() as f64
}

fn brute_diversity(pop: &[Vec<bool>]) -> f64 {
    let n = pop[0].len() as f64;
    let mut sum = 0.0;
    let mut pairs = 0.0;
    for a in 0..pop.len() {
        for b in 0..pop.len() {
            if a < b {
                sum += pop[a].iter().zip(&pop[b]).filter(|(x, y)| x != y).count() as f64 / n;
                pairs += 1.0;
            }
        }
    }
    sum / pairs
}

fn criterion_2_diagnostics_oracles() {
    let start = Instant::now();
    let mut rng = seed::rng(2, &[]);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(1..=64usize);
        let p: Vec<f64> = (0..n)
            .map(|_| match rng.random_range(0..10) {
                0 => 0.0,
                1 => 1.0,
                _ => rng.random::<f64>(),
            })
            .collect();
        worst = worst.max((normalized_entropy(&p) - brute_entropy(&p)).abs());

        let size = rng.random_range(2..=30usize);
        let pop: Vec<Vec<bool>> = (0..size).map(|_| (0..n).map(|_| rng.random_bool(0.5)).collect()).collect();
        let masks: Vec<FeatureMask> = pop.iter().map(|b| FeatureMask::from_bools(b).unwrap()).collect();
        worst = worst.max((population_diversity(&masks).unwrap() - brute_diversity(&pop)).abs());
    }
    let half = normalized_entropy(&[0.5; 10]);
    let a = FeatureMask::from_bits(10, 0b00000_11111).unwrap();
    let b = FeatureMask::from_bits(10, 0b11111_00000).unwrap();
    let complementary = population_diversity(&[a, b]).unwrap();
    let elapsed = start.elapsed();
    let ok = worst <= 1e-12 && half == 1.0 && complementary == 1.0 && elapsed.as_secs_f64() < 5.0;
    verdict(
        2,
        ok,
        format!("max |Δ| = {worst:.2e} over 1000 draws, H(0.5) = {half}, D(complementary) = {complementary} ({elapsed:.1?})"),
    );
}

fn jaccard(a: &BTreeSet<usize>, b: &BTreeSet<usize>) -> f64 {
    a.intersection(b).count() as f64 / a.union(b).count() as f64
}

fn criterion_3_planted_recovery() {
    let mut hits = 0;
    let mut lines = Vec::new();
    let mut slowest: f64 = 0.0;
    for s in 0..SEEDS {
        let start = Instant::now();
        let mut rng = seed::rng(s, &[seed::label("planted-set")]);
        let k = 2 + (s as usize % 3);
        let mut relevant = sample(&mut rng, 10, k).into_vec();
        relevant.sort_unstable();
        let ds = planted_dataset(&PlantedSpec::new(relevant.clone()), s).unwrap();
        let cfg = SearchConfig {
            master_seed: s,
            ..Default::default()
        };
        let res = run_search(&ds, &cfg, &ScoreWeights::default(), &PredictorConfig::default()).unwrap();
        let found: BTreeSet<usize> = res.best_overall.mask.selected().collect();
        let j = jaccard(&found, &relevant.iter().copied().collect());
        hits += usize::from(j >= 0.75);
        slowest = slowest.max(start.elapsed().as_secs_f64());
        lines.push(format!("seed {s}: planted {relevant:?} found {found:?} J={j:.2}"));
    }
    for l in &lines {
        println!("  {l}");
    }
    verdict(
        3,
        hits >= 8 && slowest < 120.0,
        format!("Jaccard >= 0.75 in {hits}/{SEEDS} seeds, slowest seed {slowest:.1}s"),
    );
}

fn criterion_4_method_ordering() {
    let start = Instant::now();
    let runs = sweep();
    let tables: Vec<_> = runs.iter().map(|r| harness::table_of(r)).collect();
    let mut ok = true;
    let mut details = Vec::new();
    for task in ["task1", "task2"] {
        let c = harness::ordering_counts(&tables, task).unwrap();
        ok &= c.beats_full >= 8 && c.beats_random >= 8 && c.beats_both_mi >= 6;
        details.push(format!(
            "{task}: >=full {}/{n}, >=random {}/{n}, >=both MI {}/{n}",
            c.beats_full,
            c.beats_random,
            c.beats_both_mi,
            n = c.seeds
        ));
    }
    let elapsed = start.elapsed();
    ok &= elapsed.as_secs_f64() < 1800.0;
    verdict(4, ok, format!("{} ({elapsed:.1?})", details.join("; ")));
}

fn criterion_5_diagnostic_trends() {
    let runs = sweep();
    let mut ok = true;
    let mut details = Vec::new();
    for task in ["task1", "task2", "task3"] {
        let mut decreased = 0;
        let mut positive = 0;
        for run in runs {
            let search = &outcome(run, task).search;
            let h0 = search.records[0].entropy;
            let ht = search.final_policy.normalized_entropy();
            decreased += usize::from(ht < h0);
            positive += usize::from(search.records.iter().all(|r| r.diversity > 0.0));
        }
        ok &= decreased >= 8 && positive == SEEDS as usize;
        details.push(format!("{task}: H(T)<H(0) {decreased}/{SEEDS}, D>0 always {positive}/{SEEDS}"));
    }
    verdict(5, ok, details.join("; "));
}

fn criterion_6_subscenario_generalization() {
    let runs = sweep();
    let mut hits = 0;
    let mut lines = Vec::new();
    for (s, run) in runs.iter().enumerate() {
        let pooled = harness::table_of(run);
        let mut within = true;
        let mut parts = Vec::new();
        for (single, sub) in [("task1", "intersection"), ("task2", "square")] {
            let reference = pooled.get(single, Method::Agent).unwrap().rmse_val;
            let scoped = pooled.get_scoped("task3", Method::Agent, sub).unwrap().rmse_val;
            let rel = (scoped - reference).abs() / reference;
            within &= rel <= 0.15;
            parts.push(format!("{sub} {scoped:.3} vs {reference:.3} ({:+.1}%)", 100.0 * (scoped - reference) / reference));
        }
        hits += usize::from(within);
        lines.push(format!("seed {s}: {}", parts.join(", ")));
    }
    for l in &lines {
        println!("  {l}");
    }
    verdict(6, hits >= 7, format!("both sub-scenarios within 15% in {hits}/{SEEDS} seeds"));
}

fn tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn full_pipeline(out: &Path, jobs: usize) -> Vec<(String, Vec<u8>)> {
    let cfg = ExperimentConfig {
        master_seed: 11,
        output_dir: out.to_path_buf(),
        jobs,
        ..Default::default()
    };
    harness::with_jobs(jobs, || {
        harness::generate(&cfg)?;
        harness::run(&cfg, None)?;
        harness::report(&cfg.results_dir())
    })
    .unwrap()
    .unwrap();
    tree(out)
}

fn criterion_7_determinism() {
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    let a = full_pipeline(dirs[0].path(), 1);
    let b = full_pipeline(dirs[1].path(), 1);
    let c = full_pipeline(dirs[2].path(), 8);
    let bytes: usize = a.iter().map(|(_, v)| v.len()).sum();
    verdict(
        7,
        a == b && a == c,
        format!(
            "{} files / {bytes} bytes; rerun identical: {}, jobs 1 vs 8 identical: {}",
            a.len(),
            a == b,
            a == c
        ),
    );
}

fn criterion_8_unit_invariants() {
    let mut rng = seed::rng(8, &[]);
    let w = ScoreWeights::default();
    let mut failures = Vec::new();

    // scoring: strictly decreasing in each of rmse, E_c and cardinality
    for _ in 0..1000 {
        let r = rng.random_range(0.0..20.0);
        let e = rng.random_range(0.0..20.0);
        let k = rng.random_range(1..10usize);
        let d = rng.random_range(1e-6..5.0);
        let m = FeatureMask::from_indices(10, 0..k).unwrap();
        let m1 = FeatureMask::from_indices(10, 0..k + 1).unwrap();
        let base = total_score(r, e, &m, &w).unwrap().total;
        if !(total_score(r + d, e, &m, &w).unwrap().total < base
            && total_score(r, e + d, &m, &w).unwrap().total < base
            && total_score(r, e, &m1, &w).unwrap().total < base)
        {
            failures.push("scoring monotonicity");
            break;
        }
    }

    // crossover keeps each position's multiset; mutate at rate 0 is identity;
    // repair of an empty mask sets exactly one bit
    for _ in 0..1000 {
        let n = rng.random_range(1..=64usize);
        let bits = |rng: &mut rand_chacha::ChaCha8Rng| {
            let v: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
            FeatureMask::from_bools(&v).unwrap()
        };
        let a = bits(&mut rng);
        let b = bits(&mut rng);
        let (c, d) = crossover(&a, &b, &mut rng).unwrap();
        if (0..n).any(|i| u8::from(a.get(i)) + u8::from(b.get(i)) != u8::from(c.get(i)) + u8::from(d.get(i))) {
            failures.push("crossover multiset conservation");
            break;
        }
        if !a.is_empty() && mutate(&a, 0.0, &mut rng) != a {
            failures.push("mutation rate-0 identity");
            break;
        }
        let fixed = repair(FeatureMask::empty(n).unwrap(), &mut rng);
        if fixed.count() != 1 {
            failures.push("empty-mask repair");
            break;
        }
    }

    // split disjointness and standardization round trip
    for s in 0..20 {
        let ds = planted_dataset(&PlantedSpec::new(vec![0, 3]), s).unwrap();
        let parts: Vec<Vec<usize>> = [Split::Train, Split::Val, Split::Test]
            .map(|sp| ds.indices(sp).unwrap())
            .to_vec();
        let mut all: Vec<usize> = parts.concat();
        all.sort_unstable();
        if all != (0..ds.len()).collect::<Vec<_>>() {
            failures.push("split disjointness");
            break;
        }
        let raw: Dataset = ds.unstandardize().unwrap();
        let again = raw.standardize().unwrap().unstandardize().unwrap();
        let max_err = raw
            .samples()
            .iter()
            .zip(again.samples())
            .flat_map(|(x, y)| x.features.values().iter().zip(y.features.values()).map(|(p, q)| (p - q).abs()))
            .fold(0.0, f64::max);
        if max_err > 1e-12 {
            failures.push("standardization round trip");
            break;
        }
    }
    verdict(
        8,
        failures.is_empty(),
        if failures.is_empty() {
            "monotonicity, crossover conservation, rate-0 identity, repair, split disjointness, round trip".into()
        } else {
            format!("violated: {}", failures.join(", "))
        },
    );
}

fn main() {
    let criteria: [(u32, fn()); 8] = [
        (1, criterion_1_score_identity),
        (2, criterion_2_diagnostics_oracles),
        (3, criterion_3_planted_recovery),
        (4, criterion_4_method_ordering),
        (5, criterion_5_diagnostic_trends),
        (6, criterion_6_subscenario_generalization),
        (7, criterion_7_determinism),
        (8, criterion_8_unit_invariants),
    ];
    let failed: Vec<u32> = criteria
        .into_iter()
        .filter(|(_, f)| std::panic::catch_unwind(f).is_err())
        .map(|(n, _)| n)
        .collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", criteria.len());
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}

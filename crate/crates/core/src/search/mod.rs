//! Policy-guided evolutionary mask search.
//!
//! Each generation samples a population from a per-feature Bernoulli
//! policy, recombines and mutates it, scores every mask with the wrapped
//! predictor, and moves the policy toward the mean of the top-K masks.
//!
//! All randomness is pre-assigned: the stream used for candidate `i` of
//! generation `t` is keyed by `(master_seed, t, i)`. Mask evaluation is pure
//! and runs on the ambient rayon pool, so results are identical for any
//! worker count.

mod diagnostics;
mod mask;
mod operators;
mod policy;

use std::collections::HashMap;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{format_sig, Dataset};
use crate::error::{Error, Result};
use crate::predictor::{evaluate_mask, Learner};
use crate::scoring::{ScoreBreakdown, ScoreWeights};
use crate::seed;

pub use diagnostics::{normalized_entropy, population_diversity};
pub use mask::{FeatureMask, MAX_FEATURES};
pub use operators::{crossover, elite_mean, mutate, rank_order, repair, select_elites};
pub use policy::{sample_population, update_policy, Policy, PolicyBounds};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub mask: FeatureMask,
    pub breakdown: ScoreBreakdown,
}

impl Candidate {
    /// Total score; higher is better.
    pub fn score(&self) -> f64 {
        self.breakdown.total
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub population_size: usize,
    pub generations: usize,
    /// Policy update rate. Zero freezes the policy.
    pub eta: f64,
    /// Elite count; `None` means `max(1, ⌈0.2 P⌉)`.
    pub elite_count: Option<usize>,
    /// Probability that a random pair is recombined.
    pub crossover_prob: f64,
    /// Per-bit flip probability.
    pub mutation_rate: f64,
    pub initial_prob: f64,
    pub bounds: PolicyBounds,
    pub master_seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            population_size: 25,
            generations: 50,
            eta: 0.1,
            elite_count: None,
            crossover_prob: 0.5,
            mutation_rate: 0.1,
            initial_prob: 0.5,
            bounds: PolicyBounds::default(),
            master_seed: 0,
        }
    }
}

impl SearchConfig {
    pub fn elites(&self) -> usize {
        self.elite_count
            .unwrap_or_else(|| ((0.2 * self.population_size as f64).ceil() as usize).max(1))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.population_size < 2 {
            return bad(format!("population size must be >= 2, got {}", self.population_size));
        }
        if self.generations < 1 {
            return bad("generations must be >= 1".into());
        }
        let k = self.elites();
        if k < 1 || k > self.population_size {
            return bad(format!("elite count {k} must lie in 1..={}", self.population_size));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return bad(format!("eta must lie in [0, 1], got {}", self.eta));
        }
        for (name, v) in [
            ("crossover_prob", self.crossover_prob),
            ("mutation_rate", self.mutation_rate),
            ("initial_prob", self.initial_prob),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        self.bounds.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub t: usize,
    /// Policy that generated this population.
    pub policy_snapshot: Policy,
    pub best: Candidate,
    pub mean_score: f64,
    pub entropy: f64,
    pub diversity: f64,
    pub elite_masks: Vec<FeatureMask>,
    /// Masks evaluated in this generation, after the operators.
    pub population: Vec<FeatureMask>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub records: Vec<GenerationRecord>,
    /// Highest-scoring mask ever evaluated.
    pub best_overall: Candidate,
    /// Policy after the last update.
    pub final_policy: Policy,
    /// Number of distinct masks evaluated.
    pub evaluations: usize,
}

impl SearchResult {
    /// Best score seen up to and including each generation.
    pub fn best_so_far(&self) -> Vec<f64> {
        self.records
            .iter()
            .scan(f64::NEG_INFINITY, |acc, r| {
                *acc = acc.max(r.best.score());
                Some(*acc)
            })
            .collect()
    }

    /// Per-generation CSV: `t,best_score,mean_score,entropy,diversity,p1..pN,best_mask`.
    pub fn write_generations_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let n = self.final_policy.len();
        let probs: Vec<String> = (1..=n).map(|i| format!("p{i}")).collect();
        writeln!(w, "t,best_score,mean_score,entropy,diversity,{},best_mask", probs.join(","))?;
        for r in &self.records {
            let p: Vec<String> = r.policy_snapshot.probs().iter().map(|v| format_sig(*v, 9)).collect();
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.t,
                format_sig(r.best.score(), 9),
                format_sig(r.mean_score, 9),
                format_sig(r.entropy, 9),
                format_sig(r.diversity, 9),
                p.join(","),
                r.best.mask
            )?;
        }
        Ok(())
    }
}

const STREAM_SAMPLE: u64 = 1;
const STREAM_PAIRING: u64 = 2;
const STREAM_CROSSOVER: u64 = 3;
const STREAM_MUTATION: u64 = 4;

/// Runs the search on a split, standardized dataset.
pub fn run_search<L: Learner>(
    ds: &Dataset,
    cfg: &SearchConfig,
    weights: &ScoreWeights,
    learner: &L,
) -> Result<SearchResult> {
    cfg.validate()?;
    weights.validate()?;
    let n = ds.catalog().len();
    let p_size = cfg.population_size;
    let k = cfg.elites();
    let master = cfg.master_seed;
    let mut policy = Policy::uniform(n, cfg.initial_prob)?;
    let mut cache: HashMap<FeatureMask, Candidate> = HashMap::new();
    let mut records = Vec::with_capacity(cfg.generations);

    for t in 0..cfg.generations {
        let tt = t as u64;
        let mut masks: Vec<FeatureMask> = (0..p_size)
            .map(|i| policy.sample_mask(&mut seed::rng(master, &[tt, STREAM_SAMPLE, i as u64])))
            .collect();

        let mut order: Vec<usize> = (0..p_size).collect();
        order.shuffle(&mut seed::rng(master, &[tt, STREAM_PAIRING]));
        for (pair, chunk) in order.chunks_exact(2).enumerate() {
            let mut rng = seed::rng(master, &[tt, STREAM_CROSSOVER, pair as u64]);
            if rng.random_bool(cfg.crossover_prob) {
                let (a, b) = crossover(&masks[chunk[0]], &masks[chunk[1]], &mut rng)?;
                masks[chunk[0]] = a;
                masks[chunk[1]] = b;
            }
        }
        for (i, m) in masks.iter_mut().enumerate() {
            *m = mutate(m, cfg.mutation_rate, &mut seed::rng(master, &[tt, STREAM_MUTATION, i as u64]));
        }

        let mut fresh: Vec<FeatureMask> = masks.iter().filter(|m| !cache.contains_key(m)).copied().collect();
        fresh.sort_by_key(|m| m.bits());
        fresh.dedup();
        let evaluated = fresh
            .par_iter()
            .map(|&m| evaluate_mask(m, ds, weights, learner))
            .collect::<Result<Vec<_>>>()?;
        cache.extend(evaluated.into_iter().map(|c| (c.mask, c)));

        let cands: Vec<Candidate> = masks.iter().map(|m| cache[m]).collect();
        let elites = select_elites(&cands, k)?;
        let elite_masks: Vec<FeatureMask> = elites.iter().map(|c| c.mask).collect();
        let mean_score = cands.iter().map(Candidate::score).sum::<f64>() / p_size as f64;

        let next = if cfg.eta > 0.0 {
            update_policy(&policy, &elite_mean(&elite_masks)?, cfg.eta, cfg.bounds)?
        } else {
            policy.clone()
        };
        records.push(GenerationRecord {
            t,
            entropy: policy.normalized_entropy(),
            policy_snapshot: policy,
            best: elites[0],
            mean_score,
            diversity: population_diversity(&masks)?,
            elite_masks,
            population: masks,
        });
        policy = next;
    }

    let best_overall = *cache
        .values()
        .min_by(|a, b| rank_order(a, b))
        .expect("at least one generation evaluated");
    Ok(SearchResult {
        records,
        best_overall,
        final_policy: policy,
        evaluations: cache.len(),
    })
}

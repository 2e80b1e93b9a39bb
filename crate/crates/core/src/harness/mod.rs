//! Experiment orchestration: scenario generation, per-task agent search and
//! baselines, and the on-disk artifacts consumed by `report`.
//!
//! Layout under `output_dir`:
//!
//! ```text
//! data/<scenario>.csv, data/<scenario>.scene.json, data/pooled.csv
//! results/results.csv, results/baselines.csv, results/metadata.json
//! results/<task>/{generations,policy,diagnostics,predictions}.csv, task.json
//! results/report/summary.txt, results/report/fig_*.csv
//! ```

mod config;
mod io;
mod report;
mod results;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::baselines::{self, MiRanking, MiVariant};
use crate::dataset::{build_dataset_with, format_sig, Dataset, Split};
use crate::error::{Error, Result};
use crate::predictor::{fit_mask, predict_indices, score_model, EvalTarget};
use crate::scenario::{generate_scene, Scene};
use crate::search::{run_search, FeatureMask, SearchConfig, SearchResult};
use crate::seed;

pub use config::{ExperimentConfig, ScenarioSpec, TaskSpec, ENV_PREFIX};
pub use io::write_atomic;
pub use report::{report, ReportSummary};
pub use results::{Method, ResultRow, ResultsTable, SCOPE_ALL, VARIANT_MAIN, VARIANT_MEAN};

pub const POOLED_CSV: &str = "pooled.csv";
pub const RESULTS_CSV: &str = "results.csv";
pub const BASELINES_CSV: &str = "baselines.csv";
pub const METADATA_JSON: &str = "metadata.json";

/// Runs `f` on a pool of `jobs` threads (0 = one per core).
pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {jobs} worker threads: {e}")))?;
    Ok(pool.install(f))
}

#[derive(Clone, Debug)]
pub struct ScenarioData {
    pub id: String,
    pub scene: Scene,
    pub dataset: Dataset,
}

/// Generates every configured scene and its unsplit dataset.
pub fn build_scenarios(cfg: &ExperimentConfig) -> Result<Vec<ScenarioData>> {
    cfg.validate()?;
    cfg.scenarios
        .par_iter()
        .map(|spec| {
            let scene = generate_scene(&spec.scene, cfg.scene_seed(&spec.id))?;
            let dataset = build_dataset_with(std::slice::from_ref(&scene), &[&spec.id], &cfg.features)?;
            Ok(ScenarioData {
                id: spec.id.clone(),
                scene,
                dataset,
            })
        })
        .collect()
}

/// Writes one CSV and one scene dump per scenario plus a pooled CSV.
pub fn generate(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let scenarios = build_scenarios(cfg)?;
    let dir = cfg.data_dir();
    let mut written = Vec::new();
    for s in &scenarios {
        let csv = dir.join(format!("{}.csv", s.id));
        write_atomic(&csv, s.dataset.to_csv_string())?;
        let scene = dir.join(format!("{}.scene.json", s.id));
        write_atomic(&scene, s.scene.to_json()?)?;
        written.extend([csv, scene]);
    }
    let parts: Vec<&Dataset> = scenarios.iter().map(|s| &s.dataset).collect();
    let pooled = dir.join(POOLED_CSV);
    write_atomic(&pooled, Dataset::pool(&parts)?.to_csv_string())?;
    written.push(pooled);
    Ok(written)
}

/// Reads the per-scenario CSVs a task needs.
pub fn load_task_datasets(cfg: &ExperimentConfig, task: &TaskSpec) -> Result<Vec<Dataset>> {
    task.scenarios
        .iter()
        .map(|id| {
            let path = cfg.data_dir().join(format!("{id}.csv"));
            if !path.is_file() {
                return Err(Error::MissingDataset {
                    task: task.id.clone(),
                    path,
                });
            }
            Dataset::read_csv(&path)
        })
        .collect()
}

/// Pools a task's scenarios, splits them and standardizes on train.
pub fn prepare_task(cfg: &ExperimentConfig, parts: &[&Dataset]) -> Result<Dataset> {
    Dataset::pool(parts)?.split(cfg.split, cfg.split_seed())?.standardize()
}

pub fn search_task(cfg: &ExperimentConfig, task: &str, ds: &Dataset) -> Result<SearchResult> {
    let search = SearchConfig {
        master_seed: cfg.search_seed(task),
        ..cfg.search.clone()
    };
    run_search(ds, &search, &cfg.weights, &cfg.predictor)
}

/// Identifies one results row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RowKey<'a> {
    pub task: &'a str,
    pub method: Method,
    /// Restricts scoring to one scenario of a pooled task.
    pub scope: Option<&'a str>,
    pub variant: &'a str,
    pub features: String,
}

/// Fits `mask` on the train split and scores it on the validation and test
/// splits, optionally restricted to one scenario.
pub fn assess(cfg: &ExperimentConfig, key: RowKey<'_>, mask: FeatureMask, ds: &Dataset) -> Result<ResultRow> {
    let model = fit_mask(mask, ds, &cfg.predictor)?;
    let on = |split| {
        score_model(
            &model,
            mask,
            ds,
            &cfg.weights,
            &EvalTarget {
                split,
                scenario: key.scope,
            },
        )
    };
    let val = on(Split::Val)?;
    let test = on(Split::Test)?;
    Ok(ResultRow {
        task: key.task.to_string(),
        method: key.method,
        scope: key.scope.unwrap_or(SCOPE_ALL).to_string(),
        variant: key.variant.to_string(),
        features: key.features,
        cardinality: mask.count(),
        rmse_val: val.breakdown.rmse,
        rmse_test: test.breakdown.rmse,
        trend_error: val.breakdown.trend_error,
        total_score: val.breakdown.total,
    })
}

fn features_label(mask: FeatureMask) -> String {
    if mask.count() == mask.len() {
        "All".into()
    } else {
        mask.tuple_string()
    }
}

fn assess_mask(cfg: &ExperimentConfig, task: &str, method: Method, mask: FeatureMask, ds: &Dataset) -> Result<ResultRow> {
    let key = RowKey {
        task,
        method,
        scope: None,
        variant: VARIANT_MAIN,
        features: features_label(mask),
    };
    assess(cfg, key, mask, ds)
}

/// Baseline selections for one task.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BaselineSet {
    pub mi: MiRanking,
    pub mi_ge_struct: FeatureMask,
    pub mi_ge_em: FeatureMask,
    pub random: Vec<FeatureMask>,
}

pub fn baseline_masks(cfg: &ExperimentConfig, task: &str, ds: &Dataset, k: usize) -> Result<BaselineSet> {
    let n = ds.catalog().len();
    let random = (0..cfg.random_baseline_seeds)
        .map(|d| baselines::random_subset_mask(k, n, &mut seed::rng(cfg.random_seed(task, d), &[])))
        .collect::<Result<Vec<_>>>()?;
    Ok(BaselineSet {
        mi: baselines::mi_ranking(ds, cfg.mi_bins)?,
        mi_ge_struct: baselines::mi_category_subset_with(ds, MiVariant::GeStruct, cfg.mi_bins)?,
        mi_ge_em: baselines::mi_category_subset_with(ds, MiVariant::GeEm, cfg.mi_bins)?,
        random,
    })
}

/// Rows for full, random (mean plus per-draw) and both MI subsets. The
/// random subsets share the agent's cardinality `k`.
pub fn baseline_rows(cfg: &ExperimentConfig, task: &str, ds: &Dataset, set: &BaselineSet) -> Result<Vec<ResultRow>> {
    let n = ds.catalog().len();
    let full = assess_mask(cfg, task, Method::Full, baselines::full_feature_mask(n)?, ds)?;
    let draws = set
        .random
        .iter()
        .enumerate()
        .map(|(d, &m)| {
            let variant = format!("seed-{d}");
            let key = RowKey {
                task,
                method: Method::Random,
                scope: None,
                variant: &variant,
                features: m.tuple_string(),
            };
            assess(cfg, key, m, ds)
        })
        .collect::<Result<Vec<_>>>()?;
    let mean = |f: fn(&ResultRow) -> f64| draws.iter().map(f).sum::<f64>() / draws.len() as f64;
    let k = set.random.first().map_or(0, FeatureMask::count);
    let random_mean = ResultRow {
        task: task.to_string(),
        method: Method::Random,
        scope: SCOPE_ALL.into(),
        variant: VARIANT_MEAN.into(),
        features: format!("k={k}"),
        cardinality: k,
        rmse_val: mean(|r| r.rmse_val),
        rmse_test: mean(|r| r.rmse_test),
        trend_error: mean(|r| r.trend_error),
        total_score: mean(|r| r.total_score),
    };
    let mut rows = vec![
        full,
        random_mean,
        assess_mask(cfg, task, Method::MiGeStruct, set.mi_ge_struct, ds)?,
        assess_mask(cfg, task, Method::MiGeEm, set.mi_ge_em, ds)?,
    ];
    rows.extend(draws);
    Ok(rows)
}

#[derive(Clone, Debug)]
pub struct TaskOutcome {
    pub task: TaskSpec,
    /// Split and standardized task dataset.
    pub dataset: Dataset,
    pub search: SearchResult,
    pub baselines: BaselineSet,
    /// Agent row, baseline headline rows, pooled sub-scenario rows, then
    /// per-draw random rows.
    pub rows: Vec<ResultRow>,
}

impl TaskOutcome {
    pub fn agent_mask(&self) -> FeatureMask {
        self.search.best_overall.mask
    }
}

/// Agent search plus every baseline on a prepared task dataset.
pub fn run_task_on(cfg: &ExperimentConfig, task: &TaskSpec, ds: Dataset) -> Result<TaskOutcome> {
    let search = search_task(cfg, &task.id, &ds)?;
    let mask = search.best_overall.mask;
    let set = baseline_masks(cfg, &task.id, &ds, mask.count())?;
    let mut rows = vec![assess_mask(cfg, &task.id, Method::Agent, mask, &ds)?];
    let mut base = baseline_rows(cfg, &task.id, &ds, &set)?;
    let draws = base.split_off(4);
    rows.extend(base);
    if task.is_pooled() {
        for sub in &task.scenarios {
            let key = RowKey {
                task: &task.id,
                method: Method::Agent,
                scope: Some(sub),
                variant: VARIANT_MAIN,
                features: features_label(mask),
            };
            rows.push(assess(cfg, key, mask, &ds)?);
        }
    }
    rows.extend(draws);
    Ok(TaskOutcome {
        task: task.clone(),
        dataset: ds,
        search,
        baselines: set,
        rows,
    })
}

fn selected_tasks<'a>(cfg: &'a ExperimentConfig, only: Option<&str>) -> Result<Vec<&'a TaskSpec>> {
    match only {
        Some(id) => Ok(vec![cfg.task(id)?]),
        None => Ok(cfg.tasks.iter().collect()),
    }
}

/// Whole pipeline without touching the filesystem.
pub fn run_in_memory(cfg: &ExperimentConfig, only: Option<&str>) -> Result<Vec<TaskOutcome>> {
    let scenarios = build_scenarios(cfg)?;
    let by_id: BTreeMap<&str, &Dataset> = scenarios.iter().map(|s| (s.id.as_str(), &s.dataset)).collect();
    selected_tasks(cfg, only)?
        .into_iter()
        .map(|task| {
            let parts: Vec<&Dataset> = task.scenarios.iter().map(|id| by_id[id.as_str()]).collect();
            run_task_on(cfg, task, prepare_task(cfg, &parts)?)
        })
        .collect()
}

pub fn table_of(outcomes: &[TaskOutcome]) -> ResultsTable {
    ResultsTable {
        rows: outcomes.iter().flat_map(|o| o.rows.iter().cloned()).collect(),
    }
}

/// Runs the selected tasks (all by default) from the CSVs written by
/// [`generate`], writes all result artifacts and returns the table as
/// persisted.
pub fn run(cfg: &ExperimentConfig, only: Option<&str>) -> Result<ResultsTable> {
    cfg.validate()?;
    let tasks = selected_tasks(cfg, only)?;
    let mut outcomes = Vec::new();
    for task in tasks {
        let parts = load_task_datasets(cfg, task)?;
        let refs: Vec<&Dataset> = parts.iter().collect();
        let outcome = run_task_on(cfg, task, prepare_task(cfg, &refs)?)?;
        write_task_artifacts(cfg, &outcome)?;
        outcomes.push(outcome);
    }
    let fresh = table_of(&outcomes);
    let path = cfg.results_dir().join(RESULTS_CSV);
    let table = merge_into(cfg, &path, fresh)?;
    write_atomic(&path, table.to_csv())?;
    write_atomic(&cfg.results_dir().join(METADATA_JSON), metadata(cfg)?)?;
    ResultsTable::read_csv(&path)
}

/// Re-evaluates the baselines only. The random subsets take the agent
/// cardinality recorded in `results.csv` by a previous [`run`].
pub fn run_baselines(cfg: &ExperimentConfig, only: Option<&str>) -> Result<ResultsTable> {
    cfg.validate()?;
    let results = cfg.results_dir().join(RESULTS_CSV);
    if !results.is_file() {
        return Err(Error::MissingArtifacts(vec![results]));
    }
    let previous = ResultsTable::read_csv(&results)?;
    let mut rows = Vec::new();
    for task in selected_tasks(cfg, only)? {
        let k = previous
            .get(&task.id, Method::Agent)
            .ok_or_else(|| Error::MissingArtifacts(vec![results.clone()]))?
            .cardinality;
        let parts = load_task_datasets(cfg, task)?;
        let refs: Vec<&Dataset> = parts.iter().collect();
        let ds = prepare_task(cfg, &refs)?;
        let set = baseline_masks(cfg, &task.id, &ds, k)?;
        rows.extend(baseline_rows(cfg, &task.id, &ds, &set)?);
    }
    let path = cfg.results_dir().join(BASELINES_CSV);
    let table = merge_into(cfg, &path, ResultsTable { rows })?;
    write_atomic(&path, table.to_csv())?;
    ResultsTable::read_csv(&path)
}

/// Replaces the rows of freshly run tasks in the table at `path` and orders
/// rows by the configured task order.
fn merge_into(cfg: &ExperimentConfig, path: &Path, fresh: ResultsTable) -> Result<ResultsTable> {
    let mut rows = if path.is_file() {
        let done: Vec<&str> = fresh.tasks();
        ResultsTable::read_csv(path)?
            .rows
            .into_iter()
            .filter(|r| !done.contains(&r.task.as_str()))
            .collect()
    } else {
        Vec::new()
    };
    rows.extend(fresh.rows);
    let rank = |t: &str| cfg.tasks.iter().position(|s| s.id == t).unwrap_or(usize::MAX);
    rows.sort_by_key(|r| rank(&r.task));
    Ok(ResultsTable { rows })
}

/// Seeds and configuration echo. Excludes `jobs` and `output_dir`, which
/// do not affect results.
pub fn metadata(cfg: &ExperimentConfig) -> Result<String> {
    let mut config = serde_json::to_value(cfg)?;
    if let Some(obj) = config.as_object_mut() {
        obj.remove("jobs");
        obj.remove("output_dir");
    }
    let scene_seeds: BTreeMap<&str, u64> = cfg.scenarios.iter().map(|s| (s.id.as_str(), cfg.scene_seed(&s.id))).collect();
    let search_seeds: BTreeMap<&str, u64> = cfg.tasks.iter().map(|t| (t.id.as_str(), cfg.search_seed(&t.id))).collect();
    let doc = json!({
        "master_seed": cfg.master_seed,
        "split_seed": cfg.split_seed(),
        "scene_seeds": scene_seeds,
        "search_seeds": search_seeds,
        "config": config,
    });
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

fn csv_text(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = header.join(",") + "\n";
    for r in rows {
        out += &r.join(",");
        out.push('\n');
    }
    out
}

fn num(v: f64) -> String {
    format_sig(v, 9)
}

fn split_counts(ds: &Dataset) -> Result<BTreeMap<String, BTreeMap<&'static str, usize>>> {
    let labels = ds.split_labels().ok_or_else(|| Error::Dataset("dataset is not split".into()))?;
    let mut out: BTreeMap<String, BTreeMap<&'static str, usize>> = BTreeMap::new();
    for (s, l) in ds.samples().iter().zip(labels) {
        *out.entry(s.scenario_id.clone()).or_default().entry(l.as_str()).or_default() += 1;
    }
    Ok(out)
}

pub fn task_dir(cfg: &ExperimentConfig, task: &str) -> PathBuf {
    cfg.results_dir().join(task)
}

pub fn write_task_artifacts(cfg: &ExperimentConfig, o: &TaskOutcome) -> Result<()> {
    let dir = task_dir(cfg, &o.task.id);
    let n = o.search.final_policy.len();
    let probs: Vec<String> = (1..=n).map(|i| format!("p{i}")).collect();

    let mut generations = Vec::new();
    o.search
        .write_generations_csv(&mut generations)
        .map_err(|e| Error::io(dir.join("generations.csv"), e))?;
    write_atomic(&dir.join("generations.csv"), generations)?;

    let policies = o
        .search
        .records
        .iter()
        .map(|r| &r.policy_snapshot)
        .chain(std::iter::once(&o.search.final_policy));
    let header: Vec<String> = ["t".to_string(), "entropy".to_string()].into_iter().chain(probs).collect();
    let policy_rows = policies.enumerate().map(|(t, p)| {
        let mut row = vec![t.to_string(), num(p.normalized_entropy())];
        row.extend(p.probs().iter().map(|v| num(*v)));
        row
    });
    write_atomic(&dir.join("policy.csv"), csv_text(&header, policy_rows))?;

    let best = o.search.best_so_far();
    let header: Vec<String> = ["t", "entropy", "diversity", "best_score", "best_so_far", "mean_score"]
        .map(String::from)
        .to_vec();
    let diag_rows = o.search.records.iter().zip(&best).map(|(r, b)| {
        vec![
            r.t.to_string(),
            num(r.entropy),
            num(r.diversity),
            num(r.best.score()),
            num(*b),
            num(r.mean_score),
        ]
    });
    write_atomic(&dir.join("diagnostics.csv"), csv_text(&header, diag_rows))?;

    let mask = o.agent_mask();
    let model = fit_mask(mask, &o.dataset, &cfg.predictor)?;
    let all: Vec<usize> = (0..o.dataset.len()).collect();
    let pred = predict_indices(&model, mask, &o.dataset, &all)?;
    let labels = o.dataset.split_labels().ok_or_else(|| Error::Dataset("dataset is not split".into()))?;
    let header: Vec<String> = ["scenario_id", "route_index", "split", "path_loss", "predicted"].map(String::from).to_vec();
    let pred_rows = o.dataset.samples().iter().zip(&pred).zip(labels).map(|((s, p), l)| {
        vec![
            s.scenario_id.clone(),
            s.route_index.to_string(),
            l.as_str().to_string(),
            num(s.path_loss),
            num(*p),
        ]
    });
    write_atomic(&dir.join("predictions.csv"), csv_text(&header, pred_rows))?;

    let doc = json!({
        "task": o.task,
        "search_seed": cfg.search_seed(&o.task.id),
        "agent_mask": mask,
        "agent_features": mask.feature_indices(),
        "agent_score": o.search.best_overall.breakdown,
        "distinct_masks_evaluated": o.search.evaluations,
        "baselines": o.baselines,
        "split_counts": split_counts(&o.dataset)?,
    });
    write_atomic(&dir.join("task.json"), serde_json::to_string_pretty(&doc)? + "\n")
}

/// Per-seed outcome of a sweep.
#[derive(Clone, Debug)]
pub struct SweepRun {
    pub master_seed: u64,
    pub table: ResultsTable,
}

/// Win counts of the agent against each baseline over a sweep.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct OrderingCounts {
    pub seeds: usize,
    pub beats_full: usize,
    pub beats_random: usize,
    pub beats_mi_ge_struct: usize,
    pub beats_mi_ge_em: usize,
    pub beats_both_mi: usize,
}

/// Counts seeds in which the agent's total score is at least each
/// baseline's (random compared through its mean row).
pub fn ordering_counts<'a>(tables: impl IntoIterator<Item = &'a ResultsTable>, task: &str) -> Result<OrderingCounts> {
    let mut c = OrderingCounts::default();
    for t in tables {
        let score = |m| {
            t.get(task, m)
                .map(|r| r.total_score)
                .ok_or_else(|| Error::Config(format!("no {m} row for task `{task}`")))
        };
        let agent = score(Method::Agent)?;
        let beats = |m| -> Result<bool> { Ok(agent >= score(m)?) };
        c.seeds += 1;
        c.beats_full += usize::from(beats(Method::Full)?);
        c.beats_random += usize::from(beats(Method::Random)?);
        let s = beats(Method::MiGeStruct)?;
        let e = beats(Method::MiGeEm)?;
        c.beats_mi_ge_struct += usize::from(s);
        c.beats_mi_ge_em += usize::from(e);
        c.beats_both_mi += usize::from(s && e);
    }
    Ok(c)
}

/// Runs `generate` + `run` for master seeds `master_seed..master_seed+seeds`,
/// each under `output_dir/seed-<s>`, and writes `sweep.csv` and
/// `sweep_summary.txt` to `output_dir`.
pub fn sweep(cfg: &ExperimentConfig, seeds: usize) -> Result<Vec<SweepRun>> {
    if seeds == 0 {
        return Err(Error::Config("sweep needs at least one seed".into()));
    }
    let mut runs = Vec::with_capacity(seeds);
    for s in 0..seeds as u64 {
        let master_seed = cfg.master_seed.wrapping_add(s);
        let sub = ExperimentConfig {
            master_seed,
            output_dir: cfg.output_dir.join(format!("seed-{master_seed}")),
            ..cfg.clone()
        };
        generate(&sub)?;
        runs.push(SweepRun {
            master_seed,
            table: run(&sub, None)?,
        });
    }

    let mut csv = String::from("master_seed,");
    let mut body = String::new();
    for r in &runs {
        let text = r.table.to_csv();
        let mut lines = text.lines();
        if let Some(h) = lines.next() {
            if body.is_empty() {
                csv += h;
                csv.push('\n');
            }
        }
        for l in lines {
            body += &format!("{},{l}\n", r.master_seed);
        }
    }
    write_atomic(&cfg.output_dir.join("sweep.csv"), csv + &body)?;

    let mut summary = format!("seeds: {seeds} (master seeds {}..{})\n", cfg.master_seed, cfg.master_seed.wrapping_add(seeds as u64 - 1));
    for task in &cfg.tasks {
        let c = ordering_counts(runs.iter().map(|r| &r.table), &task.id)?;
        summary += &format!(
            "{}: agent >= full {}/{n}, >= random {}/{n}, >= mi_ge_struct {}/{n}, >= mi_ge_em {}/{n}, >= both mi {}/{n}\n",
            task.id,
            c.beats_full,
            c.beats_random,
            c.beats_mi_ge_struct,
            c.beats_mi_ge_em,
            c.beats_both_mi,
            n = c.seeds
        );
    }
    write_atomic(&cfg.output_dir.join("sweep_summary.txt"), summary)?;
    Ok(runs)
}

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dataset::SplitFractions;
use crate::error::{Error, Result};
use crate::predictor::PredictorConfig;
use crate::scenario::{FeatureParams, SceneConfig};
use crate::scoring::ScoreWeights;
use crate::search::SearchConfig;
use crate::seed;

/// Prefix for environment-variable overrides. Nested keys are joined with
/// `__`, e.g. `PATHSEL_SEARCH__GENERATIONS=20`.
pub const ENV_PREFIX: &str = "PATHSEL_";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub id: String,
    #[serde(default)]
    pub scene: SceneConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub id: String,
    /// One scenario for a single-scenario task; several for a pooled task.
    pub scenarios: Vec<String>,
}

impl TaskSpec {
    pub fn is_pooled(&self) -> bool {
        self.scenarios.len() > 1
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub scenarios: Vec<ScenarioSpec>,
    pub tasks: Vec<TaskSpec>,
    pub search: SearchConfig,
    pub weights: ScoreWeights,
    pub predictor: PredictorConfig,
    pub split: SplitFractions,
    pub features: FeatureParams,
    /// Number of random-subset baseline draws per task.
    pub random_baseline_seeds: usize,
    pub mi_bins: usize,
    pub output_dir: PathBuf,
    pub master_seed: u64,
    /// Worker threads for mask evaluation; 0 uses all cores.
    pub jobs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            scenarios: vec![
                ScenarioSpec {
                    id: "intersection".into(),
                    scene: SceneConfig::intersection(),
                },
                ScenarioSpec {
                    id: "square".into(),
                    scene: SceneConfig::square(),
                },
            ],
            tasks: vec![
                TaskSpec {
                    id: "task1".into(),
                    scenarios: vec!["intersection".into()],
                },
                TaskSpec {
                    id: "task2".into(),
                    scenarios: vec!["square".into()],
                },
                TaskSpec {
                    id: "task3".into(),
                    scenarios: vec!["intersection".into(), "square".into()],
                },
            ],
            search: SearchConfig::default(),
            weights: ScoreWeights::default(),
            predictor: PredictorConfig::default(),
            split: SplitFractions::default(),
            features: FeatureParams::default(),
            random_baseline_seeds: 10,
            mi_bins: crate::baselines::DEFAULT_MI_BINS,
            output_dir: PathBuf::from("out"),
            master_seed: 0,
            jobs: 0,
        }
    }
}

impl ExperimentConfig {
    /// Defaults, overlaid with the JSON file at `path` (if any), then with
    /// `PATHSEL_*` variables from `env`.
    pub fn load(path: Option<&Path>, env: impl IntoIterator<Item = (String, String)>) -> Result<Self> {
        let mut value = serde_json::to_value(ExperimentConfig::default())?;
        if let Some(path) = path {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let file: Value = serde_json::from_str(&text)?;
            merge(&mut value, file);
        }
        for (key, raw) in env {
            let Some(rest) = key.strip_prefix(ENV_PREFIX) else {
                continue;
            };
            let path: Vec<String> = rest.split("__").map(str::to_ascii_lowercase).collect();
            let parsed = serde_json::from_str(&raw).unwrap_or(Value::String(raw));
            set_path(&mut value, &path, parsed)
                .map_err(|m| Error::Config(format!("{key}: {m}")))?;
        }
        let cfg: ExperimentConfig = serde_json::from_value(value)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let mut ids = std::collections::HashSet::new();
        for s in &self.scenarios {
            if !ids.insert(s.id.as_str()) {
                return Err(Error::Config(format!("duplicate scenario id `{}`", s.id)));
            }
            if s.id.is_empty() || s.id.contains([',', '/', '\\']) || s.id == "pooled" {
                return Err(Error::Config(format!("invalid scenario id `{}`", s.id)));
            }
        }
        let mut task_ids = std::collections::HashSet::new();
        for t in &self.tasks {
            if !task_ids.insert(t.id.as_str()) {
                return Err(Error::Config(format!("duplicate task id `{}`", t.id)));
            }
            if t.scenarios.is_empty() {
                return Err(Error::Config(format!("task `{}` has no scenarios", t.id)));
            }
            for s in &t.scenarios {
                if !ids.contains(s.as_str()) {
                    return Err(Error::Config(format!(
                        "task `{}` references unknown scenario `{s}`",
                        t.id
                    )));
                }
            }
        }
        if self.random_baseline_seeds == 0 {
            return Err(Error::Config("random_baseline_seeds must be positive".into()));
        }
        self.search.validate()?;
        self.weights.validate()?;
        self.split.validate()
    }

    pub fn task(&self, id: &str) -> Result<&TaskSpec> {
        self.tasks
            .iter()
            .find(|t| t.id == id)
            .ok_or_else(|| Error::Config(format!("unknown task `{id}`")))
    }

    pub fn scenario(&self, id: &str) -> Result<&ScenarioSpec> {
        self.scenarios
            .iter()
            .find(|s| s.id == id)
            .ok_or_else(|| Error::Config(format!("unknown scenario `{id}`")))
    }

    pub fn scene_seed(&self, scenario: &str) -> u64 {
        seed::derive(self.master_seed, &[seed::label("scene"), seed::label(scenario)])
    }

    pub fn split_seed(&self) -> u64 {
        seed::derive(self.master_seed, &[seed::label("split")])
    }

    pub fn search_seed(&self, task: &str) -> u64 {
        seed::derive(self.master_seed, &[seed::label("search"), seed::label(task)])
    }

    pub fn random_seed(&self, task: &str, draw: usize) -> u64 {
        seed::derive(
            self.master_seed,
            &[seed::label("random"), seed::label(task), draw as u64],
        )
    }

    pub fn data_dir(&self) -> PathBuf {
        self.output_dir.join("data")
    }

    pub fn results_dir(&self) -> PathBuf {
        self.output_dir.join("results")
    }
}

fn merge(base: &mut Value, overlay: Value) {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn set_path(value: &mut Value, path: &[String], new: Value) -> std::result::Result<(), String> {
    let Some((head, rest)) = path.split_first() else {
        *value = new;
        return Ok(());
    };
    let child = match value {
        Value::Object(map) => map.entry(head.clone()).or_insert(Value::Null),
        Value::Array(items) => {
            let i: usize = head.parse().map_err(|_| format!("`{head}` is not an array index"))?;
            items
                .get_mut(i)
                .ok_or_else(|| format!("index {i} out of range"))?
        }
        Value::Null => {
            *value = Value::Object(Default::default());
            return set_path(value, path, new);
        }
        _ => return Err(format!("cannot descend into `{head}`")),
    };
    set_path(child, rest, new)
}

//! Feature/path-loss samples, stratified splits and train-fitted
//! standardization.

use std::collections::HashSet;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{self, FeatureCatalog, FeatureParams, FeatureVector, Scene, N_FEATURES};
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: FeatureVector,
    /// dB.
    pub path_loss: f64,
    pub route_index: usize,
    pub scenario_id: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        SplitFractions {
            train: 0.7,
            val: 0.15,
            test: 0.15,
        }
    }
}

impl SplitFractions {
    pub fn validate(&self) -> Result<()> {
        let all = [self.train, self.val, self.test];
        if all.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
            return Err(Error::Dataset("split fractions must be positive".into()));
        }
        if (all.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Dataset("split fractions must sum to 1".into()));
        }
        Ok(())
    }

    /// Per-split counts for a scenario of `n` samples.
    pub fn counts(&self, n: usize) -> (usize, usize, usize) {
        let train = (n as f64 * self.train).round() as usize;
        let val = ((n as f64 * self.val).round() as usize).min(n - train.min(n));
        (train.min(n), val, n - train.min(n) - val)
    }
}

/// Per-feature `(mean, std)` fitted on the training split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: [f64; N_FEATURES],
    pub std: [f64; N_FEATURES],
    /// Set for constant columns, whose std is recorded as 1.
    pub constant: [bool; N_FEATURES],
}

impl Standardization {
    pub fn fit<'a>(rows: impl IntoIterator<Item = &'a FeatureVector>) -> Result<Self> {
        let rows: Vec<&FeatureVector> = rows.into_iter().collect();
        if rows.is_empty() {
            return Err(Error::Dataset("cannot standardize with an empty train split".into()));
        }
        let n = rows.len() as f64;
        let mut mean = [0.0; N_FEATURES];
        let mut std = [0.0; N_FEATURES];
        let mut constant = [false; N_FEATURES];
        for j in 0..N_FEATURES {
            let m = rows.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[j] - m).powi(2)).sum::<f64>() / n;
            let s = var.sqrt();
            mean[j] = m;
            if s <= 1e-12 * m.abs().max(1.0) {
                std[j] = 1.0;
                constant[j] = true;
            } else {
                std[j] = s;
            }
        }
        Ok(Standardization {
            mean,
            std,
            constant,
        })
    }

    pub fn apply(&self, v: &FeatureVector) -> FeatureVector {
        FeatureVector(std::array::from_fn(|j| (v[j] - self.mean[j]) / self.std[j]))
    }

    pub fn invert(&self, v: &FeatureVector) -> FeatureVector {
        FeatureVector(std::array::from_fn(|j| v[j] * self.std[j] + self.mean[j]))
    }

    pub fn has_constant(&self) -> bool {
        self.constant.iter().any(|&c| c)
    }
}

/// Ordered samples with optional split labels and standardization.
///
/// Samples are grouped by scenario and kept in route order inside each
/// group. Operations return new datasets.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    samples: Vec<Sample>,
    catalog: FeatureCatalog,
    split: Option<Vec<Split>>,
    standardization: Option<Standardization>,
}

/// One sample per route point per scene, in route order.
pub fn build_dataset<S: AsRef<str>>(scenes: &[Scene], scenario_ids: &[S]) -> Result<Dataset> {
    build_dataset_with(scenes, scenario_ids, &FeatureParams::default())
}

pub fn build_dataset_with<S: AsRef<str>>(
    scenes: &[Scene],
    scenario_ids: &[S],
    params: &FeatureParams,
) -> Result<Dataset> {
    if scenes.len() != scenario_ids.len() {
        return Err(Error::Dataset(format!(
            "{} scenes but {} scenario ids",
            scenes.len(),
            scenario_ids.len()
        )));
    }
    let mut samples = Vec::new();
    for (scene, id) in scenes.iter().zip(scenario_ids) {
        for i in 0..scene.route_len() {
            samples.push(Sample {
                features: scenario::extract_features_with(scene, i, params)?,
                path_loss: scenario::ground_truth_path_loss(scene, i)?,
                route_index: i,
                scenario_id: id.as_ref().to_string(),
            });
        }
    }
    Dataset::from_samples(samples)
}

impl Dataset {
    pub fn from_samples(samples: Vec<Sample>) -> Result<Self> {
        let mut seen: HashSet<&str> = HashSet::new();
        for (i, s) in samples.iter().enumerate() {
            if !s.path_loss.is_finite() || !s.features.is_finite() {
                return Err(Error::Dataset(format!("sample {i} has non-finite values")));
            }
            let new_group = i == 0 || samples[i - 1].scenario_id != s.scenario_id;
            if new_group {
                if !seen.insert(&s.scenario_id) {
                    return Err(Error::Dataset(format!(
                        "duplicate or non-contiguous scenario id `{}`",
                        s.scenario_id
                    )));
                }
            } else if s.route_index <= samples[i - 1].route_index {
                return Err(Error::Dataset(format!(
                    "scenario `{}` is not in strictly increasing route order at sample {i}",
                    s.scenario_id
                )));
            }
        }
        Ok(Dataset {
            samples,
            catalog: FeatureCatalog::standard(),
            split: None,
            standardization: None,
        })
    }

    /// Concatenates datasets with distinct scenario ids. Split labels and
    /// standardization are dropped.
    pub fn pool(parts: &[&Dataset]) -> Result<Dataset> {
        let samples = parts.iter().flat_map(|d| d.samples.iter().cloned()).collect();
        Dataset::from_samples(samples)
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn catalog(&self) -> &FeatureCatalog {
        &self.catalog
    }

    pub fn split_labels(&self) -> Option<&[Split]> {
        self.split.as_deref()
    }

    pub fn standardization(&self) -> Option<&Standardization> {
        self.standardization.as_ref()
    }

    /// Scenario ids in dataset order.
    pub fn scenario_ids(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = Vec::new();
        for s in &self.samples {
            if ids.last() != Some(&s.scenario_id.as_str()) {
                ids.push(&s.scenario_id);
            }
        }
        ids
    }

    /// Indices of samples in `split`, in dataset order.
    pub fn indices(&self, split: Split) -> Result<Vec<usize>> {
        let labels = self
            .split
            .as_ref()
            .ok_or_else(|| Error::Dataset("dataset has no split assigned".into()))?;
        Ok(labels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == split)
            .map(|(i, _)| i)
            .collect())
    }

    /// Stratified split; each scenario is shuffled by its own stream keyed by
    /// `(seed, scenario_id)`, so a scenario's assignment does not depend on
    /// which other scenarios share the dataset.
    pub fn split(&self, fractions: SplitFractions, seed: u64) -> Result<Dataset> {
        fractions.validate()?;
        let mut labels = vec![Split::Train; self.samples.len()];
        let mut start = 0;
        for id in self.scenario_ids() {
            let len = self.samples[start..]
                .iter()
                .take_while(|s| s.scenario_id == id)
                .count();
            let (n_train, n_val, n_test) = fractions.counts(len);
            if n_train == 0 || n_val == 0 || n_test == 0 {
                return Err(Error::ScenarioTooSmall {
                    scenario: id.to_string(),
                    samples: len,
                });
            }
            let mut order: Vec<usize> = (start..start + len).collect();
            order.shuffle(&mut seed::rng(seed, &[seed::label("split"), seed::label(id)]));
            for (k, &i) in order.iter().enumerate() {
                labels[i] = if k < n_train {
                    Split::Train
                } else if k < n_train + n_val {
                    Split::Val
                } else {
                    Split::Test
                };
            }
            start += len;
        }
        Ok(Dataset {
            split: Some(labels),
            standardization: None,
            ..self.clone()
        })
    }

    /// Fits `(mean, std)` on the train split and applies it to all samples.
    pub fn standardize(&self) -> Result<Dataset> {
        if self.standardization.is_some() {
            return Err(Error::Dataset("dataset is already standardized".into()));
        }
        let train = self.indices(Split::Train)?;
        let st = Standardization::fit(train.iter().map(|&i| &self.samples[i].features))?;
        let samples = self
            .samples
            .iter()
            .map(|s| Sample {
                features: st.apply(&s.features),
                ..s.clone()
            })
            .collect();
        Ok(Dataset {
            samples,
            standardization: Some(st),
            ..self.clone()
        })
    }

    /// Inverse of [`Dataset::standardize`].
    pub fn unstandardize(&self) -> Result<Dataset> {
        let st = self
            .standardization
            .as_ref()
            .ok_or_else(|| Error::Dataset("dataset is not standardized".into()))?;
        let samples = self
            .samples
            .iter()
            .map(|s| Sample {
                features: st.invert(&s.features),
                ..s.clone()
            })
            .collect();
        Ok(Dataset {
            samples,
            standardization: None,
            ..self.clone()
        })
    }

    /// Samples of one scenario, keeping split labels and standardization.
    pub fn scenario(&self, id: &str) -> Result<Dataset> {
        let keep: Vec<usize> = (0..self.samples.len())
            .filter(|&i| self.samples[i].scenario_id == id)
            .collect();
        if keep.is_empty() {
            return Err(Error::Dataset(format!("no scenario `{id}` in dataset")));
        }
        Ok(Dataset {
            samples: keep.iter().map(|&i| self.samples[i].clone()).collect(),
            catalog: self.catalog.clone(),
            split: self
                .split
                .as_ref()
                .map(|l| keep.iter().map(|&i| l[i]).collect()),
            standardization: self.standardization.clone(),
        })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        self.write_records(&mut w).map_err(|e| Error::csv(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn to_csv_string(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        self.write_records(&mut w).expect("writing to memory");
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }

    fn write_records<W: std::io::Write>(&self, w: &mut csv::Writer<W>) -> csv::Result<()> {
        let mut header = vec!["scenario_id".to_string(), "route_index".to_string()];
        header.extend((1..=N_FEATURES).map(|i| format!("f{i}")));
        header.push("path_loss".into());
        w.write_record(&header)?;
        for s in &self.samples {
            let mut row = vec![s.scenario_id.clone(), s.route_index.to_string()];
            row.extend(s.features.0.iter().map(|v| format_sig(*v, 9)));
            row.push(format_sig(s.path_loss, 9));
            w.write_record(&row)?;
        }
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Dataset> {
        let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
        let headers = r.headers().map_err(|e| Error::csv(path, e))?.clone();
        if headers.len() != N_FEATURES + 3 || &headers[0] != "scenario_id" {
            return Err(Error::Dataset(format!(
                "{}: unexpected header `{}`",
                path.display(),
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let bad = |line: usize, what: &str| {
            Error::Dataset(format!("{}: line {line}: bad {what}", path.display()))
        };
        let mut samples = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| Error::csv(path, e))?;
            let line = line + 2;
            let num = |k: usize| -> Result<f64> {
                rec[k].trim().parse::<f64>().map_err(|_| bad(line, &headers[k]))
            };
            let route_index = rec[1]
                .trim()
                .parse::<usize>()
                .map_err(|_| bad(line, "route_index"))?;
            let mut f = [0.0; N_FEATURES];
            for (j, v) in f.iter_mut().enumerate() {
                *v = num(j + 2)?;
            }
            samples.push(Sample {
                features: FeatureVector(f),
                path_loss: num(N_FEATURES + 2)?,
                route_index,
                scenario_id: rec[0].to_string(),
            });
        }
        Dataset::from_samples(samples)
    }
}

/// Fixed-point decimal text with `digits` significant digits.
pub fn format_sig(v: f64, digits: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{:.*}", digits.saturating_sub(1), if v == 0.0 { 0.0 } else { v });
    }
    let magnitude = v.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - magnitude).max(0) as usize;
    let s = format!("{v:.decimals$}");
    // rounding may carry into a new leading digit (9.99.. -> 10.0..)
    let lead = s.trim_start_matches('-').split('.').next().unwrap_or("");
    if decimals > 0 && lead.trim_start_matches('0').len() as i64 > (magnitude + 1).max(0) {
        format!("{v:.*}", decimals - 1)
    } else {
        s
    }
}

/// A synthetic dataset whose target depends only on a known feature subset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantedSpec {
    /// 0-based positions the target depends on.
    pub relevant: Vec<usize>,
    pub n_samples: usize,
    /// Additive Gaussian noise, dB.
    pub noise_sd: f64,
    /// Range of the absolute linear coefficients.
    pub coefficient_range: (f64, f64),
    pub fractions: SplitFractions,
}

impl PlantedSpec {
    pub fn new(relevant: Vec<usize>) -> Self {
        PlantedSpec {
            relevant,
            n_samples: 800,
            noise_sd: 1.0,
            coefficient_range: (3.0, 5.0),
            fractions: SplitFractions::default(),
        }
    }
}

/// Builds a split, standardized single-scenario dataset where
/// `y = 100 + Σ_{j ∈ relevant} (a_j z_j + 0.5 z_j²) + ε`, `z ~ N(0, 1)` i.i.d.
/// per feature. Raw columns are affinely distorted so standardization has
/// work to do.
pub fn planted_dataset(spec: &PlantedSpec, seed: u64) -> Result<Dataset> {
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    if spec.relevant.iter().any(|&j| j >= N_FEATURES) {
        return Err(Error::Dataset("planted feature out of range".into()));
    }
    let mut rng = seed::rng(seed, &[seed::label("planted")]);
    let (lo, hi) = spec.coefficient_range;
    let coef: Vec<f64> = spec
        .relevant
        .iter()
        .enumerate()
        .map(|(k, _)| {
            let a = rng.random_range(lo..=hi);
            if k % 2 == 0 { a } else { -a }
        })
        .collect();
    let samples = (0..spec.n_samples)
        .map(|i| {
            let z: [f64; N_FEATURES] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
            let noise: f64 = StandardNormal.sample(&mut rng);
            let signal: f64 = spec
                .relevant
                .iter()
                .zip(&coef)
                .map(|(&j, a)| a * z[j] + 0.5 * z[j] * z[j])
                .sum();
            Sample {
                features: FeatureVector(std::array::from_fn(|j| 50.0 + 10.0 * (j as f64 + 1.0) * z[j])),
                path_loss: 100.0 + signal + spec.noise_sd * noise,
                route_index: i,
                scenario_id: "planted".into(),
            }
        })
        .collect();
    Dataset::from_samples(samples)?
        .split(spec.fractions, seed)?
        .standardize()
}

//! Task score: validation RMSE, trend-consistency error and a sparsity
//! penalty combined into one higher-is-better number.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::search::FeatureMask;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScoreWeights {
    pub lambda_c: f64,
    pub lambda_n: f64,
    pub n_features: usize,
}

impl Default for ScoreWeights {
    fn default() -> Self {
        ScoreWeights {
            lambda_c: 0.3,
            lambda_n: 0.3,
            n_features: crate::scenario::N_FEATURES,
        }
    }
}

impl ScoreWeights {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !ok(self.lambda_c) || !ok(self.lambda_n) {
            return Err(Error::Score("weights must be finite and non-negative".into()));
        }
        if self.n_features == 0 {
            return Err(Error::Score("n_features must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    pub rmse: f64,
    pub trend_error: f64,
    pub cardinality: usize,
    pub total: f64,
}

pub fn rmse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::Dimension {
            expected: truth.len(),
            got: pred.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::Score("rmse of empty sequence".into()));
    }
    let sse: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t).powi(2)).sum();
    Ok((sse / pred.len() as f64).sqrt())
}

/// RMSE between first differences of `pred` and `truth`.
///
/// `groups[i]` names the scenario of element `i`; sequences must already be
/// in route order inside each scenario. Only consecutive elements of the
/// same scenario form a pair.
pub fn trend_consistency_error<G: PartialEq>(pred: &[f64], truth: &[f64], groups: &[G]) -> Result<f64> {
    if pred.len() != truth.len() || groups.len() != truth.len() {
        return Err(Error::Dimension {
            expected: truth.len(),
            got: pred.len().min(groups.len()),
        });
    }
    let mut sse = 0.0;
    let mut pairs = 0usize;
    for i in 1..pred.len() {
        if groups[i] != groups[i - 1] {
            continue;
        }
        let dp = pred[i] - pred[i - 1];
        let dt = truth[i] - truth[i - 1];
        sse += (dp - dt).powi(2);
        pairs += 1;
    }
    if pairs == 0 {
        return Err(Error::Score(
            "trend error needs a scenario with at least 2 ordered samples".into(),
        ));
    }
    Ok((sse / pairs as f64).sqrt())
}

pub fn total_score(rmse: f64, trend_error: f64, mask: &FeatureMask, w: &ScoreWeights) -> Result<ScoreBreakdown> {
    w.validate()?;
    if !(rmse.is_finite() && rmse >= 0.0) || !(trend_error.is_finite() && trend_error >= 0.0) {
        return Err(Error::Score(format!(
            "rmse ({rmse}) and trend error ({trend_error}) must be finite and non-negative"
        )));
    }
    let cardinality = mask.count();
    if cardinality == 0 {
        return Err(Error::Score("empty feature mask".into()));
    }
    let sparsity = w.lambda_n * cardinality as f64 / w.n_features as f64;
    Ok(ScoreBreakdown {
        rmse,
        trend_error,
        cardinality,
        total: -(rmse + w.lambda_c * trend_error + sparsity),
    })
}

/// Recovers the trend error implied by a published `(rmse, total)` pair.
pub fn implied_trend_error(rmse: f64, total: f64, cardinality: usize, w: &ScoreWeights) -> f64 {
    (-total - rmse - w.lambda_n * cardinality as f64 / w.n_features as f64) / w.lambda_c
}

//! Path loss regressors used as the fitness oracle of the mask search.
//!
//! The search only needs something that can be fit on the masked training
//! features and queried on validation rows; [`Learner`] is that seam. The
//! default [`PredictorConfig`] is closed-form ridge regression over a linear
//! or full quadratic expansion of the selected features.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Split};
use crate::error::{Error, Result};
use crate::scoring::{self, ScoreWeights};
use crate::search::{Candidate, FeatureMask};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Linear,
    /// All monomials of degree ≤ 2 over the selected features.
    Quadratic,
}

impl Basis {
    /// Expanded size for `k` selected features, intercept excluded.
    pub fn size(self, k: usize) -> usize {
        match self {
            Basis::Linear => k,
            Basis::Quadratic => k + k * (k + 1) / 2,
        }
    }

    pub fn expand(self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(x);
        if self == Basis::Quadratic {
            for i in 0..x.len() {
                for j in i..x.len() {
                    out.push(x[i] * x[j]);
                }
            }
        }
    }
}

/// Ridge regression settings; also the default [`Learner`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PredictorConfig {
    pub basis: Basis,
    pub ridge_lambda: f64,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        PredictorConfig {
            basis: Basis::Quadratic,
            ridge_lambda: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictorModel {
    pub mask: FeatureMask,
    pub basis: Basis,
    pub ridge_lambda: f64,
    /// One weight per expanded basis term.
    pub weights: Vec<f64>,
    pub intercept: f64,
}

pub trait Regressor {
    /// Prediction for one masked feature row.
    fn predict(&self, features: &[f64]) -> Result<f64>;
}

pub trait Learner: Sync {
    type Model: Regressor + Send;

    /// Fits on masked rows: `rows[i].len() == mask.count()`.
    fn fit(&self, mask: FeatureMask, rows: &[Vec<f64>], y: &[f64]) -> Result<Self::Model>;
}

impl Learner for PredictorConfig {
    type Model = PredictorModel;

    fn fit(&self, mask: FeatureMask, rows: &[Vec<f64>], y: &[f64]) -> Result<PredictorModel> {
        fit(mask, rows, y, self)
    }
}

/// Closed-form ridge fit with an unpenalized intercept.
pub fn fit(mask: FeatureMask, rows: &[Vec<f64>], y: &[f64], cfg: &PredictorConfig) -> Result<PredictorModel> {
    let k = mask.count();
    if k == 0 {
        return Err(Error::Fit("empty feature mask".into()));
    }
    if rows.len() < 2 {
        return Err(Error::Fit(format!("need at least 2 samples, got {}", rows.len())));
    }
    if rows.len() != y.len() {
        return Err(Error::Dimension {
            expected: rows.len(),
            got: y.len(),
        });
    }
    if !(cfg.ridge_lambda >= 0.0 && cfg.ridge_lambda.is_finite()) {
        return Err(Error::Fit("ridge_lambda must be finite and non-negative".into()));
    }
    let p = cfg.basis.size(k) + 1;
    let mut gram = DMatrix::<f64>::zeros(p, p);
    let mut rhs = DVector::<f64>::zeros(p);
    let mut phi = Vec::with_capacity(p);
    let mut row = Vec::with_capacity(p);
    for (x, &target) in rows.iter().zip(y) {
        if x.len() != k {
            return Err(Error::Dimension {
                expected: k,
                got: x.len(),
            });
        }
        cfg.basis.expand(x, &mut phi);
        row.clear();
        row.push(1.0);
        row.extend_from_slice(&phi);
        for i in 0..p {
            rhs[i] += row[i] * target;
            for j in i..p {
                gram[(i, j)] += row[i] * row[j];
            }
        }
    }
    for i in 0..p {
        for j in 0..i {
            gram[(i, j)] = gram[(j, i)];
        }
        if i > 0 {
            gram[(i, i)] += cfg.ridge_lambda;
        }
    }

    let singular = || -> Error {
        if cfg.ridge_lambda == 0.0 {
            Error::Singular { lambda: 0.0 }
        } else {
            Error::Fit("normal equations are not positive definite".into())
        }
    };
    let chol = gram.clone().cholesky().ok_or_else(singular)?;
    if cfg.ridge_lambda == 0.0 {
        let diag = chol.l_dirty().diagonal();
        let max = diag.amax();
        if diag.iter().any(|d| d * d <= 1e-12 * max * max) {
            return Err(singular());
        }
    }
    let sol = chol.solve(&rhs);
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(singular());
    }
    Ok(PredictorModel {
        mask,
        basis: cfg.basis,
        ridge_lambda: cfg.ridge_lambda,
        weights: sol.iter().skip(1).copied().collect(),
        intercept: sol[0],
    })
}

impl Regressor for PredictorModel {
    fn predict(&self, features: &[f64]) -> Result<f64> {
        if features.len() != self.mask.count() {
            return Err(Error::Dimension {
                expected: self.mask.count(),
                got: features.len(),
            });
        }
        let mut phi = Vec::with_capacity(self.weights.len());
        self.basis.expand(features, &mut phi);
        Ok(self.intercept + phi.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>())
    }
}

pub fn predict(model: &PredictorModel, features: &[f64]) -> Result<f64> {
    model.predict(features)
}

/// Which samples a mask is scored on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvalTarget<'a> {
    pub split: Split,
    /// Restrict scoring to one scenario of a pooled dataset.
    pub scenario: Option<&'a str>,
}

impl EvalTarget<'_> {
    pub const VALIDATION: EvalTarget<'static> = EvalTarget {
        split: Split::Val,
        scenario: None,
    };
}

/// Fits `learner` on the train split restricted to `mask`.
pub fn fit_mask<L: Learner>(mask: FeatureMask, ds: &Dataset, learner: &L) -> Result<L::Model> {
    let train = ds.indices(Split::Train)?;
    let rows: Vec<Vec<f64>> = train
        .iter()
        .map(|&i| mask.select(ds.samples()[i].features.values()))
        .collect();
    let y: Vec<f64> = train.iter().map(|&i| ds.samples()[i].path_loss).collect();
    learner.fit(mask, &rows, &y)
}

/// Sample indices of `target`, in dataset (route) order.
pub fn target_indices(ds: &Dataset, target: &EvalTarget<'_>) -> Result<Vec<usize>> {
    let idx: Vec<usize> = ds
        .indices(target.split)?
        .into_iter()
        .filter(|&i| target.scenario.is_none_or(|s| ds.samples()[i].scenario_id == s))
        .collect();
    if idx.is_empty() {
        return Err(Error::Dataset(format!(
            "no {} samples for scenario {:?}",
            target.split.as_str(),
            target.scenario
        )));
    }
    Ok(idx)
}

pub fn predict_indices<M: Regressor>(model: &M, mask: FeatureMask, ds: &Dataset, idx: &[usize]) -> Result<Vec<f64>> {
    idx.iter()
        .map(|&i| model.predict(&mask.select(ds.samples()[i].features.values())))
        .collect()
}

/// Scores an already fitted model on `target`.
pub fn score_model<M: Regressor>(
    model: &M,
    mask: FeatureMask,
    ds: &Dataset,
    weights: &ScoreWeights,
    target: &EvalTarget<'_>,
) -> Result<Candidate> {
    let idx = target_indices(ds, target)?;
    let pred = predict_indices(model, mask, ds, &idx)?;
    let truth: Vec<f64> = idx.iter().map(|&i| ds.samples()[i].path_loss).collect();
    let groups: Vec<&str> = idx.iter().map(|&i| ds.samples()[i].scenario_id.as_str()).collect();
    let rmse = scoring::rmse(&pred, &truth)?;
    let trend = scoring::trend_consistency_error(&pred, &truth, &groups)?;
    Ok(Candidate {
        mask,
        breakdown: scoring::total_score(rmse, trend, &mask, weights)?,
    })
}

/// Fits on the train split under `mask` and scores on `target`.
pub fn evaluate_mask_on<L: Learner>(
    mask: FeatureMask,
    ds: &Dataset,
    weights: &ScoreWeights,
    learner: &L,
    target: &EvalTarget<'_>,
) -> Result<Candidate> {
    if ds.standardization().is_none() {
        return Err(Error::Dataset("evaluate_mask needs a standardized dataset".into()));
    }
    let model = fit_mask(mask, ds, learner)?;
    score_model(&model, mask, ds, weights, target)
}

/// Validation score of `mask`.
pub fn evaluate_mask<L: Learner>(mask: FeatureMask, ds: &Dataset, weights: &ScoreWeights, learner: &L) -> Result<Candidate> {
    evaluate_mask_on(mask, ds, weights, learner, &EvalTarget::VALIDATION)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{planted_dataset, PlantedSpec};
    use rand::Rng;

    fn one() -> FeatureMask {
        FeatureMask::full(1).unwrap()
    }

    fn linear(lambda: f64) -> PredictorConfig {
        PredictorConfig {
            basis: Basis::Linear,
            ridge_lambda: lambda,
        }
    }

    /// Gauss–Jordan elimination with partial pivoting on XᵀX w = Xᵀy.
    #[allow(clippy::needless_range_loop)]
    fn brute_normal_equations(x: &[Vec<f64>], y: &[f64], lambda: f64) -> Vec<f64> {
        let p = x[0].len() + 1;
        let design: Vec<Vec<f64>> = x
            .iter()
            .map(|r| std::iter::once(1.0).chain(r.iter().copied()).collect())
            .collect();
        let mut a = vec![vec![0.0; p + 1]; p];
        for i in 0..p {
            for j in 0..p {
                a[i][j] = design.iter().map(|r| r[i] * r[j]).sum();
            }
            a[i][p] = design.iter().zip(y).map(|(r, t)| r[i] * t).sum();
            if i > 0 {
                a[i][i] += lambda;
            }
        }
        for c in 0..p {
            let piv = (c..p).max_by(|&r, &s| a[r][c].abs().total_cmp(&a[s][c].abs())).unwrap();
            a.swap(c, piv);
            for r in 0..p {
                if r != c {
                    let f = a[r][c] / a[c][c];
                    for k in c..=p {
                        a[r][k] -= f * a[c][k];
                    }
                }
            }
        }
        (0..p).map(|i| a[i][p] / a[i][i]).collect()
    }

    #[test]
    fn exact_linear_target() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 / 4.0 - 2.0]).collect();
        let y: Vec<f64> = rows.iter().map(|r| 2.0 * r[0]).collect();
        let model = fit(one(), &rows, &y, &linear(1e-9)).unwrap();
        assert!((model.weights[0] - 2.0).abs() < 1e-6);
        assert!(model.intercept.abs() < 1e-6);
        for (r, t) in rows.iter().zip(&y) {
            assert!((model.predict(r).unwrap() - t).abs() < 1e-6);
        }
    }

    #[test]
    fn constant_target() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64 - 4.5, (i * i) as f64 / 10.0 - 2.85]).collect();
        let y = vec![42.0; 10];
        let model = fit(FeatureMask::full(2).unwrap(), &rows, &y, &PredictorConfig::default()).unwrap();
        assert!((model.intercept - 42.0).abs() < 1e-6);
        assert!(model.weights.iter().all(|w| w.abs() < 1e-6));
    }

    #[test]
    fn matches_brute_force_solve() {
        let mut rng = crate::seed::rng(12, &[]);
        let x: Vec<Vec<f64>> = (0..50).map(|_| (0..5).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|r| 3.0 + r[0] - 2.0 * r[3] + 0.5 * r[4] + rng.random_range(-0.1..0.1))
            .collect();
        for lambda in [0.0, 1e-3, 0.5] {
            let model = fit(FeatureMask::full(5).unwrap(), &x, &y, &linear(lambda)).unwrap();
            let oracle = brute_normal_equations(&x, &y, lambda);
            assert!((model.intercept - oracle[0]).abs() < 1e-8);
            for (w, o) in model.weights.iter().zip(&oracle[1..]) {
                assert!((w - o).abs() < 1e-8, "{w} vs {o}");
            }
        }
    }

    #[test]
    fn quadratic_basis_layout() {
        assert_eq!(Basis::Quadratic.size(10), 65);
        assert_eq!(Basis::Linear.size(4), 4);
        let mut out = Vec::new();
        Basis::Quadratic.expand(&[2.0, 3.0], &mut out);
        assert_eq!(out, vec![2.0, 3.0, 4.0, 6.0, 9.0]);
    }

    #[test]
    fn predict_examples() {
        let flat = PredictorModel {
            mask: FeatureMask::full(3).unwrap(),
            basis: Basis::Linear,
            ridge_lambda: 0.0,
            weights: vec![0.0; 3],
            intercept: 100.0,
        };
        assert_eq!(flat.predict(&[1.0, -5.0, 9.0]).unwrap(), 100.0);
        let line = PredictorModel {
            mask: one(),
            basis: Basis::Linear,
            ridge_lambda: 0.0,
            weights: vec![2.0],
            intercept: 1.0,
        };
        assert_eq!(predict(&line, &[3.0]).unwrap(), 7.0);
        assert!(matches!(line.predict(&[1.0, 2.0]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn singular_without_ridge() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let err = fit(FeatureMask::full(2).unwrap(), &rows, &y, &linear(0.0)).unwrap_err();
        assert!(matches!(err, Error::Singular { .. }), "{err:?}");
        assert!(fit(FeatureMask::full(2).unwrap(), &rows, &y, &linear(1e-3)).is_ok());
        assert!(fit(one(), &[vec![1.0]], &[1.0], &linear(1.0)).is_err());
    }

    #[test]
    fn scale_consistency() {
        let mut rng = crate::seed::rng(77, &[]);
        let x: Vec<Vec<f64>> = (0..40).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let y: Vec<f64> = x.iter().map(|r| 5.0 + r[0] - r[1] + rng.random_range(-0.2..0.2)).collect();
        let y2: Vec<f64> = y.iter().map(|v| 2.0 * v).collect();
        let m = FeatureMask::full(3).unwrap();
        let a = fit(m, &x, &y, &linear(1e-12)).unwrap();
        let b = fit(m, &x, &y2, &linear(1e-12)).unwrap();
        assert!((b.intercept - 2.0 * a.intercept).abs() < 1e-6);
        for (wa, wb) in a.weights.iter().zip(&b.weights) {
            assert!((wb - 2.0 * wa).abs() < 1e-6);
        }
    }

    #[test]
    fn evaluate_mask_properties() {
        let ds = planted_dataset(&PlantedSpec::new(vec![0]), 5).unwrap();
        let w = ScoreWeights::default();
        let cfg = PredictorConfig::default();
        let full = evaluate_mask(FeatureMask::full(10).unwrap(), &ds, &w, &cfg).unwrap();
        assert_eq!(full.breakdown.cardinality, 10);
        let f1 = FeatureMask::from_indices(10, [0]).unwrap();
        let f6 = FeatureMask::from_indices(10, [5]).unwrap();
        let a = evaluate_mask(f1, &ds, &w, &cfg).unwrap();
        assert_eq!(a, evaluate_mask(f1, &ds, &w, &cfg).unwrap());
        let b = evaluate_mask(f6, &ds, &w, &cfg).unwrap();
        assert!(a.score() > b.score(), "{} vs {}", a.score(), b.score());
    }

    #[test]
    fn evaluate_needs_standardized_split() {
        let ds = planted_dataset(&PlantedSpec::new(vec![0]), 5).unwrap();
        let raw = ds.unstandardize().unwrap();
        let m = FeatureMask::full(10).unwrap();
        assert!(evaluate_mask(m, &raw, &ScoreWeights::default(), &PredictorConfig::default()).is_err());
    }
}

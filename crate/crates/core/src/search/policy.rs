use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{operators::repair, FeatureMask};
use crate::error::{Error, Result};

/// Bernoulli selection probabilities, one per feature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    probs: Vec<f64>,
}

/// Probability clamp applied after every policy update.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicyBounds {
    pub floor: f64,
    pub ceil: f64,
}

impl Default for PolicyBounds {
    fn default() -> Self {
        PolicyBounds {
            floor: 0.02,
            ceil: 0.98,
        }
    }
}

impl PolicyBounds {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.floor && self.floor <= self.ceil && self.ceil <= 1.0) {
            return Err(Error::Config(format!(
                "policy bounds must satisfy 0 <= floor <= ceil <= 1, got [{}, {}]",
                self.floor, self.ceil
            )));
        }
        Ok(())
    }
}

impl Policy {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() || probs.len() > super::mask::MAX_FEATURES {
            return Err(Error::Config(format!("policy length {} out of range", probs.len())));
        }
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Config("policy probabilities must lie in [0, 1]".into()));
        }
        Ok(Policy { probs })
    }

    pub fn uniform(n: usize, p: f64) -> Result<Self> {
        Self::new(vec![p; n])
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// One mask with bit `i` ~ Bernoulli(p_i); an empty draw gets one
    /// uniformly chosen bit.
    pub fn sample_mask(&self, rng: &mut impl Rng) -> FeatureMask {
        let mut m = FeatureMask::empty(self.len()).expect("policy length validated");
        for (i, &p) in self.probs.iter().enumerate() {
            if rng.random::<f64>() < p {
                m.set(i, true);
            }
        }
        repair(m, rng)
    }

    pub fn normalized_entropy(&self) -> f64 {
        super::normalized_entropy(&self.probs)
    }
}

pub fn sample_population(policy: &Policy, size: usize, rng: &mut impl Rng) -> Vec<FeatureMask> {
    (0..size).map(|_| policy.sample_mask(rng)).collect()
}

/// Moving-average update `p ← (1-η) p + η m̄`, clamped to `bounds`.
pub fn update_policy(policy: &Policy, elite_mean: &[f64], eta: f64, bounds: PolicyBounds) -> Result<Policy> {
    if elite_mean.len() != policy.len() {
        return Err(Error::Dimension {
            expected: policy.len(),
            got: elite_mean.len(),
        });
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::Config(format!("update rate must lie in (0, 1], got {eta}")));
    }
    let probs = policy
        .probs
        .iter()
        .zip(elite_mean)
        .map(|(p, m)| ((1.0 - eta) * p + eta * m).clamp(bounds.floor, bounds.ceil))
        .collect();
    Ok(Policy { probs })
}

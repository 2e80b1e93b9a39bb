use std::cmp::Ordering;

use rand::Rng;

use super::{Candidate, FeatureMask};
use crate::error::{Error, Result};

/// Sets one uniformly chosen bit of an empty mask.
pub fn repair(mut m: FeatureMask, rng: &mut impl Rng) -> FeatureMask {
    if m.is_empty() {
        let i = rng.random_range(0..m.len());
        m.set(i, true);
    }
    m
}

/// Uniform crossover: each position is swapped between the two parents with
/// probability 0.5.
pub fn crossover(a: &FeatureMask, b: &FeatureMask, rng: &mut impl Rng) -> Result<(FeatureMask, FeatureMask)> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            got: b.len(),
        });
    }
    let (mut x, mut y) = (*a, *b);
    for i in 0..a.len() {
        if rng.random_bool(0.5) {
            x.set(i, b.get(i));
            y.set(i, a.get(i));
        }
    }
    Ok((x, y))
}

/// Independent bit flips at `rate`, then empty-mask repair.
pub fn mutate(m: &FeatureMask, rate: f64, rng: &mut impl Rng) -> FeatureMask {
    let mut out = *m;
    if rate > 0.0 {
        for i in 0..m.len() {
            if rng.random::<f64>() < rate {
                out.flip(i);
            }
        }
    }
    repair(out, rng)
}

/// Total order used for elite ranking: higher score first, then fewer
/// selected features, then the smaller bit string.
pub fn rank_order(a: &Candidate, b: &Candidate) -> Ordering {
    b.score()
        .total_cmp(&a.score())
        .then_with(|| a.mask.count().cmp(&b.mask.count()))
        .then_with(|| a.mask.cmp_bitstring(&b.mask))
}

/// The `k` best candidates under [`rank_order`].
pub fn select_elites(cands: &[Candidate], k: usize) -> Result<Vec<Candidate>> {
    if k > cands.len() {
        return Err(Error::Config(format!(
            "cannot select {k} elites from {} candidates",
            cands.len()
        )));
    }
    let mut sorted = cands.to_vec();
    sorted.sort_by(rank_order);
    sorted.truncate(k);
    Ok(sorted)
}

/// Per-position mean of the elite masks.
pub fn elite_mean(elites: &[FeatureMask]) -> Result<Vec<f64>> {
    let first = elites
        .first()
        .ok_or_else(|| Error::Config("elite set is empty".into()))?;
    let n = first.len();
    let mut mean = vec![0.0; n];
    for m in elites {
        if m.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: m.len(),
            });
        }
        for i in m.selected() {
            mean[i] += 1.0;
        }
    }
    let k = elites.len() as f64;
    mean.iter_mut().for_each(|v| *v /= k);
    Ok(mean)
}

//! Comparison strategies: all features, a random subset of matched size and
//! two mutual-information category subsets.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Split};
use crate::error::{Error, Result};
use crate::scenario::Category;
use crate::search::FeatureMask;

pub const DEFAULT_MI_BINS: usize = 16;

pub fn full_feature_mask(n: usize) -> Result<FeatureMask> {
    FeatureMask::full(n)
}

/// Uniformly random `k`-subset of `n` features.
pub fn random_subset_mask(k: usize, n: usize, rng: &mut impl Rng) -> Result<FeatureMask> {
    if k == 0 || k > n {
        return Err(Error::Config(format!("subset size {k} must lie in 1..={n}")));
    }
    FeatureMask::from_indices(n, rand::seq::index::sample(rng, n, k))
}

fn bin_indices(v: &[f64], bins: usize) -> Vec<usize> {
    let (lo, hi) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    if hi <= lo {
        return vec![0; v.len()];
    }
    let width = (hi - lo) / bins as f64;
    v.iter()
        .map(|&x| (((x - lo) / width) as usize).min(bins - 1))
        .collect()
}

/// Plug-in mutual information in bits from an equal-width `bins × bins`
/// joint histogram over each variable's `[min, max]`. Clipped at 0.
pub fn mutual_information(x: &[f64], y: &[f64], bins: usize) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            got: y.len(),
        });
    }
    if bins == 0 || x.len() < bins {
        return Err(Error::Config(format!(
            "mutual information needs at least {bins} samples and bins > 0"
        )));
    }
    let bx = bin_indices(x, bins);
    let by = bin_indices(y, bins);
    let single_bin = |b: &[usize]| b.iter().all(|&i| i == b[0]);
    if single_bin(&bx) || single_bin(&by) {
        return Ok(0.0);
    }
    let mut joint = vec![0usize; bins * bins];
    let mut px = vec![0usize; bins];
    let mut py = vec![0usize; bins];
    for (&i, &j) in bx.iter().zip(&by) {
        joint[i * bins + j] += 1;
        px[i] += 1;
        py[j] += 1;
    }
    let n = x.len() as f64;
    let mut mi = 0.0;
    for i in 0..bins {
        for j in 0..bins {
            let c = joint[i * bins + j];
            if c == 0 {
                continue;
            }
            let pxy = c as f64 / n;
            mi += pxy * (pxy * n * n / (px[i] as f64 * py[j] as f64)).log2();
        }
    }
    Ok(mi.max(0.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MiRanking {
    /// Bits, catalog order.
    pub mi: Vec<f64>,
    pub bin_count: usize,
    /// 1-based feature indices, MI descending (ties by index).
    pub ranking: Vec<usize>,
}

/// MI of every feature against path loss on the training split.
pub fn mi_ranking(ds: &Dataset, bins: usize) -> Result<MiRanking> {
    let train = ds.indices(Split::Train)?;
    let y: Vec<f64> = train.iter().map(|&i| ds.samples()[i].path_loss).collect();
    let n = ds.catalog().len();
    let mi = (0..n)
        .map(|j| {
            let x: Vec<f64> = train.iter().map(|&i| ds.samples()[i].features[j]).collect();
            mutual_information(&x, &y, bins)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut ranking: Vec<usize> = (0..n).collect();
    ranking.sort_by(|&a, &b| mi[b].total_cmp(&mi[a]).then(a.cmp(&b)));
    Ok(MiRanking {
        mi,
        bin_count: bins,
        ranking: ranking.into_iter().map(|i| i + 1).collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MiVariant {
    /// Geometry + structure.
    GeStruct,
    /// Geometry + EM knowledge.
    GeEm,
}

impl MiVariant {
    fn second(self) -> Category {
        match self {
            MiVariant::GeStruct => Category::Structure,
            MiVariant::GeEm => Category::Knowledge,
        }
    }
}

/// Top-2 geometry features plus the top-2 of the variant's second category,
/// ranked by training-split MI.
pub fn mi_category_subset(ds: &Dataset, variant: MiVariant) -> Result<FeatureMask> {
    mi_category_subset_with(ds, variant, DEFAULT_MI_BINS)
}

pub fn mi_category_subset_with(ds: &Dataset, variant: MiVariant, bins: usize) -> Result<FeatureMask> {
    let ranking = mi_ranking(ds, bins)?;
    let catalog = ds.catalog();
    let top2 = |cat: Category| -> Vec<usize> {
        ranking
            .ranking
            .iter()
            .map(|i| i - 1)
            .filter(|&i| catalog.entries[i].category == cat)
            .take(2)
            .collect()
    };
    let mut picks = top2(Category::Geometry);
    picks.extend(top2(variant.second()));
    FeatureMask::from_indices(catalog.len(), picks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{planted_dataset, PlantedSpec, Sample};
    use crate::scenario::FeatureVector;
    use crate::seed;
    use crate::N_FEATURES;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::Rng;

    #[test]
    fn full_and_random() {
        let full = full_feature_mask(10).unwrap();
        assert_eq!(full.to_string(), "1111111111");
        let mut rng = seed::rng(0, &[]);
        assert_eq!(random_subset_mask(10, 10, &mut rng).unwrap(), full);
        assert_eq!(random_subset_mask(4, 10, &mut rng).unwrap().count(), 4);
        assert!(random_subset_mask(0, 10, &mut rng).is_err());
        assert!(random_subset_mask(11, 10, &mut rng).is_err());
        let a = random_subset_mask(4, 10, &mut seed::rng(5, &[])).unwrap();
        assert_eq!(a, random_subset_mask(4, 10, &mut seed::rng(5, &[])).unwrap());
    }

    #[test]
    fn random_subset_marginals() {
        // hypergeometric marginal k/n = 0.4
        let mut rng = seed::rng(1, &[]);
        let mut hits = [0usize; 10];
        for _ in 0..10_000 {
            for i in random_subset_mask(4, 10, &mut rng).unwrap().selected() {
                hits[i] += 1;
            }
        }
        for h in hits {
            let f = h as f64 / 10_000.0;
            assert!((f - 0.4).abs() <= 0.02, "{f}");
        }
    }

    fn uniform(n: usize, s: u64) -> Vec<f64> {
        let mut rng = seed::rng(s, &[]);
        (0..n).map(|_| rng.random::<f64>()).collect()
    }

    #[test]
    fn mi_independent_is_small() {
        let x = uniform(10_000, 2);
        let mut y = x.clone();
        y.shuffle(&mut seed::rng(3, &[]));
        let mi = mutual_information(&x, &y, 16).unwrap();
        assert!(mi < 0.05, "{mi}");
    }

    #[test]
    fn mi_of_identical_is_marginal_entropy() {
        let x = uniform(10_000, 4);
        let mi = mutual_information(&x, &x, 16).unwrap();
        // histogram entropy of the binned marginal
        let mut counts = [0usize; 16];
        for b in bin_indices(&x, 16) {
            counts[b] += 1;
        }
        let h: f64 = counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / 10_000.0;
                -p * p.log2()
            })
            .sum();
        assert!((mi - h).abs() <= 0.05 * h);
        assert!((mi - 4.0).abs() <= 0.05 * 4.0);
    }

    #[test]
    fn mi_constant_is_zero() {
        let x = vec![3.0; 100];
        let y = uniform(100, 5);
        assert_eq!(mutual_information(&x, &y, 16).unwrap(), 0.0);
        assert!(mutual_information(&x[..10], &y[..10], 16).is_err());
    }

    #[test]
    fn mi_subsets_have_category_shape() {
        let ds = planted_dataset(&PlantedSpec::new(vec![0, 6, 9]), 2).unwrap();
        let ge_em = mi_category_subset(&ds, MiVariant::GeEm).unwrap();
        assert_eq!(ge_em.count(), 4);
        assert!(ge_em.get(8) && ge_em.get(9));
        let ge_st = mi_category_subset(&ds, MiVariant::GeStruct).unwrap();
        assert_eq!(ge_st.count(), 4);
        assert_eq!(ge_st.selected().filter(|&i| i < 5).count(), 2);
        assert_eq!(ge_em.selected().filter(|&i| i < 5).count(), 2);
        assert!(ge_st.get(0) && ge_st.get(6));
    }

    #[test]
    fn noisy_copy_ranked_below_driver() {
        let mut rng = seed::rng(9, &[]);
        let samples: Vec<Sample> = (0..2000)
            .map(|i| {
                let f1: f64 = rng.random_range(0.0..100.0);
                let mut f = [0.0; N_FEATURES];
                f[0] = f1;
                f[3] = f1 + rng.random_range(-40.0..40.0);
                for v in f.iter_mut().skip(4) {
                    *v = rng.random();
                }
                f[1] = rng.random();
                f[2] = rng.random();
                Sample {
                    features: FeatureVector(f),
                    path_loss: 60.0 + 0.5 * f1 + rng.random_range(-1.0..1.0),
                    route_index: i,
                    scenario_id: "p".into(),
                }
            })
            .collect();
        let ds = Dataset::from_samples(samples)
            .unwrap()
            .split(Default::default(), 1)
            .unwrap()
            .standardize()
            .unwrap();
        let r = mi_ranking(&ds, 16).unwrap();
        let pos = |f: usize| r.ranking.iter().position(|&i| i == f).unwrap();
        assert!(pos(1) < pos(4), "{:?}", r);
        assert!(r.mi.iter().all(|&m| m >= 0.0));
        let mut sorted = r.ranking.clone();
        sorted.sort();
        assert_eq!(sorted, (1..=10).collect::<Vec<_>>());
    }

    proptest! {
        #[test]
        fn mi_symmetric(xs in proptest::collection::vec(-10.0..10.0f64, 32..200), s: u64) {
            let mut ys = xs.clone();
            ys.shuffle(&mut seed::rng(s, &[]));
            let ys: Vec<f64> = ys.iter().zip(&xs).map(|(a, b)| a + 0.3 * b).collect();
            let a = mutual_information(&xs, &ys, 16).unwrap();
            let b = mutual_information(&ys, &xs, 16).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
            prop_assert!(a >= 0.0);
        }
    }
}

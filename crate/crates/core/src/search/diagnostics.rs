use super::FeatureMask;
use crate::error::{Error, Result};

fn plogp(p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        p * p.ln()
    }
}

/// Mean binary entropy of the selection probabilities, in [0, 1].
pub fn normalized_entropy(probs: &[f64]) -> f64 {
    if probs.is_empty() {
        return 0.0;
    }
    let sum: f64 = probs.iter().map(|&p| plogp(p) + plogp(1.0 - p)).sum();
    -sum / (probs.len() as f64 * std::f64::consts::LN_2)
}

/// Mean pairwise Hamming distance normalized by mask length, in [0, 1].
pub fn population_diversity(masks: &[FeatureMask]) -> Result<f64> {
    let p = masks.len();
    if p < 2 {
        return Err(Error::Config(format!("diversity needs at least 2 masks, got {p}")));
    }
    let n = masks[0].len();
    let mut total = 0usize;
    for a in 0..p - 1 {
        for b in a + 1..p {
            if masks[b].len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: masks[b].len(),
                });
            }
            total += masks[a].hamming(&masks[b]);
        }
    }
    Ok(2.0 * total as f64 / (p * (p - 1) * n) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_examples() {
        assert!((normalized_entropy(&[0.5; 10]) - 1.0).abs() < 1e-15);
        assert_eq!(normalized_entropy(&[0.0, 1.0, 1.0, 0.0]), 0.0);
        // −(0.25 ln 0.25 + 0.75 ln 0.75)/ln 2 = 0.8112781244591328
        assert!((normalized_entropy(&[0.25; 7]) - 0.811_278).abs() < 1e-5);
        assert!((normalized_entropy(&[0.25]) - 0.811_278_124_459_132_8).abs() < 1e-14);
    }

    #[test]
    fn diversity_examples() {
        let m = |s: &str| s.parse::<FeatureMask>().unwrap();
        assert_eq!(population_diversity(&[m("0110"); 5]).unwrap(), 0.0);
        assert_eq!(population_diversity(&[m("0110"), m("1001")]).unwrap(), 1.0);
        let d = population_diversity(&[m("000"), m("011"), m("101")]).unwrap();
        assert!((d - 2.0 / 3.0).abs() < 1e-15);
        assert!(population_diversity(&[m("01")]).is_err());
    }
}

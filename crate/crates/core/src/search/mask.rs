use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const MAX_FEATURES: usize = 64;

/// Binary inclusion vector over a feature catalog of at most 64 entries.
///
/// Bit `i` (0-based) selects catalog feature `i + 1`. The textual form lists
/// position 1 first, e.g. `1100000000` selects f1 and f2.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct FeatureMask {
    bits: u64,
    len: u8,
}

impl FeatureMask {
    pub fn empty(len: usize) -> Result<Self> {
        if len == 0 || len > MAX_FEATURES {
            return Err(Error::Config(format!(
                "mask length must be in 1..={MAX_FEATURES}, got {len}"
            )));
        }
        Ok(FeatureMask { bits: 0, len: len as u8 })
    }

    pub fn full(len: usize) -> Result<Self> {
        let m = Self::empty(len)?;
        Ok(FeatureMask {
            bits: low_bits(len),
            ..m
        })
    }

    pub fn from_bits(len: usize, bits: u64) -> Result<Self> {
        let m = Self::empty(len)?;
        if bits & !low_bits(len) != 0 {
            return Err(Error::Config(format!("bits {bits:#x} exceed mask length {len}")));
        }
        Ok(FeatureMask { bits, ..m })
    }

    /// From 0-based positions.
    pub fn from_indices(len: usize, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut m = Self::empty(len)?;
        for i in indices {
            if i >= len {
                return Err(Error::Config(format!("feature position {i} out of range")));
            }
            m.set(i, true);
        }
        Ok(m)
    }

    pub fn from_bools(bits: &[bool]) -> Result<Self> {
        Self::from_indices(bits.len(), bits.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i))
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn get(&self, i: usize) -> bool {
        i < self.len() && self.bits >> i & 1 == 1
    }

    pub fn set(&mut self, i: usize, on: bool) {
        assert!(i < self.len(), "bit {i} out of range for mask of {}", self.len);
        if on {
            self.bits |= 1 << i;
        } else {
            self.bits &= !(1 << i);
        }
    }

    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len(), "bit {i} out of range for mask of {}", self.len);
        self.bits ^= 1 << i;
    }

    /// Number of selected features, ‖M‖₀.
    pub fn count(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    /// Selected 0-based positions, ascending.
    pub fn selected(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| self.get(i))
    }

    /// Selected 1-based catalog indices.
    pub fn feature_indices(&self) -> Vec<usize> {
        self.selected().map(|i| i + 1).collect()
    }

    pub fn hamming(&self, other: &FeatureMask) -> usize {
        (self.bits ^ other.bits).count_ones() as usize
    }

    /// Values of the selected positions of `values`.
    pub fn select(&self, values: &[f64]) -> Vec<f64> {
        self.selected().map(|i| values[i]).collect()
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len()).map(|i| self.get(i)).collect()
    }

    /// Order of the textual bit strings (position 1 first, `0 < 1`).
    pub fn cmp_bitstring(&self, other: &FeatureMask) -> Ordering {
        self.len
            .cmp(&other.len)
            .then_with(|| self.bits.reverse_bits().cmp(&other.bits.reverse_bits()))
    }

    /// Feature indices as `(2,7,9,10)`.
    pub fn tuple_string(&self) -> String {
        let parts: Vec<String> = self.feature_indices().iter().map(|i| i.to_string()).collect();
        format!("({})", parts.join(","))
    }
}

fn low_bits(len: usize) -> u64 {
    if len == 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

impl fmt::Display for FeatureMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len() {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for FeatureMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FeatureMask({self})")
    }
}

impl FromStr for FeatureMask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bools = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::Config(format!("invalid mask string `{s}`"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_bools(&bools)
    }
}

impl Serialize for FeatureMask {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FeatureMask {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_form_and_indices() {
        let m: FeatureMask = "0100001011".parse().unwrap();
        assert_eq!(m.feature_indices(), vec![2, 7, 9, 10]);
        assert_eq!(m.tuple_string(), "(2,7,9,10)");
        assert_eq!(m.to_string(), "0100001011");
        assert_eq!(m.count(), 4);
        assert!("01x".parse::<FeatureMask>().is_err());
    }

    #[test]
    fn bitstring_order() {
        let a: FeatureMask = "1100".parse().unwrap();
        let b: FeatureMask = "1010".parse().unwrap();
        let c: FeatureMask = "0111".parse().unwrap();
        assert_eq!(b.cmp_bitstring(&a), Ordering::Less);
        assert_eq!(c.cmp_bitstring(&b), Ordering::Less);
        assert_eq!(a.cmp_bitstring(&a), Ordering::Equal);
    }

    #[test]
    fn limits() {
        assert!(FeatureMask::empty(0).is_err());
        assert!(FeatureMask::empty(65).is_err());
        assert_eq!(FeatureMask::full(64).unwrap().count(), 64);
        assert!(FeatureMask::from_bits(3, 0b1000).is_err());
        assert!(FeatureMask::from_indices(3, [3]).is_err());
    }

    #[test]
    fn serde_as_string() {
        let m: FeatureMask = "101".parse().unwrap();
        assert_eq!(serde_json::to_string(&m).unwrap(), "\"101\"");
        let back: FeatureMask = serde_json::from_str("\"101\"").unwrap();
        assert_eq!(back, m);
    }
}

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{PocfError, Result};

/// Largest supported number of candidate coalitions.
pub const MAX_COALITIONS: usize = 64;

/// A set of candidate-coalition indices stored as a bitmask.
///
/// Indices are zero-based in the API and 1-based when serialized.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct CoalitionSet(u64);

impl CoalitionSet {
    pub const EMPTY: Self = Self(0);

    pub fn from_bits(bits: u64) -> Self {
        Self(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn singleton(l: usize) -> Self {
        assert!(l < MAX_COALITIONS, "coalition index {l} out of range");
        Self(1 << l)
    }

    /// Builds a set from zero-based indices.
    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        indices
            .into_iter()
            .fold(Self::EMPTY, |acc, l| acc.union(Self::singleton(l)))
    }

    /// Builds a set from 1-based indices, rejecting 0 and indices above 64.
    pub fn from_one_based(indices: &[usize]) -> Result<Self> {
        let mut bits = 0u64;
        for &l in indices {
            if l == 0 || l > MAX_COALITIONS {
                return Err(PocfError::InvalidGame(format!(
                    "coalition index {l} outside 1..={MAX_COALITIONS}"
                )));
            }
            bits |= 1 << (l - 1);
        }
        Ok(Self(bits))
    }

    pub fn contains(self, l: usize) -> bool {
        l < MAX_COALITIONS && self.0 >> l & 1 == 1
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: Self) -> Self {
        Self(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        Self(self.0 & other.0)
    }

    /// Flips membership of coalition `l`.
    pub fn toggle(self, l: usize) -> Self {
        Self(self.0 ^ Self::singleton(l).0)
    }

    /// True when every member index is below `k`.
    pub fn within(self, k: usize) -> bool {
        k >= MAX_COALITIONS || self.0 >> k == 0
    }

    /// Zero-based members in ascending order.
    pub fn iter(self) -> Members {
        Members(self.0)
    }

    pub fn to_one_based(self) -> Vec<usize> {
        self.iter().map(|l| l + 1).collect()
    }
}

/// Iterator over the members of a [`CoalitionSet`].
#[derive(Clone, Debug)]
pub struct Members(u64);

impl Iterator for Members {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let l = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(l)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let c = self.0.count_ones() as usize;
        (c, Some(c))
    }
}

impl ExactSizeIterator for Members {}

impl TryFrom<Vec<usize>> for CoalitionSet {
    type Error = PocfError;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::from_one_based(&v)
    }
}

impl From<CoalitionSet> for Vec<usize> {
    fn from(s: CoalitionSet) -> Self {
        s.to_one_based()
    }
}

impl fmt::Display for CoalitionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (pos, l) in self.iter().enumerate() {
            if pos > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", l + 1)?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for CoalitionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_based_round_trip() {
        let s = CoalitionSet::from_one_based(&[1, 3, 5]).unwrap();
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![0, 2, 4]);
        assert_eq!(s.to_one_based(), vec![1, 3, 5]);
        assert_eq!(s.to_string(), "{1,3,5}");
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, "[1,3,5]");
        let back: CoalitionSet = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn rejects_zero_index() {
        assert!(CoalitionSet::from_one_based(&[0]).is_err());
        assert!(serde_json::from_str::<CoalitionSet>("[65]").is_err());
    }

    #[test]
    fn set_algebra() {
        let a = CoalitionSet::from_indices([0, 1]);
        let b = CoalitionSet::from_indices([1, 2]);
        assert_eq!(a.intersection(b), CoalitionSet::singleton(1));
        assert_eq!(a.union(b).len(), 3);
        assert_eq!(a.toggle(1), CoalitionSet::singleton(0));
        assert!(a.within(2));
        assert!(!b.within(2));
    }
}

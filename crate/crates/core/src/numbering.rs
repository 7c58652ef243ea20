//! Codings of naturals: canonical finite sets, Cantor pairing, joins, and
//! stage-indexed enumerations standing in for c.e. sets.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// The finite window every construction is evaluated in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Horizon {
    pub stages: usize,
    pub elements: usize,
}

impl Horizon {
    pub fn new(stages: usize, elements: usize) -> Result<Self> {
        let h = Horizon { stages, elements };
        h.validate()?;
        Ok(h)
    }

    /// Stages 0 and 1 are rewritten by the approximation machinery, so at
    /// least two are required.
    pub fn validate(&self) -> Result<()> {
        if self.stages < 2 {
            return Err(Error::invalid(format!("horizon needs at least 2 stages, got {}", self.stages)));
        }
        if self.elements < 1 {
            return Err(Error::invalid("horizon needs at least 1 element"));
        }
        Ok(())
    }
}

/// `D_n`: the finite set whose characteristic bits are the binary digits of `n`.
pub fn canonical_set(n: u64) -> BTreeSet<u64> {
    (0..64).filter(|&x| n >> x & 1 == 1).collect()
}

/// Inverse of [`canonical_set`]. Members must be below 64 to fit the index in a `u64`.
pub fn canonical_index(set: &BTreeSet<u64>) -> Result<u64> {
    set.iter().try_fold(0u64, |acc, &x| {
        if x >= 64 {
            Err(Error::invalid(format!("member {x} has no 64-bit canonical index")))
        } else {
            Ok(acc | 1 << x)
        }
    })
}

/// Cantor pairing `<x, y> = (x+y)(x+y+1)/2 + y`.
pub fn pair(x: u64, y: u64) -> u64 {
    let w = x + y;
    w * (w + 1) / 2 + y
}

pub fn unpair(z: u64) -> (u64, u64) {
    let w = ((8 * z as u128 + 1).isqrt() as u64 - 1) / 2;
    let t = w * (w + 1) / 2;
    let y = z - t;
    (w - y, y)
}

/// `E ⊕ S = {2x | x ∈ E} ∪ {2x+1 | x ∈ S}`.
pub fn join(evens: &BTreeSet<u64>, odds: &BTreeSet<u64>) -> BTreeSet<u64> {
    evens.iter().map(|x| 2 * x).chain(odds.iter().map(|x| 2 * x + 1)).collect()
}

/// Recovers both halves of a join.
pub fn split(joined: &BTreeSet<u64>) -> (BTreeSet<u64>, BTreeSet<u64>) {
    let mut evens = BTreeSet::new();
    let mut odds = BTreeSet::new();
    for &z in joined {
        if z % 2 == 0 {
            evens.insert(z / 2);
        } else {
            odds.insert(z / 2);
        }
    }
    (evens, odds)
}

/// A canonical finite set, carried by its members rather than its index so
/// that sets of large pair codes remain representable.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FiniteSet(pub BTreeSet<u64>);

impl FiniteSet {
    pub fn from_code(n: u64) -> Self {
        FiniteSet(canonical_set(n))
    }

    pub fn code(&self) -> Option<u64> {
        canonical_index(&self.0).ok()
    }

    pub fn members(&self) -> &BTreeSet<u64> {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromIterator<u64> for FiniteSet {
    fn from_iter<I: IntoIterator<Item = u64>>(iter: I) -> Self {
        FiniteSet(iter.into_iter().collect())
    }
}

impl fmt::Display for FiniteSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, "}}")
    }
}

/// A finite-horizon c.e. set: values tagged with the stage at which they
/// were enumerated. `member_at(x, s)` holds when `x` entered at a stage `< s`.
///
/// Built from a plain listing, the value at position `k` enters at stage `k`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Enumeration {
    entries: Vec<(usize, u64)>,
    /// `(value, first stage)` sorted by value.
    by_value: Vec<(u64, usize)>,
    injective: bool,
}

impl Enumeration {
    pub fn empty() -> Self {
        Enumeration { injective: true, ..Default::default() }
    }

    pub fn from_listing(listing: impl IntoIterator<Item = u64>) -> Self {
        Self::from_staged(listing.into_iter().enumerate())
    }

    /// Builds from `(stage, value)` pairs in any order. A repeated value keeps
    /// its earliest stage and clears the injectivity flag.
    pub fn from_staged(items: impl IntoIterator<Item = (usize, u64)>) -> Self {
        let mut by_value: Vec<(u64, usize)> = items.into_iter().map(|(s, v)| (v, s)).collect();
        by_value.sort_unstable();
        let before = by_value.len();
        by_value.dedup_by_key(|e| e.0);
        let injective = by_value.len() == before;
        let mut entries: Vec<(usize, u64)> = by_value.iter().map(|&(v, s)| (s, v)).collect();
        entries.sort_unstable();
        Enumeration { entries, by_value, injective }
    }

    pub fn is_injective(&self) -> bool {
        self.injective
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `(stage, value)` pairs in enumeration order.
    pub fn entries(&self) -> &[(usize, u64)] {
        &self.entries
    }

    /// Values in order of first entry, ties broken by value.
    pub fn listing(&self) -> Vec<u64> {
        self.entries.iter().map(|&(_, v)| v).collect()
    }

    /// True when each value's stage equals its position, i.e. the enumeration
    /// is a plain one-per-stage listing.
    pub fn is_plain_listing(&self) -> bool {
        self.entries.iter().enumerate().all(|(k, &(s, _))| k == s)
    }

    pub fn stage_of(&self, x: u64) -> Option<usize> {
        self.by_value.binary_search_by_key(&x, |e| e.0).ok().map(|k| self.by_value[k].1)
    }

    /// Membership at the end of time, i.e. ignoring stages.
    pub fn contains(&self, x: u64) -> bool {
        self.stage_of(x).is_some()
    }

    /// Unchecked stage-wise membership.
    pub fn contains_at(&self, x: u64, stage: usize) -> bool {
        self.stage_of(x).is_some_and(|s| s < stage)
    }

    pub fn member_at(&self, x: u64, stage: usize, horizon: &Horizon) -> Result<bool> {
        if stage > horizon.stages {
            return Err(Error::horizon(format!(
                "stage {stage} is past the horizon of {} stages",
                horizon.stages
            )));
        }
        Ok(self.contains_at(x, stage))
    }

    /// Membership at the horizon.
    pub fn holds(&self, x: u64, horizon: &Horizon) -> bool {
        self.contains_at(x, horizon.stages)
    }

    pub fn set_at(&self, stage: usize) -> BTreeSet<u64> {
        self.entries.iter().filter(|&&(s, _)| s < stage).map(|&(_, v)| v).collect()
    }

    pub fn at_horizon(&self, horizon: &Horizon) -> BTreeSet<u64> {
        self.set_at(horizon.stages)
    }

    pub fn values(&self) -> BTreeSet<u64> {
        self.by_value.iter().map(|e| e.0).collect()
    }

    /// Drops everything enumerated at or after `stage`.
    pub fn truncated(&self, stage: usize) -> Self {
        Self::from_staged(self.entries.iter().copied().filter(|&(s, _)| s < stage))
    }

    /// The stage-wise join `E ⊕ S`.
    pub fn join(&self, odds: &Enumeration) -> Self {
        Self::from_staged(
            self.entries
                .iter()
                .map(|&(s, x)| (s, 2 * x))
                .chain(odds.entries.iter().map(|&(s, x)| (s, 2 * x + 1))),
        )
    }

    /// Checks that every listed value is below the horizon's element bound.
    pub fn check_within(&self, horizon: &Horizon, what: &str) -> Result<()> {
        match self.entries.iter().find(|&&(_, v)| v >= horizon.elements as u64) {
            Some(&(_, v)) => Err(Error::invalid(format!(
                "{what}: value {v} is not below the element bound {}",
                horizon.elements
            ))),
            None => Ok(()),
        }
    }
}

impl FromIterator<u64> for Enumeration {
    fn from_iter<I: IntoIterator<Item = u64>>(iter: I) -> Self {
        Enumeration::from_listing(iter)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum EnumerationRepr {
    Listing(Vec<u64>),
    Staged(Vec<(u64, usize)>),
}

/// Plain listings serialize as arrays of naturals; anything with shared or
/// skipped stages as `[value, stage]` pairs.
impl Serialize for Enumeration {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_plain_listing() {
            EnumerationRepr::Listing(self.listing()).serialize(serializer)
        } else {
            EnumerationRepr::Staged(self.entries.iter().map(|&(s, v)| (v, s)).collect())
                .serialize(serializer)
        }
    }
}

impl<'de> Deserialize<'de> for Enumeration {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        Ok(match EnumerationRepr::deserialize(deserializer)? {
            EnumerationRepr::Listing(v) => Enumeration::from_listing(v),
            EnumerationRepr::Staged(v) => Enumeration::from_staged(v.into_iter().map(|(x, s)| (s, x))),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(xs: &[u64]) -> BTreeSet<u64> {
        xs.iter().copied().collect()
    }

    #[test]
    fn canonical_examples() {
        assert!(canonical_set(0).is_empty());
        assert_eq!(canonical_set(5), set(&[0, 2]));
        assert_eq!(canonical_set(6), set(&[1, 2]));
        assert_eq!(canonical_index(&set(&[])).unwrap(), 0);
        assert_eq!(canonical_index(&set(&[0, 2])).unwrap(), 5);
        assert_eq!(canonical_index(&set(&[3])).unwrap(), 8);
        assert!(canonical_index(&set(&[64])).is_err());
    }

    #[test]
    fn pairing_examples() {
        assert_eq!(pair(0, 0), 0);
        assert_eq!(pair(1, 0), 1);
        assert_eq!(pair(0, 1), 2);
        assert_eq!(unpair(2), (0, 1));
    }

    #[test]
    fn pairing_injective_on_grid() {
        let mut seen = BTreeSet::new();
        for x in 0..=1000 {
            for y in 0..=1000 {
                let z = pair(x, y);
                assert!(seen.insert(z), "collision at ({x},{y})");
                assert_eq!(unpair(z), (x, y));
            }
        }
    }

    #[test]
    fn join_examples() {
        assert!(join(&set(&[]), &set(&[])).is_empty());
        assert_eq!(join(&set(&[0]), &set(&[0])), set(&[0, 1]));
        assert_eq!(join(&set(&[1]), &set(&[0, 2])), set(&[2, 1, 5]));
    }

    #[test]
    fn member_at_examples() {
        let h = Horizon::new(10, 10).unwrap();
        let e = Enumeration::from_listing([3, 1, 4]);
        assert!(!e.member_at(1, 1, &h).unwrap());
        assert!(e.member_at(1, 2, &h).unwrap());
        assert!(!e.member_at(3, 0, &h).unwrap());
        assert!(matches!(e.member_at(1, 11, &h), Err(Error::HorizonExceeded(_))));
    }

    #[test]
    fn horizon_bounds() {
        assert!(Horizon::new(1, 4).is_err());
        assert!(Horizon::new(2, 0).is_err());
        assert!(Horizon::new(2, 1).is_ok());
    }

    #[test]
    fn repeated_values_keep_first_stage() {
        let e = Enumeration::from_listing([2, 2, 5]);
        assert!(!e.is_injective());
        assert_eq!(e.stage_of(2), Some(0));
        assert_eq!(e.listing(), vec![2, 5]);
    }

    #[test]
    fn serde_forms() {
        let plain = Enumeration::from_listing([3, 1]);
        assert_eq!(serde_json::to_string(&plain).unwrap(), "[3,1]");
        let staged = Enumeration::from_staged([(0, 7), (0, 2)]);
        let text = serde_json::to_string(&staged).unwrap();
        assert_eq!(text, "[[2,0],[7,0]]");
        assert_eq!(serde_json::from_str::<Enumeration>(&text).unwrap(), staged);
    }

    proptest! {
        #[test]
        fn member_at_is_monotone(listing in proptest::collection::vec(0u64..20, 0..15), x in 0u64..20, s in 0usize..16) {
            let e = Enumeration::from_listing(listing);
            if e.contains_at(x, s) {
                for t in s..17 {
                    prop_assert!(e.contains_at(x, t));
                }
            }
        }

        #[test]
        fn join_splits_back(a in proptest::collection::btree_set(0u64..500, 0..20), b in proptest::collection::btree_set(0u64..500, 0..20)) {
            prop_assert_eq!(split(&join(&a, &b)), (a, b));
        }
    }
}

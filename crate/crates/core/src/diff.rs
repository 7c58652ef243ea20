//! Differences of c.e. sets `C_i = A_i \ B_i`, selector verification, and the
//! normalizing transforms applied to such sequences.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numbering::{pair, Enumeration, FiniteSet, Horizon};

/// Largest number of in-window members a set may have before the hat
/// transform refuses to materialize its `2^m` subsets.
pub const HAT_MEMBER_LIMIT: usize = 20;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffPair {
    #[serde(rename = "A")]
    pub a: Enumeration,
    #[serde(rename = "B")]
    pub b: Enumeration,
}

impl DiffPair {
    pub fn new(a: Enumeration, b: Enumeration) -> Self {
        DiffPair { a, b }
    }
}

/// A uniformly indexed family `(A_i, B_i)`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DiffSequence {
    pub pairs: Vec<DiffPair>,
}

impl DiffSequence {
    pub fn new(pairs: Vec<DiffPair>) -> Self {
        DiffSequence { pairs }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `C_i` as seen at the horizon.
    pub fn difference_at(&self, i: usize, horizon: &Horizon) -> BTreeSet<u64> {
        let p = &self.pairs[i];
        p.a.at_horizon(horizon).difference(&p.b.at_horizon(horizon)).copied().collect()
    }

    /// Checks `B_i ⊆ A_i`, `B_i ≠ ∅` and pairwise disjointness of the `A_i`
    /// at the horizon.
    pub fn check_normalized(&self, horizon: &Horizon) -> Result<()> {
        let mut owner: BTreeMap<u64, usize> = BTreeMap::new();
        for (i, p) in self.pairs.iter().enumerate() {
            let a = p.a.at_horizon(horizon);
            let b = p.b.at_horizon(horizon);
            if b.is_empty() {
                return Err(Error::invalid(format!("B_{i} is empty")));
            }
            if let Some(x) = b.difference(&a).next() {
                return Err(Error::invalid(format!("{x} is in B_{i} but not in A_{i}")));
            }
            for x in a {
                if let Some(j) = owner.insert(x, i) {
                    return Err(Error::invalid(format!("{x} lies in both A_{j} and A_{i}")));
                }
            }
        }
        Ok(())
    }

    /// Index `i` with `x ∈ A_i` at the horizon, if any.
    pub fn owner_of(&self, x: u64, horizon: &Horizon) -> Option<usize> {
        self.pairs.iter().position(|p| p.a.holds(x, horizon))
    }
}

/// A candidate (weak) selector, total on `0..values.len()`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SelectorCandidate<T = u64> {
    pub values: Vec<T>,
}

impl<T> SelectorCandidate<T> {
    pub fn new(values: Vec<T>) -> Self {
        SelectorCandidate { values }
    }

    pub fn bound(&self) -> usize {
        self.values.len()
    }
}

impl SelectorCandidate<u64> {
    /// Reads each value as a canonical index `n`, giving the weak selector `i ↦ D_n`.
    pub fn decode_weak(&self) -> SelectorCandidate<FiniteSet> {
        SelectorCandidate::new(self.values.iter().map(|&n| FiniteSet::from_code(n)).collect())
    }
}

/// Outcome of an extraction procedure at one index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extracted<T> {
    Value(T),
    /// The index falls among the finitely many the procedure leaves to be
    /// fixed by hand.
    NeedsManualExtension,
    /// The search ran off the horizon.
    HorizonExceeded,
}

impl<T> Extracted<T> {
    pub fn value(&self) -> Option<&T> {
        match self {
            Extracted::Value(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    EnumeratedIntoB { value: u64 },
    ContainedInB { members: FiniteSet },
    IndexOutOfRange { index: usize, len: usize },
}

/// Horizon-relative truth of `f(i) ∈ C_i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Confirmed { stage: usize },
    Violated { stage: usize, witness: Violation },
    Pending,
}

impl Verdict {
    pub fn is_confirmed(&self) -> bool {
        matches!(self, Verdict::Confirmed { .. })
    }

    pub fn is_violated(&self) -> bool {
        matches!(self, Verdict::Violated { .. })
    }

    /// Position in the only order verdicts may move in as the horizon grows.
    pub fn rank(&self) -> u8 {
        match self {
            Verdict::Pending => 0,
            Verdict::Confirmed { .. } => 1,
            Verdict::Violated { .. } => 2,
        }
    }
}

pub fn check_selector(f: &SelectorCandidate, seq: &DiffSequence, horizon: &Horizon) -> Vec<Verdict> {
    f.values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let Some(p) = seq.pairs.get(i) else {
                return Verdict::Violated {
                    stage: 0,
                    witness: Violation::IndexOutOfRange { index: i, len: seq.len() },
                };
            };
            if p.b.holds(v, horizon) {
                Verdict::Violated {
                    stage: p.b.stage_of(v).unwrap_or(0),
                    witness: Violation::EnumeratedIntoB { value: v },
                }
            } else if p.a.holds(v, horizon) {
                Verdict::Confirmed { stage: p.a.stage_of(v).unwrap_or(0) }
            } else {
                Verdict::Pending
            }
        })
        .collect()
}

/// Stage by which all of `d` is enumerated into `e`, if it is by the horizon.
fn subset_stage(d: &FiniteSet, e: &Enumeration, horizon: &Horizon) -> Option<usize> {
    d.members().iter().try_fold(0, |acc, &x| {
        e.stage_of(x).filter(|&s| s < horizon.stages).map(|s| acc.max(s))
    })
}

/// Checks `D_{f(i)} ⊆ A_i` and `D_{f(i)} ⊄ B_i` directly on the members.
pub fn check_weak_selector(
    f: &SelectorCandidate<FiniteSet>,
    seq: &DiffSequence,
    horizon: &Horizon,
) -> Vec<Verdict> {
    f.values
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let Some(p) = seq.pairs.get(i) else {
                return Verdict::Violated {
                    stage: 0,
                    witness: Violation::IndexOutOfRange { index: i, len: seq.len() },
                };
            };
            if let Some(stage) = subset_stage(d, &p.b, horizon) {
                Verdict::Violated { stage, witness: Violation::ContainedInB { members: d.clone() } }
            } else if let Some(stage) = subset_stage(d, &p.a, horizon) {
                Verdict::Confirmed { stage }
            } else {
                Verdict::Pending
            }
        })
        .collect()
}

/// The hat-transformed sequence together with what fell outside the index window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HatTransform {
    pub sequence: DiffSequence,
    /// Indices are restricted to `n < 2^window_bits`.
    pub window_bits: u32,
    /// Members of `A_i ∪ B_i` whose singleton index lies outside the window.
    pub out_of_window: Vec<BTreeSet<u64>>,
}

fn hat_of(e: &Enumeration, horizon: &Horizon, window_bits: u32, index: usize, which: char) -> Result<Enumeration> {
    let members: Vec<(u64, usize)> = e
        .entries()
        .iter()
        .filter(|&&(s, x)| s < horizon.stages && x < window_bits as u64)
        .map(|&(s, x)| (x, s))
        .collect();
    if members.len() > HAT_MEMBER_LIMIT {
        return Err(Error::invalid(format!(
            "{which}_{index} has {} in-window members; the hat transform materializes at most {HAT_MEMBER_LIMIT}",
            members.len()
        )));
    }
    let mut staged = Vec::with_capacity(1 << members.len());
    for mask in 0u64..1 << members.len() {
        let mut code = 0u64;
        let mut stage = 0;
        for (bit, &(x, s)) in members.iter().enumerate() {
            if mask >> bit & 1 == 1 {
                code |= 1 << x;
                stage = stage.max(s);
            }
        }
        staged.push((stage, code));
    }
    Ok(Enumeration::from_staged(staged))
}

/// `Â_i = {n | D_n ⊆ A_i}` and `B̂_i = {n | D_n ⊆ B_i}` at the horizon; index
/// `n` enters at the largest stage among the members of `D_n`.
pub fn hat_transform(seq: &DiffSequence, horizon: &Horizon) -> Result<HatTransform> {
    let window_bits = horizon.elements.min(64) as u32;
    let mut pairs = Vec::with_capacity(seq.len());
    let mut out_of_window = Vec::with_capacity(seq.len());
    for (i, p) in seq.pairs.iter().enumerate() {
        pairs.push(DiffPair::new(
            hat_of(&p.a, horizon, window_bits, i, 'A')?,
            hat_of(&p.b, horizon, window_bits, i, 'B')?,
        ));
        out_of_window.push(
            p.a.at_horizon(horizon)
                .union(&p.b.at_horizon(horizon))
                .copied()
                .filter(|&x| x >= window_bits as u64)
                .collect(),
        );
    }
    Ok(HatTransform { sequence: DiffSequence::new(pairs), window_bits, out_of_window })
}

/// `Ã_i = {<i,0>} ∪ {<i,x+1> | x ∈ A_i}`, `B̃_i = {<i,0>} ∪ {<i,x+1> | x ∈ A_i ∩ B_i}`.
pub fn tilde_normalize(seq: &DiffSequence) -> DiffSequence {
    let pairs = seq
        .pairs
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let i = i as u64;
            let base = (0, pair(i, 0));
            let a = Enumeration::from_staged(
                std::iter::once(base).chain(p.a.entries().iter().map(|&(s, x)| (s, pair(i, x + 1)))),
            );
            let b = Enumeration::from_staged(std::iter::once(base).chain(p.a.entries().iter().filter_map(
                |&(sa, x)| p.b.stage_of(x).map(|sb| (sa.max(sb), pair(i, x + 1))),
            )));
            DiffPair::new(a, b)
        })
        .collect();
    DiffSequence::new(pairs)
}

/// Encodes the interval `U ⊆ X ⊆ V` as `A_i = {0} ∪ {1 | i ∈ V}`,
/// `B_i = {0 | i ∈ U}` for `i` below the element bound.
pub fn interval_encode(u: &Enumeration, v: &Enumeration, horizon: &Horizon) -> Result<DiffSequence> {
    let v_now = v.at_horizon(horizon);
    if let Some(x) = u.at_horizon(horizon).iter().find(|x| !v_now.contains(x)) {
        return Err(Error::invalid(format!("U is not contained in V at the horizon: {x} ∈ U \\ V")));
    }
    let pairs = (0..horizon.elements as u64)
        .map(|i| {
            let a = Enumeration::from_staged(
                std::iter::once((0, 0)).chain(v.stage_of(i).map(|s| (s, 1))),
            );
            let b = Enumeration::from_staged(u.stage_of(i).map(|s| (s, 0)));
            DiffPair::new(a, b)
        })
        .collect();
    Ok(DiffSequence::new(pairs))
}

pub fn is_separator(u: &BTreeSet<u64>, x: &BTreeSet<u64>, v: &BTreeSet<u64>) -> bool {
    u.is_subset(x) && x.is_subset(v)
}

/// `f(i) = 1` if `i ∈ X`, else `0`, for `i < bound`.
pub fn separator_to_selector(x: &BTreeSet<u64>, bound: usize) -> SelectorCandidate {
    SelectorCandidate::new((0..bound as u64).map(|i| u64::from(x.contains(&i))).collect())
}

pub fn selector_to_separator(f: &SelectorCandidate) -> BTreeSet<u64> {
    f.values.iter().enumerate().filter(|&(_, &v)| v == 1).map(|(i, _)| i as u64).collect()
}

/// `separator_to_selector` for a separator given as a bit mask.
pub fn mask_to_selector(x: u64, bound: usize) -> SelectorCandidate {
    SelectorCandidate::new((0..bound.min(64)).map(|i| x >> i & 1).collect())
}

/// `selector_to_separator` as a bit mask; `None` past 64 indices.
pub fn selector_to_mask(f: &SelectorCandidate) -> Option<u64> {
    if f.values.len() > 64 {
        return None;
    }
    Some(f.values.iter().enumerate().fold(0, |m, (i, &v)| m | u64::from(v == 1) << i))
}

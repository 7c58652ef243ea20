//! Oracle functionals on binary strings, the set `W` of strings that force a
//! selector value into some `B_i`, and the computable selector read off a
//! string that no extension of lands in `W`.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::diff::{DiffSequence, Extracted};
use crate::error::{Error, Result};
use crate::numbering::Horizon;

/// A finite binary string, ordered length-lexicographically.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct BitString(pub Vec<bool>);

impl BitString {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_prefix_of(&self, other: &BitString) -> bool {
        other.0.starts_with(&self.0)
    }

    pub fn comparable(&self, other: &BitString) -> bool {
        self.is_prefix_of(other) || other.is_prefix_of(self)
    }

    pub fn child(&self, bit: bool) -> BitString {
        let mut v = self.0.clone();
        v.push(bit);
        BitString(v)
    }

    /// Every string of length `n`, in lexicographic order.
    pub fn all_of_length(n: usize) -> impl Iterator<Item = BitString> {
        (0u64..1 << n).map(move |m| BitString((0..n).rev().map(|b| m >> b & 1 == 1).collect()))
    }

    /// `self` and all its extensions of length at most `max_len`.
    pub fn extensions(&self, max_len: usize) -> Vec<BitString> {
        let mut out = Vec::new();
        if self.len() > max_len {
            return out;
        }
        for extra in 0..=max_len - self.len() {
            for tail in BitString::all_of_length(extra) {
                let mut v = self.0.clone();
                v.extend(tail.0);
                out.push(BitString(v));
            }
        }
        out
    }
}

impl Ord for BitString {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len().cmp(&other.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for BitString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::invalid(format!("'{other}' is not a binary digit"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(BitString)
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(deserializer)?.parse().map_err(serde::de::Error::custom)
    }
}

/// `{e}^σ(i) = value` for every `σ` extending `sigma`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Axiom {
    pub sigma: BitString,
    pub index: usize,
    pub value: u64,
}

/// A use-monotone oracle functional given by finitely many axioms.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MonotoneFunctional {
    axioms: Vec<Axiom>,
}

impl MonotoneFunctional {
    /// Rejects axioms that give different values on comparable strings.
    pub fn new(axioms: Vec<Axiom>) -> Result<Self> {
        for (n, x) in axioms.iter().enumerate() {
            for y in &axioms[n + 1..] {
                if x.index == y.index && x.value != y.value && x.sigma.comparable(&y.sigma) {
                    return Err(Error::invalid(format!(
                        "inconsistent axioms: {}↦{} and {}↦{} at index {}",
                        x.sigma, x.value, y.sigma, y.value, x.index
                    )));
                }
            }
        }
        Ok(MonotoneFunctional { axioms })
    }

    pub fn axioms(&self) -> &[Axiom] {
        &self.axioms
    }

    /// `{e}^σ(i)`, or `None` when it diverges.
    pub fn apply(&self, sigma: &BitString, i: usize) -> Option<u64> {
        self.axioms
            .iter()
            .find(|a| a.index == i && a.sigma.is_prefix_of(sigma))
            .map(|a| a.value)
    }

    fn bad_axioms<'a>(&'a self, seq: &'a DiffSequence, horizon: &'a Horizon) -> impl Iterator<Item = &'a Axiom> + 'a {
        self.axioms
            .iter()
            .filter(move |a| seq.pairs.get(a.index).is_some_and(|p| p.b.holds(a.value, horizon)))
    }
}

impl Serialize for MonotoneFunctional {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let triples: Vec<(&BitString, usize, u64)> =
            self.axioms.iter().map(|a| (&a.sigma, a.index, a.value)).collect();
        triples.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for MonotoneFunctional {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let triples = Vec::<(BitString, usize, u64)>::deserialize(deserializer)?;
        MonotoneFunctional::new(
            triples.into_iter().map(|(sigma, index, value)| Axiom { sigma, index, value }).collect(),
        )
        .map_err(serde::de::Error::custom)
    }
}

/// `W = {σ | ∃i: {e}^σ(i)↓ ∈ B_i}`, restricted to `|σ| ≤ max_len`.
pub fn bad_strings(
    functional: &MonotoneFunctional,
    seq: &DiffSequence,
    max_len: usize,
    horizon: &Horizon,
) -> BTreeSet<BitString> {
    functional
        .bad_axioms(seq, horizon)
        .flat_map(|a| a.sigma.extensions(max_len))
        .collect()
}

/// Finds the length-lexicographically least `τ ⊇ σ` with `|τ| ≤ max_len`
/// lying in `W`, if any.
pub fn forcing_violation(
    sigma: &BitString,
    functional: &MonotoneFunctional,
    seq: &DiffSequence,
    max_len: usize,
    horizon: &Horizon,
) -> Option<Error> {
    functional
        .bad_axioms(seq, horizon)
        .filter(|a| a.sigma.comparable(sigma))
        .map(|a| (longer(sigma, &a.sigma), a))
        .filter(|(tau, _)| tau.len() <= max_len)
        .min_by(|x, y| x.0.cmp(&y.0))
        .map(|(tau, a)| Error::ForcingViolated { tau: tau.to_string(), index: a.index, value: a.value })
}

fn longer(x: &BitString, y: &BitString) -> BitString {
    if x.len() >= y.len() {
        x.clone()
    } else {
        y.clone()
    }
}

/// `g(i) = {e}^{σ_i}(i)` for the length-lexicographically first `σ_i ⊇ σ`
/// with `|σ_i| ≤ max_len` whose value lies in `A_i`.
///
/// The forcing condition (no extension of `σ` up to `max_len` lies in `W`)
/// is checked first; a violation is returned as an error.
pub fn extract_selector(
    sigma: &BitString,
    functional: &MonotoneFunctional,
    seq: &DiffSequence,
    horizon: &Horizon,
    max_len: usize,
) -> Result<Vec<Extracted<u64>>> {
    if let Some(err) = forcing_violation(sigma, functional, seq, max_len, horizon) {
        return Err(err);
    }
    let out = (0..seq.len())
        .map(|i| {
            // The least τ is `σ` or an axiom string extending it: any τ with a
            // value at i extends the longer of σ and that value's axiom string.
            functional
                .axioms
                .iter()
                .filter(|a| a.index == i && a.sigma.comparable(sigma) && seq.pairs[i].a.holds(a.value, horizon))
                .map(|a| longer(sigma, &a.sigma))
                .filter(|tau| tau.len() <= max_len)
                .min()
                .and_then(|tau| functional.apply(&tau, i))
                .map_or(Extracted::HorizonExceeded, Extracted::Value)
        })
        .collect();
    Ok(out)
}

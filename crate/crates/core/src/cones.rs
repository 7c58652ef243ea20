//! Deficiency subsets `A^V` and the nested chain `V_k ⊆ … ⊆ V_1` whose
//! separators compute one of the sources, together with the two reduction
//! procedures behind that claim.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numbering::{Enumeration, Horizon};

fn injective_listing(e: &Enumeration, what: &str, horizon: &Horizon) -> Result<Vec<u64>> {
    if !e.is_injective() {
        return Err(Error::invalid(format!("{what} is not injective")));
    }
    Ok(e.truncated(horizon.stages).listing())
}

/// `A^V = {v(s) | ∃t > s: a(t) < v(s)}`, with `a` and `v` read as functions
/// of their listing positions. `v(s)` enters at the first such `t` (or later,
/// if `v(s)` itself was enumerated later).
pub fn deficiency_subset(a: &Enumeration, v: &Enumeration, horizon: &Horizon) -> Result<Enumeration> {
    let la = injective_listing(a, "a", horizon)?;
    let lv = injective_listing(v, "v", horizon)?;
    let mut staged = Vec::new();
    for (s, &x) in lv.iter().enumerate() {
        if let Some(t) = (s + 1..la.len()).find(|&t| la[t] < x) {
            let stage = t
                .max(v.stage_of(x).unwrap_or(0))
                .max(a.stage_of(la[t]).unwrap_or(0));
            staged.push((stage, x));
        }
    }
    Ok(Enumeration::from_staged(staged))
}

/// Decides `x ∈ A^V` from the listings and membership queries to `A` below
/// `x`: with `n` such that `A ↾ x ⊆ {a(0), …, a(n)}`,
/// `x ∈ A^V ⟺ ∃t ≤ n ∃s < t: x = v(s) > a(t)`.
pub fn reduce_to_source(
    x: u64,
    a: &Enumeration,
    v: &Enumeration,
    source: impl Fn(u64) -> bool,
    horizon: &Horizon,
) -> Result<bool> {
    let la = injective_listing(a, "a", horizon)?;
    let lv = injective_listing(v, "v", horizon)?;
    let mut missing: BTreeSet<u64> = (0..x).filter(|&y| source(y)).collect();
    let mut n = 0;
    for (t, y) in la.iter().enumerate() {
        if missing.is_empty() {
            break;
        }
        missing.remove(y);
        n = t;
    }
    if !missing.is_empty() {
        return Err(Error::horizon(format!(
            "A ↾ {x} is not covered by the listing of a: {missing:?} never appear"
        )));
    }
    let Some(s_x) = lv.iter().position(|&y| y == x) else {
        return Ok(false);
    };
    Ok((s_x + 1..=n.min(la.len().saturating_sub(1))).any(|t| la[t] < x))
}

/// `A ↾ w` read off an escapee `w = v(s) ∉ A^V`: below `w`, `A` is exactly
/// `{a(0), …, a(s)}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EscapeeDecoder {
    pub below: u64,
    pub members: BTreeSet<u64>,
}

impl EscapeeDecoder {
    /// `None` at or above the escapee.
    pub fn contains(&self, x: u64) -> Option<bool> {
        (x < self.below).then(|| self.members.contains(&x))
    }
}

pub fn compute_from_escapee(w: u64, s: usize, a: &Enumeration) -> EscapeeDecoder {
    let members = a.listing().into_iter().take(s + 1).filter(|&y| y < w).collect();
    EscapeeDecoder { below: w, members }
}

/// `V_1 = A_1`, `V_{i+1} = A_{i+1}^{V_i}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeficiencyChain {
    pub sets: Vec<Enumeration>,
    pub sources: Vec<Enumeration>,
}

impl DeficiencyChain {
    /// The innermost set `V_k`.
    pub fn u(&self) -> &Enumeration {
        self.sets.last().expect("chains are nonempty")
    }

    /// The outermost set `V_1`.
    pub fn v(&self) -> &Enumeration {
        &self.sets[0]
    }

    /// First `(level, x, stage)` with `x` in `V_{level+1}` at `stage` but not yet in `V_level`.
    pub fn nesting_violation(&self) -> Option<(usize, u64, usize)> {
        self.sets.windows(2).enumerate().find_map(|(i, w)| {
            w[1].entries()
                .iter()
                .find(|&&(s, x)| w[0].stage_of(x).is_none_or(|s0| s0 > s))
                .map(|&(s, x)| (i + 1, x, s))
        })
    }

    /// Escapees `w ∈ V_level \ (V_{level+1} ∪ X)` at the horizon, each with
    /// its position in the listing of `V_level` (1-based levels).
    pub fn escapees(&self, level: usize, separator: &BTreeSet<u64>, horizon: &Horizon) -> Vec<(u64, usize)> {
        let inner = self.sets[level].at_horizon(horizon);
        self.sets[level - 1]
            .truncated(horizon.stages)
            .listing()
            .into_iter()
            .enumerate()
            .filter(|(_, w)| !inner.contains(w) && !separator.contains(w))
            .map(|(s, w)| (w, s))
            .collect()
    }
}

pub fn build_chain(sources: &[Enumeration], horizon: &Horizon) -> Result<DeficiencyChain> {
    let first = sources.first().ok_or_else(|| Error::invalid("a chain needs at least one source"))?;
    injective_listing(first, "A_1", horizon)?;
    let mut sets = vec![first.truncated(horizon.stages)];
    for a in &sources[1..] {
        let next = deficiency_subset(a, sets.last().unwrap(), horizon)?;
        sets.push(next);
    }
    Ok(DeficiencyChain { sets, sources: sources.to_vec() })
}

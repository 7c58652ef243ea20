//! The rigid structure compiled from a normalized sequence, the defining
//! formulas built from a weak selector, and the way back: extracting a weak
//! selector from any defining family, or a sequence from a structure.
//!
//! Element layout: `4i` and `4i+1` stand for index `i`; `4j+2` is moved by
//! `e_{a(j)}` onto `4i` where `a(j) ∈ A_i`; `4j+3` is moved by `e_{b(j)}` onto
//! `4i+1` where `b(j) ∈ B_i`. Every other value of every `e_k` is the identity.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::diff::{check_weak_selector, DiffSequence, Extracted, SelectorCandidate};
use crate::error::{Error, Result};
use crate::formula::{enumerate_formulas, eval_at, Formula, Interpretation, Term, Truth, Var};
use crate::numbering::{Enumeration, FiniteSet, Horizon};

/// The listings `a`, `b` of `∪A_i`, `∪B_i` and a choice `h(i) ∈ B_i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceFunctions {
    pub a: Enumeration,
    pub b: Enumeration,
    pub h: Vec<u64>,
}

pub fn derive_functions(seq: &DiffSequence, horizon: &Horizon) -> Result<SequenceFunctions> {
    seq.check_normalized(horizon)?;
    let union = |pick: fn(&crate::diff::DiffPair) -> &Enumeration| {
        let staged = seq
            .pairs
            .iter()
            .flat_map(|p| pick(p).entries().iter().copied().filter(|&(s, _)| s < horizon.stages));
        Enumeration::from_listing(Enumeration::from_staged(staged).listing())
    };
    let a = union(|p| &p.a);
    let b = union(|p| &p.b);
    let h = seq
        .pairs
        .iter()
        .map(|p| p.b.listing()[0])
        .collect();
    Ok(SequenceFunctions { a, b, h })
}

/// A finite generated piece of a structure with unary functions `e_k`.
///
/// Values not recorded are the identity. Elements outside `domain` are not
/// resolved: applying any `e_k` to them is pending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructureFragment {
    domain: BTreeSet<u64>,
    /// `n ↦ (k, e_k(n))` for the unique `k` moving `n`.
    moved: BTreeMap<u64, (u64, u64)>,
    /// `target ↦ [(k, n)]` with `e_k(n) = target`, `n ≠ target`.
    incoming: BTreeMap<u64, Vec<(u64, u64)>>,
    constants: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct FragmentRepr {
    domain: BTreeSet<u64>,
    values: Vec<(u64, u64, u64)>,
    constants: Vec<u64>,
}

impl Serialize for StructureFragment {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        FragmentRepr {
            domain: self.domain.clone(),
            values: self.values(),
            constants: self.constants.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for StructureFragment {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let r = FragmentRepr::deserialize(deserializer)?;
        StructureFragment::new(r.domain, r.values, r.constants).map_err(serde::de::Error::custom)
    }
}

impl StructureFragment {
    /// `values` are `(k, n, e_k(n))` triples. Identity triples are dropped;
    /// at most one `k` may move a given `n`.
    pub fn new(
        domain: BTreeSet<u64>,
        values: impl IntoIterator<Item = (u64, u64, u64)>,
        constants: Vec<u64>,
    ) -> Result<Self> {
        let mut moved = BTreeMap::new();
        let mut incoming: BTreeMap<u64, Vec<(u64, u64)>> = BTreeMap::new();
        for (k, n, v) in values {
            if n == v {
                continue;
            }
            if !domain.contains(&n) || !domain.contains(&v) {
                return Err(Error::invalid(format!("e_{k}({n}) = {v} leaves the domain")));
            }
            if let Some(&(k0, v0)) = moved.get(&n) {
                if (k0, v0) != (k, v) {
                    return Err(Error::invalid(format!("{n} is moved by both e_{k0} and e_{k}")));
                }
                continue;
            }
            moved.insert(n, (k, v));
            incoming.entry(v).or_default().push((k, n));
        }
        if let Some(c) = constants.iter().find(|c| !domain.contains(c)) {
            return Err(Error::invalid(format!("constant {c} is outside the domain")));
        }
        Ok(StructureFragment { domain, moved, incoming, constants })
    }

    pub fn domain(&self) -> &BTreeSet<u64> {
        &self.domain
    }

    pub fn constants(&self) -> &[u64] {
        &self.constants
    }

    pub fn with_constants(mut self, constants: Vec<u64>) -> Result<Self> {
        if let Some(c) = constants.iter().find(|c| !self.domain.contains(c)) {
            return Err(Error::invalid(format!("constant {c} is outside the domain")));
        }
        self.constants = constants;
        Ok(self)
    }

    /// Non-identity values as `(k, n, e_k(n))`, ordered by `n`.
    pub fn values(&self) -> Vec<(u64, u64, u64)> {
        self.moved.iter().map(|(&n, &(k, v))| (k, n, v)).collect()
    }

    /// Function symbols with at least one non-identity value.
    pub fn symbols(&self) -> Vec<u64> {
        let ks: BTreeSet<u64> = self.moved.values().map(|&(k, _)| k).collect();
        ks.into_iter().collect()
    }

    /// `e_k(n)`, or horizon-exceeded when `n` is not resolved.
    pub fn value(&self, k: u64, n: u64) -> Result<u64> {
        self.apply(k, n)
            .ok_or_else(|| Error::horizon(format!("e_{k}({n}) is not resolved in this fragment")))
    }

    /// Largest `s` such that every element `0..=s` is resolved.
    pub fn resolved_through(&self) -> Option<u64> {
        let mut expect = 0;
        for &n in &self.domain {
            if n != expect {
                break;
            }
            expect += 1;
        }
        expect.checked_sub(1)
    }

    /// The substructure on `subset`, which must be closed under every `e_k`.
    pub fn restrict(&self, subset: &BTreeSet<u64>) -> Result<Self> {
        if let Some(n) = subset.iter().find(|n| !self.domain.contains(n)) {
            return Err(Error::invalid(format!("{n} is outside the domain")));
        }
        let values = self
            .moved
            .iter()
            .filter(|(n, _)| subset.contains(n))
            .map(|(&n, &(k, v))| (k, n, v));
        StructureFragment::new(subset.clone(), values, self.constants.clone())
    }
}

impl Interpretation for StructureFragment {
    fn domain(&self) -> &BTreeSet<u64> {
        &self.domain
    }

    fn apply(&self, k: u64, n: u64) -> Option<u64> {
        if !self.domain.contains(&n) {
            return None;
        }
        Some(match self.moved.get(&n) {
            Some(&(k0, v)) if k0 == k => v,
            _ => n,
        })
    }

    fn constant(&self, i: usize) -> Option<u64> {
        self.constants.get(i).copied()
    }

    fn preimages(&self, k: u64, target: u64) -> Option<Vec<u64>> {
        let mut out: Vec<u64> = self
            .incoming
            .get(&target)
            .into_iter()
            .flatten()
            .filter(|&&(k0, _)| k0 == k)
            .map(|&(_, n)| n)
            .collect();
        if self.domain.contains(&target) && self.apply(k, target) == Some(target) {
            out.push(target);
        }
        out.sort_unstable();
        Some(out)
    }
}

fn owner_in(seq: &DiffSequence, k: u64, horizon: &Horizon, in_b: bool) -> Option<usize> {
    seq.pairs
        .iter()
        .position(|p| if in_b { p.b.holds(k, horizon) } else { p.a.holds(k, horizon) })
}

/// Compiles every element resolved at the horizon: `4i` and `4i+1` (fixed by
/// every `e_k`), `4j+2` for each listed `a(j)`, and `4j+3` for each listed
/// `b(j)`, below `4|a|`. Elements `4j+3` with `b(j)` not yet listed are left
/// out, so the domain need not be an interval.
pub fn build_structure(seq: &DiffSequence, fns: &SequenceFunctions, horizon: &Horizon) -> Result<StructureFragment> {
    seq.check_normalized(horizon)?;
    let la = fns.a.len() as u64;
    let lb = fns.b.len() as u64;
    if la < seq.len() as u64 || lb < seq.len() as u64 || lb > la {
        return Err(Error::invalid("listings do not enumerate ∪A_i ⊇ ∪B_i"));
    }
    let domain: BTreeSet<u64> = (0..4 * la).filter(|n| n % 4 != 3 || n / 4 < lb).collect();
    let mut values = Vec::new();
    for (j, k) in fns.a.listing().into_iter().enumerate() {
        let i = owner_in(seq, k, horizon, false)
            .ok_or_else(|| Error::invalid(format!("a({j}) = {k} lies in no A_i")))?;
        values.push((k, 4 * j as u64 + 2, 4 * i as u64));
    }
    for (j, k) in fns.b.listing().into_iter().enumerate() {
        let i = owner_in(seq, k, horizon, true)
            .ok_or_else(|| Error::invalid(format!("b({j}) = {k} lies in no B_i")))?;
        values.push((k, 4 * j as u64 + 3, 4 * i as u64 + 1));
    }
    StructureFragment::new(domain, values, Vec::new())
}

/// `D_{c(s)}`: the substructure generated by `0..=s`.
pub fn closure(s: u64, frag: &StructureFragment) -> Result<BTreeSet<u64>> {
    let unresolved: Vec<u64> = (0..=s).filter(|n| !frag.domain.contains(n)).collect();
    if !unresolved.is_empty() {
        return Err(Error::Pending(format!("closure({s}) needs unresolved elements {unresolved:?}")));
    }
    let mut set: BTreeSet<u64> = (0..=s).collect();
    let mut frontier: Vec<u64> = set.iter().copied().collect();
    while let Some(n) = frontier.pop() {
        if let Some(&(_, v)) = frag.moved.get(&n) {
            if set.insert(v) {
                frontier.push(v);
            }
        }
    }
    Ok(set)
}

/// `(∃z ≠ x)[e_k(z) = x]` with `x = x0`, `z = x1`.
fn has_other_preimage(k: u64) -> Formula {
    Formula::exists(Var(1), Some(Term::var(0)), Formula::Eq(Term::apply(k, Term::var(1)), Term::var(0)))
}

/// `Φ_{4i}(x) = ⋀_{k ∈ D} (∃z ≠ x)[e_k(z) = x]`. Empty `D` gives the empty
/// conjunction, which defines nothing.
pub fn selection_formula(d: &FiniteSet) -> Formula {
    Formula::And(d.members().iter().map(|&k| has_other_preimage(k)).collect())
}

/// Defining formulas in the free variable `x0`, keyed by the element they define.
pub type FormulaFamily = BTreeMap<u64, Formula>;

/// Builds `Φ_m` for every element `m` of the compiled structure from a weak
/// selector confirmed on every index.
pub fn formulas_from_weak_selector(
    f: &SelectorCandidate<FiniteSet>,
    seq: &DiffSequence,
    fns: &SequenceFunctions,
    horizon: &Horizon,
) -> Result<FormulaFamily> {
    if f.bound() != seq.len() {
        return Err(Error::invalid(format!(
            "weak selector covers {} indices, sequence has {}",
            f.bound(),
            seq.len()
        )));
    }
    let verdicts = check_weak_selector(f, seq, horizon);
    if let Some((i, v)) = verdicts.iter().enumerate().find(|(_, v)| !v.is_confirmed()) {
        return Err(Error::invalid(format!("weak selector is not confirmed at index {i}: {v:?}")));
    }
    let x = Term::var(0);
    let mut family = FormulaFamily::new();
    for (i, d) in f.values.iter().enumerate() {
        let i = i as u64;
        let phi0 = selection_formula(d);
        let phi1 = Formula::conj(vec![
            Formula::exists(Var(1), Some(x.clone()), phi0.substitute(Var(0), &Term::var(1))),
            has_other_preimage(fns.h[i as usize]),
        ]);
        family.insert(4 * i, phi0);
        family.insert(4 * i + 1, phi1);
    }
    // e_k(x) lands on the element x is attached to, and must actually move x.
    let attached = |k: u64, target: u64, family: &FormulaFamily| {
        let moved = Term::apply(k, x.clone());
        Formula::conj(vec![
            family[&target].substitute(Var(0), &moved),
            Formula::Neq(moved, x.clone()),
        ])
    };
    for (j, k) in fns.a.listing().into_iter().enumerate() {
        let i = owner_in(seq, k, horizon, false)
            .ok_or_else(|| Error::invalid(format!("a({j}) = {k} lies in no A_i")))?;
        let phi = attached(k, 4 * i as u64, &family);
        family.insert(4 * j as u64 + 2, phi);
    }
    for (j, k) in fns.b.listing().into_iter().enumerate() {
        let i = owner_in(seq, k, horizon, true)
            .ok_or_else(|| Error::invalid(format!("b({j}) = {k} lies in no B_i")))?;
        let phi = attached(k, 4 * i as u64 + 1, &family);
        family.insert(4 * j as u64 + 3, phi);
    }
    Ok(family)
}

/// Whether `frag` restricted to `closure(s)` contains `target` and satisfies `phi` there.
fn satisfied_within(phi: &Formula, frag: &StructureFragment, s: u64, target: u64) -> Result<bool> {
    let cl = closure(s, frag)?;
    if !cl.contains(&target) {
        return Ok(false);
    }
    Ok(eval_at(phi, &frag.restrict(&cl)?, target)? == Truth::True)
}

/// Reads a weak selector off a defining family: for each index `i` with
/// `4i ∉ D_{c(s*)}`, finds the least `s_i > s*` with `D_{c(s_i)} ⊨ Φ_{4i}(4i)`
/// and collects `{k | ∃n ∈ D_{c(s_i)}: n ≠ 4i, e_k(n) = 4i}`.
pub fn extract_weak_selector(
    family: &FormulaFamily,
    frag: &StructureFragment,
    s_star: u64,
    indices: usize,
) -> Result<Vec<Extracted<FiniteSet>>> {
    let start = closure(s_star, frag)?;
    if let Some(c) = frag.constants.iter().find(|c| !start.contains(c)) {
        return Err(Error::invalid(format!("constant {c} is not in D_c({s_star})")));
    }
    let top = frag.resolved_through().unwrap_or(0);
    let mut out = Vec::with_capacity(indices);
    for i in 0..indices as u64 {
        let target = 4 * i;
        if start.contains(&target) {
            out.push(Extracted::NeedsManualExtension);
            continue;
        }
        let phi = family
            .get(&target)
            .ok_or_else(|| Error::invalid(format!("the family has no formula for {target}")))?;
        if top <= s_star || !satisfied_within(phi, frag, top, target)? {
            out.push(Extracted::HorizonExceeded);
            continue;
        }
        // Satisfaction is monotone in s, so the least s_i is found by bisection.
        let (mut lo, mut hi) = (s_star, top);
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if satisfied_within(phi, frag, mid, target)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let cl = closure(hi, frag)?;
        let d: FiniteSet = frag
            .incoming
            .get(&target)
            .into_iter()
            .flatten()
            .filter(|(_, n)| cl.contains(n))
            .map(|&(k, _)| k)
            .collect();
        out.push(Extracted::Value(d));
    }
    Ok(out)
}

/// Existential formulas up to a size bound, with their satisfaction sets
/// read as the sequence `A_i = {Φ | ⊨ Φ(i)}`, `B_i = {Φ | ⊨ (∃j ≠ i) Φ(j)}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormulaSequence {
    /// Code `c` is `formulas[c]`; it is enumerated at stage `c`.
    pub formulas: Vec<Formula>,
    pub sequence: DiffSequence,
}

pub fn sequence_from_structure(frag: &StructureFragment, depth: usize) -> Result<FormulaSequence> {
    let formulas = enumerate_formulas(depth, &frag.symbols(), frag.constants.len());
    let top = frag.domain.iter().next_back().map_or(0, |&m| m as usize + 1);
    let mut a: Vec<Vec<(usize, u64)>> = vec![Vec::new(); top];
    let mut b: Vec<Vec<(usize, u64)>> = vec![Vec::new(); top];
    for (code, phi) in formulas.iter().enumerate() {
        let mut sat = Vec::new();
        for &j in &frag.domain {
            match eval_at(phi, frag, j)? {
                Truth::True => sat.push(j),
                Truth::False => {}
                Truth::Pending => {
                    return Err(Error::Pending(format!("formula {phi} is undetermined at {j}")));
                }
            }
        }
        for i in 0..top as u64 {
            if sat.contains(&i) {
                a[i as usize].push((code, code as u64));
            }
            if sat.iter().any(|&j| j != i) {
                b[i as usize].push((code, code as u64));
            }
        }
    }
    let pairs = a
        .into_iter()
        .zip(b)
        .map(|(a, b)| crate::diff::DiffPair::new(Enumeration::from_staged(a), Enumeration::from_staged(b)))
        .collect();
    Ok(FormulaSequence { formulas, sequence: DiffSequence::new(pairs) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff::{tilde_normalize, DiffPair};
    use crate::numbering::pair;

    fn hz() -> Horizon {
        Horizon::new(32, 16).unwrap()
    }

    fn raw(pairs: &[(&[u64], &[u64])]) -> DiffSequence {
        DiffSequence::new(
            pairs
                .iter()
                .map(|(a, b)| DiffPair::new(a.iter().copied().collect(), b.iter().copied().collect()))
                .collect(),
        )
    }

    #[test]
    fn derive_functions_examples() {
        let t = tilde_normalize(&raw(&[(&[], &[])]));
        let fns = derive_functions(&t, &hz()).unwrap();
        assert_eq!(fns.a.listing(), vec![pair(0, 0)]);
        assert_eq!(fns.b.listing(), vec![pair(0, 0)]);
        assert_eq!(fns.h, vec![pair(0, 0)]);

        let t = tilde_normalize(&raw(&[(&[], &[]), (&[0], &[])]));
        let fns = derive_functions(&t, &hz()).unwrap();
        let a = fns.a.listing();
        let p = |x| a.iter().position(|&v| v == x).unwrap();
        assert!(p(pair(1, 0)) < p(pair(1, 1)));
        assert!(!fns.b.contains(pair(1, 1)));
        assert_eq!(fns.h, vec![pair(0, 0), pair(1, 0)]);

        assert!(derive_functions(&raw(&[(&[1], &[])]), &hz()).is_err());
    }

    #[test]
    fn build_structure_examples() {
        // a(0) ∈ A_3 sends 2 to 12; b(0) ∈ B_5 sends 3 to 21.
        let mut pairs = vec![DiffPair::default(); 6];
        for (i, p) in pairs.iter_mut().enumerate() {
            let base = 100 + i as u64;
            *p = DiffPair::new(Enumeration::from_staged([(1, base)]), Enumeration::from_staged([(1, base)]));
        }
        pairs[3].a = Enumeration::from_staged([(0, 7), (1, 103)]);
        pairs[5] = DiffPair::new(Enumeration::from_staged([(0, 9), (1, 105)]), Enumeration::from_staged([(0, 9), (1, 105)]));
        let seq = DiffSequence::new(pairs);
        let fns = SequenceFunctions {
            a: Enumeration::from_listing([7, 9, 100, 101, 102, 103, 104, 105]),
            b: Enumeration::from_listing([9, 100, 101, 102, 103, 104, 105]),
            h: vec![100, 101, 102, 103, 104, 9],
        };
        let frag = build_structure(&seq, &fns, &hz()).unwrap();
        assert_eq!(frag.value(7, 2).unwrap(), 12);
        assert_eq!(frag.value(9, 3).unwrap(), 21);
        for k in [0, 7, 9, 100] {
            assert_eq!(frag.value(k, 0).unwrap(), 0);
        }
        assert!(matches!(frag.value(7, 10_000), Err(Error::HorizonExceeded(_))));
    }

    #[test]
    fn fragment_rejects_two_movers() {
        let dom: BTreeSet<u64> = (0..4).collect();
        assert!(StructureFragment::new(dom.clone(), [(1, 2, 0), (2, 2, 1)], vec![]).is_err());
        assert!(StructureFragment::new(dom.clone(), [(1, 2, 9)], vec![]).is_err());
        assert!(StructureFragment::new(dom, [], vec![7]).is_err());
    }

    #[test]
    fn closure_examples() {
        let frag = StructureFragment::new((0..=13).collect(), [(5, 2, 12)], vec![]).unwrap();
        assert_eq!(closure(0, &frag).unwrap(), BTreeSet::from([0]));
        let c2 = closure(2, &frag).unwrap();
        assert!(c2.is_superset(&BTreeSet::from([0, 1, 2, 12])));
        assert!(closure(3, &frag).unwrap().is_superset(&c2));
        assert!(matches!(closure(20, &frag), Err(Error::Pending(_))));
    }

    #[test]
    fn selection_formula_shapes() {
        let phi = selection_formula(&FiniteSet::from_iter([7]));
        assert_eq!(phi, Formula::And(vec![has_other_preimage(7)]));
        assert_eq!(phi.to_string(), "(and (exists-ne x1 x0 (= (e 7 x1) x0)))");
        assert!(selection_formula(&FiniteSet::default()).is_empty_conjunction());
    }

    fn compiled() -> (DiffSequence, SequenceFunctions, StructureFragment, SelectorCandidate<FiniteSet>) {
        let t = tilde_normalize(&raw(&[(&[0, 1], &[0]), (&[2], &[]), (&[3, 4], &[4])]));
        let h = hz();
        let fns = derive_functions(&t, &h).unwrap();
        let frag = build_structure(&t, &fns, &h).unwrap();
        let f = SelectorCandidate::new(vec![
            FiniteSet::from_iter([pair(0, 2)]),
            FiniteSet::from_iter([pair(1, 0), pair(1, 3)]),
            FiniteSet::from_iter([pair(2, 4)]),
        ]);
        (t, fns, frag, f)
    }

    #[test]
    fn attached_formula_wraps_target() {
        let (t, fns, _, f) = compiled();
        let family = formulas_from_weak_selector(&f, &t, &fns, &hz()).unwrap();
        let m = fns.a.listing()[0];
        assert_eq!(m, pair(0, 0));
        let moved = Term::apply(m, Term::var(0));
        let expected = Formula::conj(vec![
            family[&0].substitute(Var(0), &moved),
            Formula::Neq(moved, Term::var(0)),
        ]);
        assert_eq!(family[&2], expected);
    }

    #[test]
    fn family_defines_each_element() {
        let (t, fns, frag, f) = compiled();
        let family = formulas_from_weak_selector(&f, &t, &fns, &hz()).unwrap();
        for (&m, phi) in family.iter().filter(|(m, _)| frag.domain().contains(m)) {
            for &j in frag.domain() {
                assert_eq!(eval_at(phi, &frag, j).unwrap(), Truth::from(j == m), "Φ_{m} at {j}");
            }
        }
    }

    #[test]
    fn unconfirmed_selector_is_rejected() {
        let (t, fns, _, _) = compiled();
        let bad = SelectorCandidate::new(vec![
            FiniteSet::from_iter([pair(0, 1)]),
            FiniteSet::from_iter([pair(1, 3)]),
            FiniteSet::from_iter([pair(2, 4)]),
        ]);
        assert!(formulas_from_weak_selector(&bad, &t, &fns, &hz()).is_err());
    }

    #[test]
    fn extraction_round_trip() {
        let (t, fns, frag, f) = compiled();
        let family = formulas_from_weak_selector(&f, &t, &fns, &hz()).unwrap();
        let got = extract_weak_selector(&family, &frag, 0, t.len()).unwrap();
        assert_eq!(got[0], Extracted::NeedsManualExtension);
        let h = hz();
        for (i, e) in got.iter().enumerate().skip(1) {
            let Extracted::Value(d) = e else { panic!("index {i}: {e:?}") };
            let p = &t.pairs[i];
            assert!(d.members().iter().all(|&k| p.a.holds(k, &h)));
            assert!(!d.members().iter().all(|&k| p.b.holds(k, &h)));
        }
    }

    #[test]
    fn extraction_collects_single_mover() {
        // Only e_9 moves anything onto 4; Φ_4 = (∃z≠x)[e_9(z)=x].
        let frag = StructureFragment::new((0..=7).collect(), [(9, 6, 4)], vec![]).unwrap();
        let family = FormulaFamily::from([(0, Formula::truth()), (4, selection_formula(&FiniteSet::from_iter([9])))]);
        let got = extract_weak_selector(&family, &frag, 0, 2).unwrap();
        assert_eq!(got[1], Extracted::Value(FiniteSet::from_iter([9])));
    }

    #[test]
    fn extraction_checks_constants() {
        let frag = StructureFragment::new((0..=7).collect(), [], vec![5]).unwrap();
        assert!(extract_weak_selector(&FormulaFamily::new(), &frag, 0, 0).is_err());
        assert!(extract_weak_selector(&FormulaFamily::new(), &frag, 5, 0).is_ok());
    }

    #[test]
    fn sequence_from_structure_examples() {
        // Only 4 has a preimage, under e_9.
        let frag = StructureFragment::new((0..=6).collect(), [(9, 6, 4)], vec![]).unwrap();
        let fs = sequence_from_structure(&frag, 3).unwrap();
        assert_eq!(fs.formulas[0], Formula::truth());
        for p in &fs.sequence.pairs[..=6] {
            assert!(p.a.contains(0) && p.b.contains(0));
        }
        let code = fs.formulas.iter().position(|f| *f == has_other_preimage(9)).unwrap() as u64;
        assert!(fs.sequence.pairs[4].a.contains(code));
        assert!(!fs.sequence.pairs[4].b.contains(code));

        let single = StructureFragment::new(BTreeSet::from([0]), [], vec![]).unwrap();
        let fs = sequence_from_structure(&single, 3).unwrap();
        assert!(fs.sequence.pairs[0].b.is_empty());
    }

    #[test]
    fn fragment_serde_round_trip() {
        let frag = StructureFragment::new((0..=6).collect(), [(9, 6, 4)], vec![1]).unwrap();
        let text = serde_json::to_string(&frag).unwrap();
        assert_eq!(text, r#"{"domain":[0,1,2,3,4,5,6],"values":[[9,6,4]],"constants":[1]}"#);
        assert_eq!(serde_json::from_str::<StructureFragment>(&text).unwrap(), frag);
    }
}

//! Seeded scenario generators for the suite and the tests.

use std::collections::BTreeSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diff::{tilde_normalize, DiffPair, DiffSequence, SelectorCandidate};
use crate::genericity::{Axiom, BitString, MonotoneFunctional};
use crate::numbering::{pair, Enumeration, FiniteSet, Horizon};

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A plain injective listing of `len` distinct values below `bound`.
pub fn injective_listing(rng: &mut SeededRng, len: usize, bound: u64) -> Enumeration {
    let mut values: Vec<u64> = (0..bound).collect();
    values.shuffle(rng);
    values.truncate(len.min(bound as usize));
    Enumeration::from_listing(values)
}

fn staged(rng: &mut SeededRng, values: &BTreeSet<u64>, stages: usize) -> Enumeration {
    Enumeration::from_staged(values.iter().map(|&x| (rng.random_range(0..stages), x)).collect::<Vec<_>>())
}

/// A raw sequence of `len` pairs with values below the element bound and
/// every `C_i` and `B_i` nonempty at the horizon.
pub fn raw_sequence(rng: &mut SeededRng, len: usize, max_members: usize, horizon: &Horizon) -> DiffSequence {
    let bound = horizon.elements as u64;
    let pairs = (0..len)
        .map(|_| {
            let size = rng.random_range(1..=max_members.max(1));
            let a: BTreeSet<u64> = (0..size).map(|_| rng.random_range(0..bound)).collect();
            let keep = *a.iter().copied().collect::<Vec<_>>().choose(rng).unwrap();
            let mut b: BTreeSet<u64> = a.iter().copied().filter(|&x| x != keep && rng.random_bool(0.5)).collect();
            if b.is_empty() || rng.random_bool(0.3) {
                let outside = rng.random_range(0..bound);
                if outside != keep {
                    b.insert(outside);
                }
            }
            if b.is_empty() {
                b.insert((keep + 1) % bound.max(2));
            }
            DiffPair::new(staged(rng, &a, horizon.stages), staged(rng, &b, horizon.stages))
        })
        .collect();
    DiffSequence::new(pairs)
}

/// A normalized sequence with a weak selector confirmed on every index.
pub fn normalized_with_weak_selector(
    rng: &mut SeededRng,
    len: usize,
    max_members: usize,
    horizon: &Horizon,
) -> (DiffSequence, SelectorCandidate<FiniteSet>) {
    let raw = raw_sequence(rng, len, max_members, horizon);
    let seq = tilde_normalize(&raw);
    let values = (0..len)
        .map(|i| {
            let c: Vec<u64> = raw.difference_at(i, horizon).into_iter().collect();
            let x = *c.choose(rng).unwrap();
            let mut d = BTreeSet::from([pair(i as u64, x + 1)]);
            if rng.random_bool(0.3) {
                d.insert(pair(i as u64, 0));
            }
            let a: Vec<u64> = seq.pairs[i].a.at_horizon(horizon).into_iter().collect();
            if rng.random_bool(0.3) {
                d.insert(*a.choose(rng).unwrap());
            }
            FiniteSet(d)
        })
        .collect();
    (seq, SelectorCandidate::new(values))
}

pub fn random_bits(rng: &mut SeededRng, max_len: usize) -> BitString {
    let len = rng.random_range(0..=max_len);
    BitString((0..len).map(|_| rng.random_bool(0.5)).collect())
}

/// A consistent functional whose axioms take values in `A_i ∪ B_i` or nearby.
pub fn random_functional(rng: &mut SeededRng, seq: &DiffSequence, horizon: &Horizon) -> MonotoneFunctional {
    let mut axioms: Vec<Axiom> = Vec::new();
    for (index, p) in seq.pairs.iter().enumerate() {
        let pool: Vec<u64> = p.a.at_horizon(horizon).union(&p.b.at_horizon(horizon)).copied().collect();
        for _ in 0..rng.random_range(1..=3) {
            let value = if pool.is_empty() || rng.random_bool(0.1) {
                rng.random_range(0..horizon.elements as u64)
            } else {
                *pool.choose(rng).unwrap()
            };
            let candidate = Axiom { sigma: random_bits(rng, 3), index, value };
            let clash = axioms
                .iter()
                .any(|a| a.index == index && a.value != value && a.sigma.comparable(&candidate.sigma));
            if !clash {
                axioms.push(candidate);
            }
        }
    }
    MonotoneFunctional::new(axioms).expect("clashing axioms are skipped")
}

/// Sources for a deficiency chain: `k` injective listings below `bound`.
pub fn chain_sources(rng: &mut SeededRng, k: usize, bound: u64) -> Vec<Enumeration> {
    (0..k)
        .map(|_| {
            let len = rng.random_range(1..=bound as usize);
            injective_listing(rng, len, bound)
        })
        .collect()
}

/// A random set between `lower` and `upper`.
pub fn between(rng: &mut SeededRng, lower: &BTreeSet<u64>, upper: &BTreeSet<u64>) -> BTreeSet<u64> {
    let p = rng.random_range(0.0..1.0);
    upper
        .iter()
        .copied()
        .filter(|x| lower.contains(x) || rng.random_bool(p))
        .collect()
}

//! The full invariant suite over seeded corpora. Reports carry no timing, so
//! the same seed always yields the same report.

use std::collections::BTreeSet;

use rand::RngExt;
use serde::{Deserialize, Serialize};

use crate::approx::{
    build_f_tilde, build_layered_f_tilde, build_layered_u, build_layered_v, build_layers, build_u_tilde,
    build_v_tilde, check_locality, escapee_recovery, generate_operator, generate_table, layer_ce_characterization,
    layered_reduction, ApproxTable, LocalityWitness, MembershipDecider,
};
use crate::cones::{build_chain, compute_from_escapee, deficiency_subset, reduce_to_source};
use crate::diff::{
    check_selector, check_weak_selector, interval_encode, is_separator, mask_to_selector, selector_to_mask,
    selector_to_separator, separator_to_selector, Extracted, SelectorCandidate, Verdict,
};
use crate::error::{Error, Result};
use crate::formula::{eval_at, Truth};
use crate::gen::{self, SeededRng};
use crate::genericity::{extract_selector, forcing_violation, Axiom, BitString, MonotoneFunctional};
use crate::numbering::{canonical_index, canonical_set, unpair, Enumeration, FiniteSet, Horizon};
use crate::structure::{build_structure, derive_functions, extract_weak_selector, formulas_from_weak_selector};

const KEPT_FAILURES: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub cases: usize,
    pub failure_count: usize,
    /// The first few failures, each with a concrete witness.
    pub failures: Vec<String>,
}

impl CheckReport {
    fn new(name: &str) -> Self {
        Self { name: name.to_owned(), cases: 0, failure_count: 0, failures: Vec::new() }
    }

    fn case(&mut self, ok: bool, witness: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.fail(witness());
        }
    }

    fn fail(&mut self, witness: String) {
        self.failure_count += 1;
        if self.failures.len() < KEPT_FAILURES {
            self.failures.push(witness);
        }
    }

    pub fn passed(&self) -> bool {
        self.failure_count == 0 && self.cases > 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Horizon for the approximation tables.
    pub horizon: Horizon,
    pub interval_universe: usize,
    pub structures: usize,
    pub functionals: usize,
    pub deficiency_pairs: usize,
    pub tables: usize,
}

impl SuiteConfig {
    pub fn new(seed: u64, horizon: Horizon) -> Self {
        Self {
            seed,
            horizon,
            interval_universe: 12,
            structures: 100,
            functionals: 50,
            deficiency_pairs: 100,
            tables: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub config: SuiteConfig,
    pub checks: Vec<CheckReport>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckReport::passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckReport> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub fn run_suite(config: &SuiteConfig) -> Result<SuiteReport> {
    let mut checks = vec![canonical_coding(1 << 16), interval_equivalence(config.interval_universe)?];
    let [round_trip, rigidity] = structure_round_trip(config.seed, config.structures)?;
    checks.extend([round_trip, rigidity]);
    checks.push(forcing_extraction(config.seed, config.functionals)?);
    checks.push(deficiency_procedures(config.seed, config.deficiency_pairs)?);
    let tables = approximation_corpus(config.seed, config.tables, &config.horizon)?;
    checks.push(approximation_inclusions(&tables)?);
    checks.push(procedure_equivalence(config.seed, &tables)?);
    checks.push(locality_validator(&tables));
    Ok(SuiteReport { config: config.clone(), checks })
}

/// `canonical_index(canonical_set(n)) = n` for every `n < limit`.
pub fn canonical_coding(limit: u64) -> CheckReport {
    let mut report = CheckReport::new("canonical-coding");
    for n in 0..limit {
        let back = canonical_index(&canonical_set(n));
        report.case(back == Ok(n), || format!("D_{n} decodes back to {back:?}"));
    }
    report
}

/// Every `U ⊆ X ⊆ V` over universes of size up to `max_universe`: the
/// encoded sequence confirms the selector of `X`, and the two maps invert.
pub fn interval_equivalence(max_universe: usize) -> Result<CheckReport> {
    let mut report = CheckReport::new("interval-equivalence");
    for size in 0..=max_universe {
        let horizon = Horizon::new(2, size.max(1))?;
        let full = (1u64 << size) - 1;
        let mut v_mask = full;
        loop {
            let mut u_mask = v_mask;
            loop {
                interval_case(&mut report, size, u_mask, v_mask, &horizon)?;
                if u_mask == 0 {
                    break;
                }
                u_mask = (u_mask - 1) & v_mask;
            }
            if v_mask == 0 {
                break;
            }
            v_mask -= 1;
        }
    }
    Ok(report)
}

fn mask_set(mask: u64) -> BTreeSet<u64> {
    (0..64).filter(|b| mask >> b & 1 == 1).collect()
}

/// Universes up to this size also run the set-based maps on every separator.
const SET_MAPS_UP_TO: usize = 8;

fn interval_case(report: &mut CheckReport, size: usize, u_mask: u64, v_mask: u64, horizon: &Horizon) -> Result<()> {
    let at_start = |m: u64| Enumeration::from_staged((0..size as u64).filter(|b| m >> b & 1 == 1).map(|x| (0, x)));
    let seq = interval_encode(&at_start(u_mask), &at_start(v_mask), horizon)?;
    // Verdicts are per index, so the verdicts of both constant selectors
    // determine the verdict of every selector index by index.
    let per_value: Vec<Vec<bool>> = (0..2)
        .map(|b| {
            check_selector(&SelectorCandidate::new(vec![b; size]), &seq, horizon)
                .iter()
                .map(Verdict::is_confirmed)
                .collect()
        })
        .collect();
    let confirms = |f: &SelectorCandidate| (0..size).all(|i| per_value[f.values[i] as usize][i]);
    let free = v_mask & !u_mask;
    let mut sub = free;
    loop {
        let x = u_mask | sub;
        let f = mask_to_selector(x, size);
        let confirmed = confirms(&f);
        let inverse = selector_to_mask(&f) == Some(x);
        let sets_agree = size > SET_MAPS_UP_TO || {
            let (u, v, xs) = (mask_set(u_mask), mask_set(v_mask), mask_set(x));
            let g = separator_to_selector(&xs, size);
            g == f && selector_to_separator(&g) == xs && is_separator(&u, &xs, &v)
        };
        report.case(confirmed && inverse && sets_agree, || {
            format!(
                "U={:?} X={:?} V={:?}: confirmed={confirmed} inverse={inverse}",
                mask_set(u_mask),
                mask_set(x),
                mask_set(v_mask)
            )
        });
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & free;
    }
    // A set dropping a member of U, or adding one outside V, must be refused.
    let full = (1u64 << size) - 1;
    let outside = if u_mask != 0 {
        Some(u_mask & (u_mask - 1))
    } else if v_mask != full {
        Some(v_mask | 1 << (!v_mask & full).trailing_zeros())
    } else {
        None
    };
    if let Some(o) = outside {
        let refused = !confirms(&mask_to_selector(o, size));
        report.case(refused, || {
            format!("U={:?} V={:?}: X={:?} outside the interval is confirmed", mask_set(u_mask), mask_set(v_mask), mask_set(o))
        });
    }
    Ok(())
}

/// Normalized sequences compiled into structures: each `Φ_m` holds exactly
/// at `m`, and extraction recovers a confirmed weak selector. The second
/// report isolates `Φ_{4i}`.
pub fn structure_round_trip(seed: u64, count: usize) -> Result<[CheckReport; 2]> {
    let horizon = Horizon::new(128, 64)?;
    let mut rng = gen::seeded(seed ^ 0x5354);
    let mut report = CheckReport::new("structure-round-trip");
    let mut rigidity = CheckReport::new("rigidity");
    for scenario in 0..count {
        let len = rng.random_range(2..=5);
        let (seq, f) = gen::normalized_with_weak_selector(&mut rng, len, 3, &horizon);
        let fns = derive_functions(&seq, &horizon)?;
        let frag = build_structure(&seq, &fns, &horizon)?;
        let family = formulas_from_weak_selector(&f, &seq, &fns, &horizon)?;
        for (&m, phi) in family.iter().filter(|(m, _)| frag.domain().contains(m)) {
            for &j in frag.domain() {
                let truth = eval_at(phi, &frag, j)?;
                let ok = truth == Truth::from(j == m);
                let witness = || format!("scenario {scenario}: Φ_{m} at {j} is {truth:?}");
                if m % 4 == 0 {
                    rigidity.case(ok, witness);
                } else {
                    report.case(ok, witness);
                }
            }
        }
        let extracted = extract_weak_selector(&family, &frag, 0, seq.len())?;
        let merged: Vec<FiniteSet> = extracted
            .iter()
            .zip(&f.values)
            .map(|(e, orig)| e.value().cloned().unwrap_or_else(|| orig.clone()))
            .collect();
        let verdicts = check_weak_selector(&SelectorCandidate::new(merged), &seq, &horizon);
        for (i, e) in extracted.iter().enumerate() {
            if matches!(e, Extracted::Value(_)) {
                report.case(verdicts[i].is_confirmed(), || {
                    format!("scenario {scenario}: extracted index {i} is {:?}", verdicts[i])
                });
            }
        }
    }
    Ok([report, rigidity])
}

/// Functionals with a validated forcing string yield selectors with no
/// violated index; an injected bad axiom above the string is refused.
pub fn forcing_extraction(seed: u64, count: usize) -> Result<CheckReport> {
    let horizon = Horizon::new(32, 16)?;
    let max_len = 8;
    let mut rng = gen::seeded(seed ^ 0x4745);
    let mut report = CheckReport::new("forcing-extraction");
    let mut validated = 0;
    while validated < count {
        let len = rng.random_range(1..=4);
        let seq = gen::raw_sequence(&mut rng, len, 4, &horizon);
        let functional = gen::random_functional(&mut rng, &seq, &horizon);
        let Some(sigma) = (0..=3)
            .flat_map(BitString::all_of_length)
            .find(|s| forcing_violation(s, &functional, &seq, max_len, &horizon).is_none())
        else {
            continue;
        };
        validated += 1;
        let g = extract_selector(&sigma, &functional, &seq, &horizon, max_len)?;
        let values: Vec<u64> = g.iter().map(|e| e.value().copied().unwrap_or(u64::MAX)).collect();
        let verdicts = check_selector(&SelectorCandidate::new(values), &seq, &horizon);
        for (i, e) in g.iter().enumerate() {
            if let Extracted::Value(x) = e {
                report.case(!verdicts[i].is_violated(), || {
                    format!("σ={sigma}: g({i}) = {x} is violated: {:?}", verdicts[i])
                });
            }
        }
        if let Some(injected) = inject_bad_axiom(&functional, &seq, &sigma, &horizon) {
            let got = extract_selector(&sigma, &injected, &seq, &horizon, max_len);
            report.case(matches!(got, Err(Error::ForcingViolated { .. })), || {
                format!("σ={sigma}: injected bad axiom not refused: {got:?}")
            });
        }
    }
    Ok(report)
}

fn inject_bad_axiom(
    functional: &MonotoneFunctional,
    seq: &crate::diff::DiffSequence,
    sigma: &BitString,
    horizon: &Horizon,
) -> Option<MonotoneFunctional> {
    for (index, p) in seq.pairs.iter().enumerate() {
        for value in p.b.at_horizon(horizon) {
            for bit in [true, false] {
                let mut axioms = functional.axioms().to_vec();
                axioms.push(Axiom { sigma: sigma.child(bit), index, value });
                if let Ok(f) = MonotoneFunctional::new(axioms) {
                    return Some(f);
                }
            }
        }
    }
    None
}

/// Deficiency subsets against the reduction to the source and the escapee
/// decoder, plus stage-wise nesting of chains of up to four sources.
pub fn deficiency_procedures(seed: u64, count: usize) -> Result<CheckReport> {
    let horizon = Horizon::new(64, 64)?;
    let bound = 64;
    let mut rng = gen::seeded(seed ^ 0x4445);
    let mut report = CheckReport::new("deficiency-procedures");
    for scenario in 0..count {
        let a_len = rng.random_range(1..=64);
        let v_len = rng.random_range(1..=40);
        let a = gen::injective_listing(&mut rng, a_len, bound);
        let v = gen::injective_listing(&mut rng, v_len, bound);
        let av = deficiency_subset(&a, &v, &horizon)?.at_horizon(&horizon);
        let range = a.at_horizon(&horizon);
        for x in 0..bound {
            let got = reduce_to_source(x, &a, &v, |y| range.contains(&y), &horizon)?;
            report.case(got == av.contains(&x), || {
                format!("scenario {scenario}: x={x} reduces to {got}, A^V says {}", av.contains(&x))
            });
        }
        let chain = build_chain(&[v.clone(), a.clone()], &horizon)?;
        let separator = gen::between(&mut rng, &BTreeSet::new(), &v.values());
        for (w, s) in chain.escapees(1, &separator, &horizon) {
            let decoder = compute_from_escapee(w, s, &a);
            for x in 0..w {
                let ok = decoder.contains(x) == Some(range.contains(&x));
                report.case(ok, || format!("scenario {scenario}: escapee {w} misreads {x}"));
            }
        }
        let k = rng.random_range(1..=4);
        let chain = build_chain(&gen::chain_sources(&mut rng, k, bound), &horizon)?;
        let nesting = chain.nesting_violation();
        report.case(nesting.is_none(), || format!("scenario {scenario}: chain nesting fails at {nesting:?}"));
    }
    Ok(report)
}

/// Seeded tables with `n` cycling through 1..=4.
pub fn approximation_corpus(seed: u64, count: usize, horizon: &Horizon) -> Result<Vec<(usize, u64, ApproxTable)>> {
    (0..count)
        .map(|k| {
            let n = 1 + k % 4;
            let table_seed = seed.wrapping_mul(1_000_003).wrapping_add(k as u64);
            Ok((n, table_seed, generate_table(n, table_seed, horizon)?))
        })
        .collect()
}

pub fn approximation_inclusions(tables: &[(usize, u64, ApproxTable)]) -> Result<CheckReport> {
    let mut report = CheckReport::new("approximation-inclusions");
    for (n, seed, t) in tables {
        let (u, f, v) = (build_u_tilde(t).values(), build_f_tilde(t), build_v_tilde(t).values());
        report.case(u.is_subset(&f) && f.is_subset(&v), || format!("table {seed}: Ũ ⊆ F̃ ⊆ Ṽ fails"));
        let (u, f, v) = (build_layered_u(t).values(), build_layered_f_tilde(t), build_layered_v(t).values());
        report.case(u.is_subset(&f) && f.is_subset(&v), || format!("table {seed}: U ⊆ F̃ ⊆ V fails"));
        let family = build_layers(t, *n)?;
        let total: usize = family.layers.iter().map(BTreeSet::len).sum();
        report.case(family.union() == f && total == f.len(), || format!("table {seed}: layers do not partition F̃"));
        report.case(family.layer(n + 1).is_empty(), || format!("table {seed}: the top layer is nonempty"));
    }
    Ok(report)
}

/// The three procedures against direct membership on every pair of every table.
pub fn procedure_equivalence(seed: u64, tables: &[(usize, u64, ApproxTable)]) -> Result<CheckReport> {
    let mut report = CheckReport::new("procedure-equivalence");
    let mut rng = gen::seeded(seed ^ 0x5052);
    for (n, table_seed, t) in tables {
        let (e, op) = generate_operator(t, *table_seed);
        let f = build_f_tilde(t);
        let (u, v) = (build_u_tilde(t).values(), build_v_tilde(t).values());
        let z = gen::between(&mut rng, &f, &v);
        let decider = MembershipDecider::new(t, &z, &e, &op)?;
        for code in t.pair_codes() {
            let d = decider.decide(code)?;
            let flips = t.flip_count(unpair(code).0 as usize);
            report.case(d.member == f.contains(&code) && d.depth <= flips, || {
                format!("table {table_seed}: pair {code} decided {d:?}, direct {}", f.contains(&code))
            });
        }
        escapee_case(&mut report, &mut rng, t, *table_seed, &e, &op, &u, &v)?;

        let family = build_layers(t, *n)?;
        for i in 1..=*n {
            let next = family.layer(i + 1);
            let got = layer_ce_characterization(t, i, |q| next.contains(&q));
            report.case(got == family.layer(i), || format!("table {table_seed}: layer {i} characterization differs"));
        }
        let (lu, lv) = (build_layered_u(t).values(), build_layered_v(t).values());
        for x in [build_layered_f_tilde(t), lv.clone(), lu.clone(), gen::between(&mut rng, &lu, &lv)] {
            let r = layered_reduction(&x, t, *n)?;
            report.case(r.layers == family && r.membership == t.limit_row(), || {
                format!("table {table_seed}: cascade from a set of {} pairs misses F", x.len())
            });
        }
    }
    Ok(report)
}

#[allow(clippy::too_many_arguments)]
fn escapee_case(
    report: &mut CheckReport,
    rng: &mut SeededRng,
    t: &ApproxTable,
    table_seed: u64,
    e: &Enumeration,
    op: &crate::approx::EnumOperator,
    u: &BTreeSet<u64>,
    v: &BTreeSet<u64>,
) -> Result<()> {
    let z = gen::between(rng, u, v);
    let rec = escapee_recovery(&z, e, op, t)?;
    let f = build_f_tilde(t);
    let truth: BTreeSet<u64> = f.difference(&z).map(|&q| unpair(q).0).collect();
    report.case(rec.escapees == truth, || format!("table {table_seed}: escapees {:?} vs {truth:?}", rec.escapees));
    for (&x, &b) in &rec.values {
        report.case(b == t.limit(x as usize), || format!("table {table_seed}: escapees misread F({x})"));
    }
    Ok(())
}

/// A table whose only violation is a flip of column 0 at stage 3 followed by
/// column 2 changing by row 5.
pub fn violating_table() -> ApproxTable {
    ApproxTable::from_columns(&["1000111", "1000000", "1000011"]).expect("well-formed columns")
}

pub const VIOLATING_WITNESS: LocalityWitness = LocalityWitness { x: 0, y: 2, s: 3, t: 5 };

pub fn locality_validator(tables: &[(usize, u64, ApproxTable)]) -> CheckReport {
    let mut report = CheckReport::new("locality-validator");
    for (n, seed, t) in tables {
        let local = check_locality(t);
        report.case(local.is_ok(), || format!("table {seed}: locality fails at {local:?}"));
        let bad = (0..t.elements()).find(|&x| !(1..=n + 1).contains(&t.flip_count(x)));
        report.case(bad.is_none(), || format!("table {seed}: column {bad:?} breaks the change bound"));
    }
    let got = check_locality(&violating_table());
    report.case(got == Err(VIOLATING_WITNESS), || format!("hand-built table gives {got:?}"));
    report
}

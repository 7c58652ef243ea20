//! Stage-wise 0/1 approximation tables under the locality discipline, the
//! pair-coded sets read off them, and the procedures that recover the limit
//! from any set squeezed between the c.e. bounds.
//!
//! A table has rows `F_0, …, F_S`; the limit `F` is the last row. "Flip at
//! `s`" means `F_s(x) ≠ F_{s+1}(x)`, so flips happen at `s < S`, and a pair
//! `⟨y, t⟩` ranges over `y < elements`, `t < S`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::IndexedRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numbering::{pair, unpair, Enumeration, Horizon};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TableRepr", into = "TableRepr")]
pub struct ApproxTable {
    rows: Vec<Vec<bool>>,
}

#[derive(Serialize, Deserialize)]
struct TableRepr {
    rows: Vec<Vec<u8>>,
    limit: Vec<u8>,
}

impl From<ApproxTable> for TableRepr {
    fn from(t: ApproxTable) -> Self {
        let bits = |r: &Vec<bool>| r.iter().map(|&b| u8::from(b)).collect::<Vec<_>>();
        TableRepr { limit: bits(t.rows.last().unwrap()), rows: t.rows.iter().map(bits).collect() }
    }
}

impl TryFrom<TableRepr> for ApproxTable {
    type Error = Error;

    fn try_from(r: TableRepr) -> Result<Self> {
        let rows = r
            .rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&b| match b {
                        0 => Ok(false),
                        1 => Ok(true),
                        _ => Err(Error::invalid(format!("table entry {b} is not 0 or 1"))),
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let table = ApproxTable::new(rows)?;
        let last: Vec<u8> = table.limit_row().iter().map(|&b| u8::from(b)).collect();
        if last != r.limit {
            return Err(Error::invalid("the limit row must equal the last row of the table"));
        }
        Ok(table)
    }
}

impl ApproxTable {
    pub fn new(rows: Vec<Vec<bool>>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::invalid("a table needs at least two rows"));
        }
        let width = rows[0].len();
        if width == 0 || rows.iter().any(|r| r.len() != width) {
            return Err(Error::invalid("table rows must share a positive width"));
        }
        Ok(Self { rows })
    }

    /// Builds a table from its columns, one string of `0`/`1` per element.
    pub fn from_columns(columns: &[&str]) -> Result<Self> {
        let len = columns.first().map_or(0, |c| c.len());
        if columns.iter().any(|c| c.len() != len || c.bytes().any(|b| b != b'0' && b != b'1')) {
            return Err(Error::invalid("columns must be equal-length 0/1 strings"));
        }
        let rows = (0..len)
            .map(|s| columns.iter().map(|c| c.as_bytes()[s] == b'1').collect())
            .collect();
        Self::new(rows)
    }

    /// The last stage `S`; rows run over `0..=S`.
    pub fn stages(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn elements(&self) -> usize {
        self.rows[0].len()
    }

    pub fn rows(&self) -> &[Vec<bool>] {
        &self.rows
    }

    pub fn value(&self, s: usize, x: usize) -> bool {
        self.rows[s][x]
    }

    pub fn limit(&self, x: usize) -> bool {
        self.rows[self.stages()][x]
    }

    pub fn limit_row(&self) -> &[bool] {
        &self.rows[self.stages()]
    }

    pub fn flips_at(&self, s: usize, x: usize) -> bool {
        self.rows[s][x] != self.rows[s + 1][x]
    }

    /// Least stage from which the column agrees with its limit.
    pub fn settling_stage(&self, x: usize) -> usize {
        (0..self.stages()).rev().find(|&s| self.flips_at(s, x)).map_or(0, |s| s + 1)
    }

    pub fn flip_count(&self, x: usize) -> usize {
        (0..self.stages()).filter(|&s| self.flips_at(s, x)).count()
    }

    pub fn max_flip_count(&self) -> usize {
        (0..self.elements()).map(|x| self.flip_count(x)).max().unwrap_or(0)
    }

    /// Rows 0 and 1 are all ones and all zeros.
    pub fn is_redefined(&self) -> bool {
        self.rows[0].iter().all(|&b| b) && self.rows[1].iter().all(|&b| !b)
    }

    pub fn fits(&self, horizon: &Horizon) -> Result<()> {
        if self.stages() != horizon.stages || self.elements() != horizon.elements {
            return Err(Error::invalid(format!(
                "table has {} stages and {} elements, horizon is {} by {}",
                self.stages(),
                self.elements(),
                horizon.stages,
                horizon.elements
            )));
        }
        Ok(())
    }

    /// Every `⟨y, t⟩` the table speaks about.
    pub fn pair_codes(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.elements()).flat_map(move |y| (0..self.stages()).map(move |t| pair(y as u64, t as u64)))
    }

    fn decode(&self, code: u64) -> Result<(usize, usize)> {
        let (y, t) = unpair(code);
        if y >= self.elements() as u64 || t >= self.stages() as u64 {
            return Err(Error::invalid(format!("pair ⟨{y},{t}⟩ lies outside the table")));
        }
        Ok((y as usize, t as usize))
    }

    /// Least flipping column at each stage `s < S`.
    fn least_flipper(&self) -> Vec<Option<usize>> {
        (0..self.stages())
            .map(|s| (0..self.elements()).find(|&x| self.flips_at(s, x)))
            .collect()
    }
}

impl fmt::Display for ApproxTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in &self.rows {
            let line: String = row.iter().map(|&b| if b { '1' } else { '0' }).collect();
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

/// `x < y < s < t`, a flip at `x` at stage `s`, and yet `F_s(y) ≠ F_t(y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalityWitness {
    pub x: usize,
    pub y: usize,
    pub s: usize,
    pub t: usize,
}

/// Returns the least violating quadruple, ordered by `(s, x, y, t)`.
pub fn check_locality(table: &ApproxTable) -> std::result::Result<(), LocalityWitness> {
    let n = table.elements();
    for s in 0..table.stages() {
        for x in 0..n.min(s) {
            if !table.flips_at(s, x) {
                continue;
            }
            for y in x + 1..n.min(s) {
                let v = table.value(s, y);
                if let Some(t) = (s + 1..=table.stages()).find(|&t| table.value(t, y) != v) {
                    return Err(LocalityWitness { x, y, s, t });
                }
            }
        }
    }
    Ok(())
}

/// Overwrites rows 0 and 1 with all ones and all zeros.
pub fn prefix_redefine(table: &ApproxTable) -> ApproxTable {
    let mut rows = table.rows.clone();
    rows[0].fill(true);
    rows[1].fill(false);
    ApproxTable { rows }
}

/// `c_t(y)`: the number of flips of column `y` at stages `s ≤ t`.
pub fn change_count(table: &ApproxTable, y: usize, t: usize) -> Result<usize> {
    if y >= table.elements() || t >= table.stages() {
        return Err(Error::invalid(format!("c_{t}({y}) lies outside the table")));
    }
    Ok((0..=t).filter(|&s| table.flips_at(s, y)).count())
}

fn counts(table: &ApproxTable, y: usize) -> Vec<usize> {
    let mut c = 0;
    (0..table.stages())
        .map(|s| {
            c += usize::from(table.flips_at(s, y));
            c
        })
        .collect()
}

/// `{⟨y,t⟩ | F_t(y) = F(y) = 1, F_{t+1}(y) = 0}`.
pub fn build_f_tilde(table: &ApproxTable) -> BTreeSet<u64> {
    let mut out = BTreeSet::new();
    for y in 0..table.elements() {
        for t in 0..table.stages() {
            if table.value(t, y) && table.limit(y) && !table.value(t + 1, y) {
                out.insert(pair(y as u64, t as u64));
            }
        }
    }
    out
}

/// Shared shape of the two lower bounds: `⟨y,t⟩` with the given drop at `t`
/// and some flip of an `x < y` at a stage `s > y` where `F_s(y) = F_t(y)`.
/// Enters once rows `s + 1` and `t + 1` are visible.
fn lower_bound(table: &ApproxTable, drop: impl Fn(usize, usize) -> bool) -> Enumeration {
    let least = table.least_flipper();
    let mut staged = Vec::new();
    for y in 0..table.elements() {
        for t in (0..table.stages()).filter(|&t| drop(y, t)) {
            let witness = (y + 1..table.stages())
                .find(|&s| least[s].is_some_and(|x| x < y) && table.value(s, y) == table.value(t, y));
            if let Some(s) = witness {
                staged.push(((s + 1).max(t + 1), pair(y as u64, t as u64)));
            }
        }
    }
    Enumeration::from_staged(staged)
}

/// `⟨y,t⟩` with the given drop at `t` and a later `s > t` where `F_s(y) = F_t(y)`.
fn upper_bound(table: &ApproxTable, drop: impl Fn(usize, usize) -> bool) -> Enumeration {
    let mut staged = Vec::new();
    for y in 0..table.elements() {
        for t in (0..table.stages()).filter(|&t| drop(y, t)) {
            if let Some(s) = (t + 1..=table.stages()).find(|&s| table.value(s, y) == table.value(t, y)) {
                staged.push((s, pair(y as u64, t as u64)));
            }
        }
    }
    Enumeration::from_staged(staged)
}

fn falls(table: &ApproxTable) -> impl Fn(usize, usize) -> bool + '_ {
    |y, t| table.value(t, y) && !table.value(t + 1, y)
}

/// The c.e. lower bound `Ũ` for the positive form.
pub fn build_u_tilde(table: &ApproxTable) -> Enumeration {
    lower_bound(table, falls(table))
}

/// The c.e. upper bound `Ṽ` for the positive form.
pub fn build_v_tilde(table: &ApproxTable) -> Enumeration {
    upper_bound(table, falls(table))
}

/// `{⟨y,t⟩ | F_t(y) = F(y), F_{t+1}(y) ≠ F_t(y)}`.
pub fn build_layered_f_tilde(table: &ApproxTable) -> BTreeSet<u64> {
    let mut out = BTreeSet::new();
    for y in 0..table.elements() {
        for t in 0..table.stages() {
            if table.flips_at(t, y) && table.value(t, y) == table.limit(y) {
                out.insert(pair(y as u64, t as u64));
            }
        }
    }
    out
}

/// The c.e. lower bound `U` for the layered form.
pub fn build_layered_u(table: &ApproxTable) -> Enumeration {
    lower_bound(table, |y, t| table.flips_at(t, y))
}

/// The c.e. upper bound `V` for the layered form.
pub fn build_layered_v(table: &ApproxTable) -> Enumeration {
    upper_bound(table, |y, t| table.flips_at(t, y))
}

/// `F̃^1, …, F̃^{n+1}`, split by the change count at the flip.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerFamily {
    pub layers: Vec<BTreeSet<u64>>,
}

impl LayerFamily {
    /// `F̃^i` for `i ≥ 1`; empty past the top.
    pub fn layer(&self, i: usize) -> BTreeSet<u64> {
        i.checked_sub(1).and_then(|k| self.layers.get(k)).cloned().unwrap_or_default()
    }

    pub fn union(&self) -> BTreeSet<u64> {
        self.layers.iter().flatten().copied().collect()
    }
}

fn check_flip_bound(table: &ApproxTable, n: usize) -> Result<()> {
    match (0..table.elements()).find(|&x| table.flip_count(x) > n + 1) {
        Some(x) => Err(Error::invalid(format!(
            "column {x} changes {} times, more than n + 1 = {}",
            table.flip_count(x),
            n + 1
        ))),
        None => Ok(()),
    }
}

pub fn build_layers(table: &ApproxTable, n: usize) -> Result<LayerFamily> {
    check_flip_bound(table, n)?;
    let mut layers = vec![BTreeSet::new(); n + 1];
    for y in 0..table.elements() {
        let c = counts(table, y);
        for t in 0..table.stages() {
            if table.flips_at(t, y) && table.value(t, y) == table.limit(y) {
                layers[c[t] - 1].insert(pair(y as u64, t as u64));
            }
        }
    }
    Ok(LayerFamily { layers })
}

/// `F̃^i` enumerated from `F̃^{i+1}`: a flip at `t` with `c_t(y) = i` whose
/// next flip `s` (where `c_s(y) = i + 1`) is not in `F̃^{i+1}`.
pub fn layer_ce_characterization(table: &ApproxTable, i: usize, next: impl Fn(u64) -> bool) -> BTreeSet<u64> {
    let mut out = BTreeSet::new();
    for y in 0..table.elements() {
        let c = counts(table, y);
        for t in (0..table.stages()).filter(|&t| table.flips_at(t, y) && c[t] == i) {
            let escapes = (t + 1..table.stages())
                .any(|s| table.flips_at(s, y) && c[s] == i + 1 && !next(pair(y as u64, s as u64)));
            if escapes {
                out.insert(pair(y as u64, t as u64));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperatorAxiom {
    pub condition: BTreeSet<u64>,
    pub element: u64,
    pub stage: usize,
}

/// A positive enumeration operator: `element` enters `W_{e,w}^E` once
/// `stage ≤ w` and `condition ⊆ E_w`, with `E_w` the part of `E` enumerated
/// before stage `w` on the same clock as the table rows.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EnumOperator {
    pub axioms: Vec<OperatorAxiom>,
}

impl EnumOperator {
    pub fn enumerates(&self, y: u64, e: &Enumeration, w: usize) -> bool {
        self.axioms.iter().any(|a| {
            a.element == y && a.stage <= w && a.condition.iter().all(|&c| e.contains_at(c, w))
        })
    }

    pub fn enumerated(&self, e: &Enumeration, w: usize) -> BTreeSet<u64> {
        self.axioms
            .iter()
            .filter(|a| a.stage <= w && a.condition.iter().all(|&c| e.contains_at(c, w)))
            .map(|a| a.element)
            .collect()
    }
}

fn check_between(lower: &BTreeSet<u64>, z: &BTreeSet<u64>, upper: &BTreeSet<u64>, what: &str) -> Result<()> {
    if let Some(p) = lower.difference(z).next() {
        let (y, t) = unpair(*p);
        return Err(Error::invalid(format!("{what}: ⟨{y},{t}⟩ is in the lower bound but not in the set")));
    }
    if let Some(p) = z.difference(upper).next() {
        let (y, t) = unpair(*p);
        return Err(Error::invalid(format!("{what}: ⟨{y},{t}⟩ is in the set but not in the upper bound")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    pub member: bool,
    /// Recursive calls made before answering.
    pub depth: usize,
}

/// Decides `F̃` from `E ⊕ Z`, assuming `F̃ ⊆ Z`. Built once per `Z` so the
/// interval check `Ũ ⊆ Z ⊆ Ṽ` runs once.
pub struct MembershipDecider<'a> {
    table: &'a ApproxTable,
    z: &'a BTreeSet<u64>,
    e: &'a Enumeration,
    op: &'a EnumOperator,
}

impl<'a> MembershipDecider<'a> {
    pub fn new(
        table: &'a ApproxTable,
        z: &'a BTreeSet<u64>,
        e: &'a Enumeration,
        op: &'a EnumOperator,
    ) -> Result<Self> {
        check_between(&build_u_tilde(table).values(), z, &build_v_tilde(table).values(), "Z")?;
        Ok(Self { table, z, e, op })
    }

    pub fn decide(&self, code: u64) -> Result<Decision> {
        let table = self.table;
        let (y, mut t) = table.decode(code)?;
        let mut depth = 0;
        loop {
            if !self.z.contains(&pair(y as u64, t as u64)) {
                return Ok(Decision { member: false, depth });
            }
            let s = (t + 1..=table.stages())
                .find(|&s| table.value(s, y))
                .ok_or_else(|| Error::invalid(format!("⟨{y},{t}⟩ ∈ Z but column {y} never returns to 1")))?;
            let mut next = None;
            for w in s..=table.stages() {
                if self.op.enumerates(y as u64, self.e, w) {
                    return Ok(Decision { member: true, depth });
                }
                if w < table.stages() && table.value(w, y) && !table.value(w + 1, y) {
                    next = Some(w);
                    break;
                }
            }
            t = next.ok_or_else(|| {
                Error::horizon(format!("no stage w ≥ {s} settles ⟨{y},{t}⟩ within the table"))
            })?;
            depth += 1;
        }
    }
}

pub fn decide_membership(
    code: u64,
    z: &BTreeSet<u64>,
    e: &Enumeration,
    op: &EnumOperator,
    table: &ApproxTable,
) -> Result<Decision> {
    MembershipDecider::new(table, z, e, op)?.decide(code)
}

/// What the escapees of `Z` reveal: each `y ∈ Y` fixes `F` below `y` as row `y + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EscapeeRecovery {
    pub escapees: BTreeSet<u64>,
    /// `F(x)` for every `x` below some escapee whose row `y + 1` exists.
    pub values: BTreeMap<u64, bool>,
}

/// `Y = {y | ∃t ⟨y,t⟩ ∈ F̃ \ Z}`, enumerated from `E ⊕ Z`: the drop at `t`
/// is read off the table and `F(y) = 1` off `W_e^E` at the last stage.
pub fn escapee_recovery(
    z: &BTreeSet<u64>,
    e: &Enumeration,
    op: &EnumOperator,
    table: &ApproxTable,
) -> Result<EscapeeRecovery> {
    check_between(&build_u_tilde(table).values(), z, &build_v_tilde(table).values(), "Z")?;
    let in_f = op.enumerated(e, table.stages());
    let escapees: BTreeSet<u64> = (0..table.elements())
        .filter(|&y| {
            in_f.contains(&(y as u64))
                && (0..table.stages()).any(|t| {
                    table.value(t, y) && !table.value(t + 1, y) && !z.contains(&pair(y as u64, t as u64))
                })
        })
        .map(|y| y as u64)
        .collect();
    Ok(EscapeeRecovery { values: recover_below(table, &escapees), escapees })
}

fn recover_below(table: &ApproxTable, escapees: &BTreeSet<u64>) -> BTreeMap<u64, bool> {
    let mut values = BTreeMap::new();
    let mut x = 0;
    for &y in escapees.iter().filter(|&&y| (y as usize) < table.stages()) {
        while x < y {
            values.insert(x, table.value(y as usize + 1, x as usize));
            x += 1;
        }
    }
    values
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "branch", rename_all = "kebab-case")]
pub enum LayerBranch {
    /// Pairs of `X` are decided through the next flip; pairs outside `X`
    /// are out except for the listed exceptions.
    Finite { exceptions: BTreeSet<u64> },
    /// The escapees fix `F` below `bound`; pairs at or above it fall back to
    /// the finite rule with `exceptions`.
    Escapee { escapees: BTreeSet<u64>, bound: u64, exceptions: BTreeSet<u64> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayeredReduction {
    /// `F̃^1, …, F̃^{n+1}` as computed from `X`.
    pub layers: LayerFamily,
    /// The branch taken at each layer `1..=n`.
    pub branches: Vec<LayerBranch>,
    /// `F(x)` for every column, read as `⟨x,0⟩ ∈ F̃^1`.
    pub membership: Vec<bool>,
}

/// Computes `F` from `X` with `U ⊆ X ⊆ V`, walking down from `F̃^{n+1} = ∅`.
pub fn layered_reduction(x_set: &BTreeSet<u64>, table: &ApproxTable, n: usize) -> Result<LayeredReduction> {
    check_flip_bound(table, n)?;
    check_between(&build_layered_u(table).values(), x_set, &build_layered_v(table).values(), "X")?;
    let mut layers = vec![BTreeSet::new(); n + 1];
    let mut branches = Vec::with_capacity(n);
    for i in (1..=n).rev() {
        let next = &layers[i];
        let escaped: BTreeSet<u64> = layer_ce_characterization(table, i, |p| next.contains(&p))
            .difference(x_set)
            .copied()
            .collect();
        let escapees: BTreeSet<u64> = escaped.iter().map(|&p| unpair(p).0).collect();
        let recovered = recover_below(table, &escapees);
        let bound = recovered.len() as u64;
        let mut layer = BTreeSet::new();
        for y in 0..table.elements() {
            let c = counts(table, y);
            for t in (0..table.stages()).filter(|&t| table.flips_at(t, y) && c[t] == i) {
                let code = pair(y as u64, t as u64);
                let member = if (y as u64) < bound {
                    table.value(t, y) == recovered[&(y as u64)]
                } else if escaped.contains(&code) {
                    true
                } else if !x_set.contains(&code) {
                    false
                } else {
                    let w = (t + 1..table.stages()).find(|&w| table.flips_at(w, y)).ok_or_else(|| {
                        Error::horizon(format!("layer {i}: no branch closes for ⟨{y},{t}⟩ within the table"))
                    })?;
                    !next.contains(&pair(y as u64, w as u64))
                };
                if member {
                    layer.insert(code);
                }
            }
        }
        branches.push(if bound > 0 {
            let exceptions = escaped.iter().copied().filter(|&p| unpair(p).0 >= bound).collect();
            LayerBranch::Escapee { escapees, bound, exceptions }
        } else {
            LayerBranch::Finite { exceptions: escaped }
        });
        layers[i - 1] = layer;
    }
    branches.reverse();
    let membership = (0..table.elements()).map(|x| layers[0].contains(&pair(x as u64, 0))).collect();
    Ok(LayeredReduction { layers: LayerFamily { layers }, branches, membership })
}

/// A redefined table whose columns change between 1 and `n + 1` times and
/// which satisfies the locality discipline by construction: at most one
/// column flips per stage, and a flip of `x` at `s` freezes every column
/// strictly between `x` and `s` for good.
pub fn generate_table(n: usize, seed: u64, horizon: &Horizon) -> Result<ApproxTable> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    horizon.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let table = sample_table(&mut rng, n, horizon);
        let bounded = (0..table.elements()).all(|x| (1..=n + 1).contains(&table.flip_count(x)));
        if bounded && check_locality(&table).is_ok() {
            return Ok(table);
        }
    }
}

fn sample_table(rng: &mut ChaCha8Rng, n: usize, horizon: &Horizon) -> ApproxTable {
    let (stages, width) = (horizon.stages, horizon.elements);
    let mut rows = vec![vec![false; width]; stages + 1];
    rows[0].fill(true);
    let mut frozen = vec![false; width];
    let mut budget = vec![n; width];
    let activity: f64 = rng.random_range(0.3..0.9);
    for s in 2..stages {
        rows[s + 1] = rows[s].clone();
        if !rng.random_bool(activity) {
            continue;
        }
        let open: Vec<usize> = (0..width).filter(|&x| !frozen[x] && budget[x] > 0).collect();
        if let Some(&x) = open.choose(rng) {
            rows[s + 1][x] = !rows[s][x];
            budget[x] -= 1;
            for f in frozen.iter_mut().take(s.min(width)).skip(x + 1) {
                *f = true;
            }
        }
    }
    ApproxTable { rows }
}

/// An enumeration `E` and an operator with `W_e^E = F` at the last stage:
/// each `y ∈ F` gets an axiom at its settling stage whose condition was
/// enumerated before then, plus decoys whose conditions never hold.
pub fn generate_operator(table: &ApproxTable, seed: u64) -> (Enumeration, EnumOperator) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (stages, width) = (table.stages(), table.elements() as u64);
    let mut staged = Vec::new();
    for x in 0..width {
        if rng.random_bool(0.5) {
            staged.push((rng.random_range(0..stages), x));
        }
    }
    let e = Enumeration::from_staged(staged);
    let absent: Vec<u64> = (0..width).filter(|&x| !e.contains(x)).collect();
    let mut axioms = Vec::new();
    for y in (0..table.elements()).filter(|&y| table.limit(y)) {
        let w = table.settling_stage(y);
        let early: Vec<u64> = e.entries().iter().filter(|&&(s, _)| s < w).map(|&(_, x)| x).collect();
        let size = rng.random_range(0..=early.len().min(2));
        let condition = early.sample(&mut rng, size).copied().collect();
        axioms.push(OperatorAxiom { condition, element: y as u64, stage: w });
    }
    for _ in 0..table.elements() / 4 {
        if let Some(&blocker) = absent.choose(&mut rng) {
            axioms.push(OperatorAxiom {
                condition: BTreeSet::from([blocker]),
                element: rng.random_range(0..width),
                stage: rng.random_range(0..=stages),
            });
        }
    }
    (e, EnumOperator { axioms })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cols(c: &[&str]) -> ApproxTable {
        ApproxTable::from_columns(c).unwrap()
    }

    fn p(y: u64, t: u64) -> u64 {
        pair(y, t)
    }

    fn flips(t: &ApproxTable, s: usize, x: usize) -> bool {
        t.rows()[s][x] != t.rows()[s + 1][x]
    }

    /// Lower bound straight from the definition, all quantifiers explicit.
    fn brute_lower(t: &ApproxTable, positive: bool) -> BTreeSet<u64> {
        let (ss, n) = (t.stages(), t.elements());
        let mut out = BTreeSet::new();
        for y in 0..n {
            for tt in 0..ss {
                let drop = if positive { t.value(tt, y) && !t.value(tt + 1, y) } else { flips(t, tt, y) };
                let mut hit = false;
                for x in 0..y {
                    for s in y + 1..ss {
                        let same = t.value(s, y) == t.value(tt, y) && (!positive || t.value(s, y));
                        hit |= flips(t, s, x) && same;
                    }
                }
                if drop && hit {
                    out.insert(p(y as u64, tt as u64));
                }
            }
        }
        out
    }

    fn brute_upper(t: &ApproxTable, positive: bool) -> BTreeSet<u64> {
        let mut out = BTreeSet::new();
        for y in 0..t.elements() {
            for tt in 0..t.stages() {
                let drop = if positive { t.value(tt, y) && !t.value(tt + 1, y) } else { flips(t, tt, y) };
                let later = (tt + 1..=t.stages()).any(|s| t.value(s, y) == t.value(tt, y));
                if drop && later {
                    out.insert(p(y as u64, tt as u64));
                }
            }
        }
        out
    }

    fn small() -> Horizon {
        Horizon::new(24, 8).unwrap()
    }

    #[test]
    fn locality_examples() {
        assert_eq!(check_locality(&cols(&["1000000", "1000000", "1000000"])), Ok(()));
        assert_eq!(check_locality(&cols(&["1010101010"])), Ok(()));
        // Column 0 flips at 3; column 2 sits at 0 through row 4 and reads 1 at row 5.
        let bad = cols(&["1000111", "1000000", "1000011"]);
        assert_eq!(check_locality(&bad), Err(LocalityWitness { x: 0, y: 2, s: 3, t: 5 }));
    }

    #[test]
    fn redefinition_examples() {
        let zero = ApproxTable::new(vec![vec![false; 3]; 5]).unwrap();
        let r = prefix_redefine(&zero);
        assert!(r.is_redefined());
        assert!(r.rows()[0].iter().all(|&b| b) && r.rows()[2..].iter().flatten().all(|&b| !b));
        assert!((0..3).all(|x| r.flip_count(x) == 1));
        assert_eq!(check_locality(&zero).is_ok(), check_locality(&r).is_ok());
    }

    #[test]
    fn change_count_examples() {
        let t = cols(&["100000", "101111"]);
        assert_eq!(change_count(&t, 0, 1).unwrap(), 1);
        assert_eq!(change_count(&t, 0, 3).unwrap(), 1);
        assert_eq!(change_count(&t, 1, 0).unwrap(), 1);
        assert_eq!(change_count(&t, 1, 2).unwrap(), 2);
        assert!(change_count(&t, 1, 5).is_err());
    }

    #[test]
    fn positive_form_examples() {
        let t = cols(&["1011"]);
        let f = build_f_tilde(&t);
        assert!(f.contains(&p(0, 0)));
        assert!(!f.contains(&p(0, 2)));
        let t = cols(&["1000", "1011"]);
        let f = build_f_tilde(&t);
        assert!(!f.contains(&p(0, 0)) && f.contains(&p(1, 0)));
        assert_eq!(build_f_tilde(&cols(&["10"])), BTreeSet::new());
    }

    #[test]
    fn layered_examples() {
        let t = cols(&["1011"]);
        let fam = build_layers(&t, 1).unwrap();
        assert!(fam.layer(1).contains(&p(0, 0)));
        assert!(fam.layer(2).is_empty());
        assert!(build_layers(&cols(&["101010"]), 2).is_err());
        let t = cols(&["10110", "10000", "10011"]);
        let fam = build_layers(&t, 2).unwrap();
        let f: BTreeSet<u64> = (0..3).filter(|&y| fam.layer(1).contains(&p(y, 0))).collect();
        let limit: BTreeSet<u64> = (0..3).filter(|&y| t.limit(y as usize)).collect();
        assert_eq!(f, limit);
        assert!(fam.layer(3).is_empty());
    }

    #[test]
    fn operator_is_stage_monotone() {
        let e = Enumeration::from_staged([(1, 0), (4, 2)]);
        let op = EnumOperator {
            axioms: vec![
                OperatorAxiom { condition: BTreeSet::from([0]), element: 5, stage: 0 },
                OperatorAxiom { condition: BTreeSet::from([0, 2]), element: 6, stage: 3 },
                OperatorAxiom { condition: BTreeSet::from([9]), element: 7, stage: 0 },
            ],
        };
        assert!(op.enumerated(&e, 1).is_empty());
        assert_eq!(op.enumerated(&e, 2), BTreeSet::from([5]));
        assert_eq!(op.enumerated(&e, 5), BTreeSet::from([5, 6]));
        for w in 0..8 {
            assert!(op.enumerated(&e, w).is_subset(&op.enumerated(&e, w + 1)));
        }
    }

    #[test]
    fn serde_round_trip_and_limit_check() {
        let t = cols(&["1011", "1000"]);
        let json = serde_json::to_string(&t).unwrap();
        assert_eq!(json, r#"{"rows":[[1,1],[0,0],[1,0],[1,0]],"limit":[1,0]}"#);
        assert_eq!(serde_json::from_str::<ApproxTable>(&json).unwrap(), t);
        assert!(serde_json::from_str::<ApproxTable>(r#"{"rows":[[1],[0]],"limit":[1]}"#).is_err());
        assert!(serde_json::from_str::<ApproxTable>(r#"{"rows":[[1],[2]],"limit":[2]}"#).is_err());
    }

    #[test]
    fn generated_tables_are_valid_and_seeded() {
        for n in 1..=4 {
            for seed in 0..20 {
                let t = generate_table(n, seed, &small()).unwrap();
                assert!(t.is_redefined());
                assert_eq!(check_locality(&t), Ok(()));
                assert!((0..t.elements()).all(|x| (1..=n + 1).contains(&t.flip_count(x))));
                assert_eq!(t, generate_table(n, seed, &small()).unwrap());
            }
        }
    }

    #[test]
    fn bounds_match_brute_force_and_nest() {
        for seed in 0..40 {
            let t = generate_table(1 + seed as usize % 4, seed, &small()).unwrap();
            let (u, v, f) = (build_u_tilde(&t).values(), build_v_tilde(&t).values(), build_f_tilde(&t));
            assert_eq!(u, brute_lower(&t, true));
            assert_eq!(v, brute_upper(&t, true));
            assert!(u.is_subset(&f) && f.is_subset(&v));
            let (u, v, f) = (build_layered_u(&t).values(), build_layered_v(&t).values(), build_layered_f_tilde(&t));
            assert_eq!(u, brute_lower(&t, false));
            assert_eq!(v, brute_upper(&t, false));
            assert!(u.is_subset(&f) && f.is_subset(&v));
            for y in 0..t.elements() {
                assert_eq!(t.limit(y), build_f_tilde(&t).contains(&p(y as u64, 0)));
            }
        }
    }

    #[test]
    fn layers_partition_and_characterize() {
        for seed in 0..40 {
            let n = 1 + seed as usize % 4;
            let t = generate_table(n, seed, &small()).unwrap();
            let fam = build_layers(&t, n).unwrap();
            assert_eq!(fam.union(), build_layered_f_tilde(&t));
            assert!(fam.layer(n + 1).is_empty());
            let total: usize = fam.layers.iter().map(|l| l.len()).sum();
            assert_eq!(total, fam.union().len());
            for i in 1..=n {
                let next = fam.layer(i + 1);
                assert_eq!(layer_ce_characterization(&t, i, |q| next.contains(&q)), fam.layer(i));
            }
        }
    }

    #[test]
    fn decider_matches_ground_truth() {
        for seed in 0..30 {
            let t = generate_table(1 + seed as usize % 4, seed, &small()).unwrap();
            let (e, op) = generate_operator(&t, seed);
            assert_eq!(op.enumerated(&e, t.stages()), (0..8).filter(|&y| t.limit(y as usize)).collect());
            let f = build_f_tilde(&t);
            let v = build_v_tilde(&t).values();
            let z: BTreeSet<u64> = f.union(&v.iter().copied().step_by(2).collect()).copied().collect();
            let decider = MembershipDecider::new(&t, &z, &e, &op).unwrap();
            for code in t.pair_codes() {
                let d = decider.decide(code).unwrap();
                assert_eq!(d.member, f.contains(&code));
                assert!(d.depth <= t.flip_count(unpair(code).0 as usize));
            }
        }
    }

    #[test]
    fn decider_rejects_sets_outside_the_interval() {
        let t = generate_table(2, 3, &small()).unwrap();
        let (e, op) = generate_operator(&t, 3);
        let mut z = build_v_tilde(&t).values();
        z.insert(p(0, 1));
        assert!(matches!(MembershipDecider::new(&t, &z, &e, &op), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn escapees_recover_the_limit() {
        let mut nonempty = 0;
        for seed in 0..60 {
            let t = generate_table(1 + seed as usize % 4, seed, &small()).unwrap();
            let (e, op) = generate_operator(&t, seed);
            let v = build_v_tilde(&t).values();
            assert!(escapee_recovery(&v, &e, &op, &t).unwrap().escapees.is_empty());
            let u = build_u_tilde(&t).values();
            let rec = escapee_recovery(&u, &e, &op, &t).unwrap();
            let f = build_f_tilde(&t);
            let truth: BTreeSet<u64> = f.difference(&u).map(|&q| unpair(q).0).collect();
            assert_eq!(rec.escapees, truth);
            nonempty += usize::from(!rec.values.is_empty());
            for (&x, &b) in &rec.values {
                assert_eq!(b, t.limit(x as usize));
            }
        }
        assert!(nonempty > 0);
    }

    #[test]
    fn cascade_matches_ground_truth() {
        let mut escapee_layers = 0;
        for seed in 0..40 {
            let n = 1 + seed as usize % 4;
            let t = generate_table(n, seed, &small()).unwrap();
            let fam = build_layers(&t, n).unwrap();
            let limit: Vec<bool> = t.limit_row().to_vec();
            for x in [build_layered_f_tilde(&t), build_layered_v(&t).values(), build_layered_u(&t).values()] {
                let r = layered_reduction(&x, &t, n).unwrap();
                assert_eq!(r.layers, fam);
                assert_eq!(r.membership, limit);
                assert_eq!(r.branches.len(), n);
                escapee_layers += r.branches.iter().filter(|b| matches!(b, LayerBranch::Escapee { .. })).count();
            }
        }
        assert!(escapee_layers > 0);
    }

    #[test]
    fn join_decomposition_is_exhaustive() {
        use crate::numbering::{join, split};
        let e = BTreeSet::from([0, 2]);
        let (ut, vt) = (BTreeSet::from([1]), BTreeSet::from([1, 3, 4]));
        let (u, v) = (join(&e, &ut), join(&e, &vt));
        let extra: Vec<u64> = v.difference(&u).copied().collect();
        for mask in 0..1u32 << extra.len() {
            let mut x = u.clone();
            x.extend(extra.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &q)| q));
            let (ex, z) = split(&x);
            assert_eq!(ex, e);
            assert!(ut.is_subset(&z) && z.is_subset(&vt));
            assert_eq!(join(&ex, &z), x);
        }
    }
}

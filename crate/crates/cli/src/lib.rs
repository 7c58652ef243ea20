//! Scenario runner: loads a scenario file, runs one construction with its
//! cross-checks, and assembles a deterministic report.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use selector_core::approx::{self, ApproxTable, EnumOperator};
use selector_core::cones::{build_chain, compute_from_escapee, reduce_to_source};
use selector_core::diff::{
    check_selector, check_weak_selector, hat_transform, interval_encode, selector_to_separator,
    separator_to_selector, tilde_normalize, DiffSequence, Extracted, SelectorCandidate, Verdict,
};
use selector_core::formula::{eval_at, Truth};
use selector_core::genericity::{extract_selector, forcing_violation, BitString, MonotoneFunctional};
use selector_core::numbering::{pair, unpair};
use selector_core::structure::{
    build_structure, derive_functions, extract_weak_selector, formulas_from_weak_selector,
};
use selector_core::suite::{run_suite, SuiteConfig};
use selector_core::{Enumeration, FiniteSet, Horizon};

const DEFAULT_HORIZON: Horizon = Horizon { stages: 64, elements: 32 };

#[derive(Debug, Parser)]
#[command(name = "selector", version, about = "Run selector-function constructions on scenario files")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[arg(long, global = true)]
    pub horizon_stages: Option<usize>,
    #[arg(long, global = true)]
    pub horizon_elements: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Structured)]
    pub format: Format,
    /// Adds wall-clock time to the report, which then is no longer reproducible byte for byte.
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Structured,
    Summary,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a selector or weak selector against a sequence.
    CheckSelector { file: PathBuf },
    /// Hat-transform a sequence.
    Hat { file: PathBuf },
    /// Normalize a sequence.
    Normalize { file: PathBuf },
    /// Compile a structure, its defining formulas and the extraction round trip.
    CompileStructure { file: PathBuf },
    /// Encode an interval U ⊆ V as a sequence.
    EncodeInterval { file: PathBuf },
    /// Extract a selector from a functional and a forcing string.
    ExtractGeneric { file: PathBuf },
    /// Build a deficiency chain with reduction cross-checks.
    BuildChain { file: PathBuf },
    /// Derive the pair sets and layers of an approximation table and cross-check the procedures.
    Approx { file: PathBuf },
    /// Run the full invariant suite on generated corpora.
    Suite { file: Option<PathBuf> },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("{0}")]
    Core(#[from] selector_core::Error),
    #[error("subcommand {command} expects a {expected} scenario, got {got}")]
    WrongKind { command: &'static str, expected: &'static str, got: &'static str },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        2
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(flatten)]
    pub body: Body,
    pub horizon: Option<Horizon>,
    pub seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "kebab-case")]
pub enum Body {
    Sequence(SequencePayload),
    Structure(StructurePayload),
    Generic(GenericPayload),
    Chain(ChainPayload),
    Approx(ApproxPayload),
    Interval(IntervalPayload),
    Suite(SuitePayload),
}

impl Body {
    fn kind(&self) -> &'static str {
        match self {
            Body::Sequence(_) => "sequence",
            Body::Structure(_) => "structure",
            Body::Generic(_) => "generic",
            Body::Chain(_) => "chain",
            Body::Approx(_) => "approx",
            Body::Interval(_) => "interval",
            Body::Suite(_) => "suite",
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequencePayload {
    pub sequence: DiffSequence,
    pub selector: Option<Vec<u64>>,
    pub weak_selector: Option<Vec<FiniteSet>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructurePayload {
    pub sequence: DiffSequence,
    /// Normalize the sequence first; `selector` then picks from the raw `C_i`.
    #[serde(default)]
    pub normalize: bool,
    pub selector: Option<Vec<u64>>,
    pub weak_selector: Option<Vec<FiniteSet>>,
    #[serde(default)]
    pub s_star: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenericPayload {
    pub sequence: DiffSequence,
    pub functional: MonotoneFunctional,
    pub sigma: BitString,
    pub max_len: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainPayload {
    pub sources: Vec<Enumeration>,
    pub k: Option<usize>,
    #[serde(default)]
    pub separator: BTreeSet<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApproxPayload {
    /// Generated from the seed when absent.
    pub table: Option<ApproxTable>,
    pub n: usize,
    /// Sets between the bounds, as `[y, t]` pairs.
    #[serde(rename = "Z")]
    pub z: Option<Vec<(u64, u64)>>,
    #[serde(rename = "X")]
    pub x: Option<Vec<(u64, u64)>>,
    #[serde(rename = "E")]
    pub e: Option<Enumeration>,
    pub operator: Option<EnumOperator>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalPayload {
    #[serde(rename = "U")]
    pub u: Enumeration,
    #[serde(rename = "V")]
    pub v: Enumeration,
    #[serde(rename = "X")]
    pub x: Option<BTreeSet<u64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuitePayload {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Counterexample,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub command: &'static str,
    pub horizon: Horizon,
    pub seed: u64,
    pub status: Status,
    pub checks: Vec<Check>,
    pub artifacts: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<u128>,
}

impl Report {
    pub fn exit_code(&self) -> u8 {
        match self.status {
            Status::Pass => 0,
            Status::Counterexample => 1,
        }
    }

    pub fn summary(&self) -> String {
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        let mut out = format!(
            "{}: {} ({} checks, {failed} failed)\n",
            self.command,
            match self.status {
                Status::Pass => "pass",
                Status::Counterexample => "counterexample",
            },
            self.checks.len()
        );
        for c in self.checks.iter().filter(|c| !c.passed) {
            let w = c.witness.as_ref().map_or(String::new(), |w| format!(": {w}"));
            out.push_str(&format!("  FAIL {}{w}\n", c.name));
        }
        out
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Structured => serde_json::to_string_pretty(self).expect("reports serialize") + "\n",
            Format::Summary => self.summary(),
        }
    }
}

#[derive(Default)]
struct Checks(Vec<Check>);

impl Checks {
    fn push(&mut self, name: impl Into<String>, passed: bool, witness: Option<Value>) {
        self.0.push(Check { name: name.into(), passed, witness });
    }

    fn pass(&mut self, name: impl Into<String>) {
        self.push(name, true, None);
    }

    fn fail(&mut self, name: impl Into<String>, witness: Value) {
        self.push(name, false, Some(witness));
    }

    fn expect(&mut self, name: impl Into<String>, passed: bool, witness: impl FnOnce() -> Value) {
        let witness = (!passed).then(witness);
        self.push(name, passed, witness);
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
    serde_json::from_str(&text).map_err(|source| CliError::Parse { path: path.into(), source })
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::CheckSelector { .. } => "check-selector",
        Command::Hat { .. } => "hat",
        Command::Normalize { .. } => "normalize",
        Command::CompileStructure { .. } => "compile-structure",
        Command::EncodeInterval { .. } => "encode-interval",
        Command::ExtractGeneric { .. } => "extract-generic",
        Command::BuildChain { .. } => "build-chain",
        Command::Approx { .. } => "approx",
        Command::Suite { .. } => "suite",
    }
}

/// Runs one subcommand. Input and horizon problems are errors; failed
/// checks are reported with a counterexample status.
pub fn run(cli: &Cli) -> Result<Report> {
    let start = Instant::now();
    let name = command_name(&cli.command);
    let file = match &cli.command {
        Command::Suite { file } => file.as_deref(),
        Command::CheckSelector { file }
        | Command::Hat { file }
        | Command::Normalize { file }
        | Command::CompileStructure { file }
        | Command::EncodeInterval { file }
        | Command::ExtractGeneric { file }
        | Command::BuildChain { file }
        | Command::Approx { file } => Some(file.as_path()),
    };
    let scenario = match file {
        Some(path) => load_scenario(path)?,
        None => Scenario { body: Body::Suite(SuitePayload::default()), horizon: None, seed: None },
    };
    let table_dims = match &scenario.body {
        Body::Approx(ApproxPayload { table: Some(t), .. }) => Some(Horizon { stages: t.stages(), elements: t.elements() }),
        _ => None,
    };
    let base = scenario.horizon.or(table_dims).unwrap_or(DEFAULT_HORIZON);
    let horizon = Horizon {
        stages: cli.horizon_stages.unwrap_or(base.stages),
        elements: cli.horizon_elements.unwrap_or(base.elements),
    };
    horizon.validate()?;
    let seed = cli.seed.or(scenario.seed).unwrap_or(0);

    let wrong = |expected| CliError::WrongKind { command: name, expected, got: scenario.body.kind() };
    let mut checks = Checks::default();
    let artifacts = match (&cli.command, &scenario.body) {
        (Command::CheckSelector { .. }, Body::Sequence(p)) => check_selector_cmd(p, &horizon, &mut checks)?,
        (Command::Hat { .. }, Body::Sequence(p)) => hat_cmd(p, &horizon, &mut checks)?,
        (Command::Normalize { .. }, Body::Sequence(p)) => normalize_cmd(p, &horizon, &mut checks)?,
        (Command::CompileStructure { .. }, Body::Structure(p)) => compile_cmd(p, &horizon, &mut checks)?,
        (Command::EncodeInterval { .. }, Body::Interval(p)) => interval_cmd(p, &horizon, &mut checks)?,
        (Command::ExtractGeneric { .. }, Body::Generic(p)) => generic_cmd(p, &horizon, &mut checks)?,
        (Command::BuildChain { .. }, Body::Chain(p)) => chain_cmd(p, &horizon, &mut checks)?,
        (Command::Approx { .. }, Body::Approx(p)) => approx_cmd(p, seed, &horizon, &mut checks)?,
        (Command::Suite { .. }, Body::Suite(_)) => suite_cmd(seed, &horizon, &mut checks)?,
        (Command::CheckSelector { .. } | Command::Hat { .. } | Command::Normalize { .. }, _) => {
            return Err(wrong("sequence"))
        }
        (Command::CompileStructure { .. }, _) => return Err(wrong("structure")),
        (Command::EncodeInterval { .. }, _) => return Err(wrong("interval")),
        (Command::ExtractGeneric { .. }, _) => return Err(wrong("generic")),
        (Command::BuildChain { .. }, _) => return Err(wrong("chain")),
        (Command::Approx { .. }, _) => return Err(wrong("approx")),
        (Command::Suite { .. }, _) => return Err(wrong("suite")),
    };
    let status = if checks.0.iter().all(|c| c.passed) { Status::Pass } else { Status::Counterexample };
    Ok(Report {
        command: name,
        horizon,
        seed,
        status,
        checks: checks.0,
        artifacts,
        elapsed_ms: cli.timing.then(|| start.elapsed().as_millis()),
    })
}

fn check_values(seq: &DiffSequence, horizon: &Horizon) -> Result<()> {
    for (i, p) in seq.pairs.iter().enumerate() {
        p.a.check_within(horizon, &format!("A_{i}"))?;
        p.b.check_within(horizon, &format!("B_{i}"))?;
    }
    Ok(())
}

fn differences(seq: &DiffSequence, horizon: &Horizon) -> Vec<BTreeSet<u64>> {
    (0..seq.len()).map(|i| seq.difference_at(i, horizon)).collect()
}

fn verdict_checks(checks: &mut Checks, verdicts: &[Verdict]) {
    for (i, v) in verdicts.iter().enumerate() {
        checks.expect(format!("index {i}"), !v.is_violated(), || json!(v));
    }
}

fn check_selector_cmd(p: &SequencePayload, horizon: &Horizon, checks: &mut Checks) -> Result<Value> {
    check_values(&p.sequence, horizon)?;
    let mut out = json!({ "differences": differences(&p.sequence, horizon) });
    match (&p.selector, &p.weak_selector) {
        (Some(f), _) => {
            let verdicts = check_selector(&SelectorCandidate::new(f.clone()), &p.sequence, horizon);
            verdict_checks(checks, &verdicts);
            out["verdicts"] = json!(verdicts);
        }
        (None, Some(f)) => {
            let verdicts = check_weak_selector(&SelectorCandidate::new(f.clone()), &p.sequence, horizon);
            verdict_checks(checks, &verdicts);
            out["weak_verdicts"] = json!(verdicts);
        }
        (None, None) => {
            return Err(selector_core::Error::InvalidInput("the payload needs a selector or a weak_selector".into()).into())
        }
    }
    Ok(out)
}

fn hat_cmd(p: &SequencePayload, horizon: &Horizon, checks: &mut Checks) -> Result<Value> {
    check_values(&p.sequence, horizon)?;
    let hat = hat_transform(&p.sequence, horizon)?;
    if let Some(f) = &p.weak_selector {
        // A weak selector and its codes on the hat sequence get the same verdicts.
        let weak = check_weak_selector(&SelectorCandidate::new(f.clone()), &p.sequence, horizon);
        if let Some(codes) = f.iter().map(FiniteSet::code).collect::<Option<Vec<u64>>>() {
            let coded = check_selector(&SelectorCandidate::new(codes), &hat.sequence, horizon);
            for (i, (w, c)) in weak.iter().zip(&coded).enumerate() {
                checks.expect(format!("index {i} agrees on the hat sequence"), w.rank() == c.rank(), || {
                    json!({ "weak": w, "hat": c })
                });
            }
        }
    }
    Ok(json!({ "hat": hat }))
}

fn normalize_cmd(p: &SequencePayload, horizon: &Horizon, checks: &mut Checks) -> Result<Value> {
    check_values(&p.sequence, horizon)?;
    let norm = tilde_normalize(&p.sequence);
    match norm.check_normalized(horizon) {
        Ok(()) => checks.pass("normalized"),
        Err(e) => checks.fail("normalized", json!(e.to_string())),
    }
    for i in 0..p.sequence.len() {
        let raw = p.sequence.difference_at(i, horizon).len();
        let tilde = norm.difference_at(i, horizon).len();
        checks.expect(format!("index {i} keeps its difference"), raw == tilde, || json!({ "raw": raw, "normalized": tilde }));
    }
    Ok(json!({ "normalized": norm, "differences": differences(&norm, horizon) }))
}

fn compile_cmd(p: &StructurePayload, horizon: &Horizon, checks: &mut Checks) -> Result<Value> {
    let seq = if p.normalize {
        check_values(&p.sequence, horizon)?;
        tilde_normalize(&p.sequence)
    } else {
        p.sequence.clone()
    };
    let weak = match (&p.weak_selector, &p.selector) {
        (Some(w), _) => w.clone(),
        (None, Some(f)) if p.normalize => {
            f.iter().enumerate().map(|(i, &x)| FiniteSet::from_iter([pair(i as u64, x + 1)])).collect()
        }
        _ => {
            return Err(selector_core::Error::InvalidInput(
                "the payload needs a weak_selector, or a selector together with normalize".into(),
            )
            .into())
        }
    };
    let weak = SelectorCandidate::new(weak);
    let fns = derive_functions(&seq, horizon)?;
    let frag = build_structure(&seq, &fns, horizon)?;
    let family = formulas_from_weak_selector(&weak, &seq, &fns, horizon)?;
    let mut wrong = Vec::new();
    for (&m, phi) in family.iter().filter(|(m, _)| frag.domain().contains(m)) {
        for &j in frag.domain() {
            let truth = eval_at(phi, &frag, j)?;
            if truth != Truth::from(j == m) {
                wrong.push(json!({ "formula": m, "element": j, "truth": format!("{truth:?}") }));
            }
        }
    }
    checks.expect("formulas define their elements", wrong.is_empty(), || json!(wrong.first()));
    let extracted = extract_weak_selector(&family, &frag, p.s_star, seq.len())?;
    let merged: Vec<FiniteSet> =
        extracted.iter().zip(&weak.values).map(|(e, w)| e.value().cloned().unwrap_or_else(|| w.clone())).collect();
    let verdicts = check_weak_selector(&SelectorCandidate::new(merged), &seq, horizon);
    for (i, e) in extracted.iter().enumerate() {
        if let Extracted::Value(d) = e {
            checks.expect(format!("extracted index {i}"), verdicts[i].is_confirmed(), || {
                json!({ "extracted": d, "verdict": verdicts[i] })
            });
        }
    }
    let formulas: serde_json::Map<String, Value> =
        family.iter().map(|(m, phi)| (m.to_string(), json!(phi.to_string()))).collect();
    Ok(json!({
        "sequence": seq,
        "functions": fns,
        "fragment": frag,
        "formulas": formulas,
        "extracted": extracted,
    }))
}

fn interval_cmd(p: &IntervalPayload, horizon: &Horizon, checks: &mut Checks) -> Result<Value> {
    p.u.check_within(horizon, "U")?;
    p.v.check_within(horizon, "V")?;
    let seq = interval_encode(&p.u, &p.v, horizon)?;
    let mut out = json!({ "sequence": seq, "differences": differences(&seq, horizon) });
    if let Some(x) = &p.x {
        let f = separator_to_selector(x, horizon.elements);
        let verdicts = check_selector(&f, &seq, horizon);
        verdict_checks(checks, &verdicts);
        let back = selector_to_separator(&f);
        let inside: BTreeSet<u64> = x.iter().copied().filter(|&i| i < horizon.elements as u64).collect();
        checks.expect("selector maps back to the separator", back == inside, || json!(back));
        out["selector"] = json!(f);
        out["verdicts"] = json!(verdicts);
    }
    Ok(out)
}

fn generic_cmd(p: &GenericPayload, horizon: &Horizon, checks: &mut Checks) -> Result<Value> {
    if let Some(e) = forcing_violation(&p.sigma, &p.functional, &p.sequence, p.max_len, horizon) {
        let selector_core::Error::ForcingViolated { tau, index, value } = &e else { unreachable!() };
        checks.fail("forcing", json!({ "tau": tau, "index": index, "value": value }));
        return Ok(json!({ "bad_strings_met": true }));
    }
    checks.pass("forcing");
    let g = extract_selector(&p.sigma, &p.functional, &p.sequence, horizon, p.max_len)?;
    let values: Vec<u64> = g.iter().map(|e| e.value().copied().unwrap_or(u64::MAX)).collect();
    let verdicts = check_selector(&SelectorCandidate::new(values), &p.sequence, horizon);
    for (i, e) in g.iter().enumerate() {
        if matches!(e, Extracted::Value(_)) {
            checks.expect(format!("index {i}"), !verdicts[i].is_violated(), || json!(verdicts[i]));
        }
    }
    Ok(json!({ "extracted": g }))
}

fn chain_cmd(p: &ChainPayload, horizon: &Horizon, checks: &mut Checks) -> Result<Value> {
    let k = p.k.unwrap_or(p.sources.len());
    if k == 0 || k > p.sources.len() {
        return Err(selector_core::Error::InvalidInput(format!("k = {k} with {} sources", p.sources.len())).into());
    }
    let sources = &p.sources[..k];
    for (i, a) in sources.iter().enumerate() {
        a.check_within(horizon, &format!("A_{}", i + 1))?;
    }
    let chain = build_chain(sources, horizon)?;
    let nesting = chain.nesting_violation();
    checks.expect("nesting", nesting.is_none(), || {
        let (level, x, stage) = nesting.unwrap();
        json!({ "level": level, "value": x, "stage": stage })
    });
    for (level, a) in sources.iter().enumerate().skip(1) {
        let (v, inner) = (&chain.sets[level - 1], chain.sets[level].at_horizon(horizon));
        let range = a.at_horizon(horizon);
        let mut wrong = Vec::new();
        for x in 0..horizon.elements as u64 {
            if reduce_to_source(x, a, v, |y| range.contains(&y), horizon)? != inner.contains(&x) {
                wrong.push(x);
            }
        }
        checks.expect(format!("level {level} reduces to A_{}", level + 1), wrong.is_empty(), || json!(wrong));
        for (w, s) in chain.escapees(level, &p.separator, horizon) {
            let decoder = compute_from_escapee(w, s, a);
            let bad = (0..w).find(|&x| decoder.contains(x) != Some(range.contains(&x)));
            checks.expect(format!("level {level} escapee {w}"), bad.is_none(), || json!({ "misread": bad }));
        }
    }
    let sets: Vec<Value> = chain.sets.iter().map(|s| json!(s)).collect();
    Ok(json!({ "sets": sets }))
}

fn pairs_of(codes: &BTreeSet<u64>) -> Vec<(u64, u64)> {
    codes.iter().map(|&c| unpair(c)).collect()
}

fn codes_of(pairs: &[(u64, u64)]) -> BTreeSet<u64> {
    pairs.iter().map(|&(y, t)| pair(y, t)).collect()
}

fn approx_cmd(p: &ApproxPayload, seed: u64, horizon: &Horizon, checks: &mut Checks) -> Result<Value> {
    let table = match &p.table {
        Some(t) => {
            t.fits(horizon)?;
            if t.is_redefined() { t.clone() } else { approx::prefix_redefine(t) }
        }
        None => approx::generate_table(p.n, seed, horizon)?,
    };
    let mut out = json!({ "table": table });
    let local = approx::check_locality(&table);
    checks.expect("locality", local.is_ok(), || json!(local.unwrap_err()));
    let over = (0..table.elements()).find(|&x| table.flip_count(x) > p.n + 1);
    checks.expect("change bound", over.is_none(), || {
        let x = over.unwrap();
        json!({ "column": x, "changes": table.flip_count(x), "bound": p.n + 1 })
    });
    let f = approx::build_f_tilde(&table);
    let (u, v) = (approx::build_u_tilde(&table).values(), approx::build_v_tilde(&table).values());
    out["F_tilde"] = json!(pairs_of(&f));
    out["U_tilde"] = json!(pairs_of(&u));
    out["V_tilde"] = json!(pairs_of(&v));
    if local.is_err() || over.is_some() {
        return Ok(out);
    }
    checks.expect("Ũ ⊆ F̃ ⊆ Ṽ", u.is_subset(&f) && f.is_subset(&v), || json!("inclusion fails"));
    let lf = approx::build_layered_f_tilde(&table);
    let (lu, lv) = (approx::build_layered_u(&table).values(), approx::build_layered_v(&table).values());
    checks.expect("U ⊆ F̃ ⊆ V", lu.is_subset(&lf) && lf.is_subset(&lv), || json!("inclusion fails"));
    let family = approx::build_layers(&table, p.n)?;
    checks.expect("layers partition F̃", family.union() == lf && family.layer(p.n + 1).is_empty(), || {
        json!("partition fails")
    });
    for i in 1..=p.n {
        let next = family.layer(i + 1);
        let got = approx::layer_ce_characterization(&table, i, |q| next.contains(&q));
        checks.expect(format!("layer {i} from layer {}", i + 1), got == family.layer(i), || {
            json!({ "got": pairs_of(&got), "direct": pairs_of(&family.layer(i)) })
        });
    }

    let (e, op) = match (&p.e, &p.operator) {
        (Some(e), Some(op)) => (e.clone(), op.clone()),
        _ => approx::generate_operator(&table, seed),
    };
    let in_w = op.enumerated(&e, table.stages());
    let limit: BTreeSet<u64> = (0..table.elements()).filter(|&y| table.limit(y)).map(|y| y as u64).collect();
    checks.expect("operator enumerates the limit", in_w == limit, || json!({ "operator": in_w, "limit": limit }));
    let z = p.z.as_deref().map_or_else(|| f.clone(), codes_of);
    let decider = approx::MembershipDecider::new(&table, &z, &e, &op)?;
    let mut wrong = Vec::new();
    for code in table.pair_codes() {
        let d = decider.decide(code)?;
        if d.member != f.contains(&code) || d.depth > table.flip_count(unpair(code).0 as usize) {
            wrong.push(json!({ "pair": unpair(code), "decision": d }));
        }
    }
    let fz = f.is_subset(&z);
    checks.expect("decide membership", !fz || wrong.is_empty(), || json!(wrong.first()));
    let recovery = approx::escapee_recovery(&z, &e, &op, &table)?;
    let misread: Vec<u64> =
        recovery.values.iter().filter(|(&x, &b)| b != table.limit(x as usize)).map(|(&x, _)| x).collect();
    checks.expect("escapee recovery", misread.is_empty(), || json!(misread));

    let x = p.x.as_deref().map_or_else(|| lf.clone(), codes_of);
    let cascade = approx::layered_reduction(&x, &table, p.n)?;
    checks.expect("layered reduction", cascade.membership == table.limit_row(), || json!(cascade.membership));

    out["layered_F_tilde"] = json!(pairs_of(&lf));
    out["U"] = json!(pairs_of(&lu));
    out["V"] = json!(pairs_of(&lv));
    out["layers"] = json!(family.layers.iter().map(pairs_of).collect::<Vec<_>>());
    out["escapees"] = json!(recovery.escapees);
    out["branches"] = json!(cascade.branches);
    Ok(out)
}

fn suite_cmd(seed: u64, horizon: &Horizon, checks: &mut Checks) -> Result<Value> {
    let report = run_suite(&SuiteConfig::new(seed, *horizon))?;
    for c in &report.checks {
        checks.expect(c.name.clone(), c.passed(), || json!(c.failures));
    }
    Ok(json!({ "suite": report }))
}

//! One pass/fail line per acceptance criterion, at the stated thresholds.

use std::time::{Duration, Instant};

use selector_core::approx::check_locality;
use selector_core::suite::{
    approximation_corpus, approximation_inclusions, canonical_coding, deficiency_procedures, forcing_extraction,
    interval_equivalence, locality_validator, procedure_equivalence, run_suite, structure_round_trip,
    violating_table, CheckReport, SuiteConfig, VIOLATING_WITNESS,
};
use selector_core::Horizon;

const SEED: u64 = 0;

struct Gate {
    failed: Vec<u32>,
}

impl Gate {
    fn line(&mut self, id: u32, what: &str, ok: bool, detail: String) {
        println!("criterion {id:>2} {}: {what} ({detail})", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failed.push(id);
        }
    }

    fn reports(&mut self, id: u32, what: &str, reports: &[&CheckReport], took: Duration, limit: Option<Duration>) {
        let ok = reports.iter().all(|r| r.passed()) && limit.is_none_or(|l| took < l);
        let cases: usize = reports.iter().map(|r| r.cases).sum();
        let failures: usize = reports.iter().map(|r| r.failure_count).sum();
        let mut detail = format!("{cases} cases, {failures} failures, {:.2}s", took.as_secs_f64());
        if let Some(l) = limit {
            detail.push_str(&format!(" of {}s", l.as_secs()));
        }
        for r in reports {
            for f in &r.failures {
                detail.push_str(&format!("; {}: {f}", r.name));
            }
        }
        self.line(id, what, ok, detail);
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

#[test]
fn acceptance() {
    let mut gate = Gate { failed: Vec::new() };
    let secs = Duration::from_secs;

    let (r, took) = timed(|| canonical_coding(1 << 16));
    gate.reports(1, "canonical coding round-trips below 2^16", &[&r], took, Some(secs(1)));

    let (r, took) = timed(|| interval_equivalence(12).unwrap());
    gate.reports(2, "interval separators and selectors correspond", &[&r], took, Some(secs(10)));

    let ([round_trip, rigidity], took) = timed(|| structure_round_trip(SEED, 100).unwrap());
    gate.reports(3, "structure formulas define their elements and extract", &[&round_trip], took, Some(secs(60)));
    gate.reports(4, "Φ_4i holds only at 4i", &[&rigidity], took, None);

    let (r, took) = timed(|| forcing_extraction(SEED, 50).unwrap());
    gate.reports(5, "forcing extraction and bad-axiom refusal", &[&r], took, Some(secs(10)));

    let (r, took) = timed(|| deficiency_procedures(SEED, 100).unwrap());
    gate.reports(6, "deficiency reductions, escapees and nesting", &[&r], took, Some(secs(30)));

    let horizon = Horizon::new(64, 32).unwrap();
    let (tables, gen_took) = timed(|| approximation_corpus(SEED, 200, &horizon).unwrap());
    let (r, took) = timed(|| approximation_inclusions(&tables).unwrap());
    gate.reports(7, "approximation inclusions and layer partition", &[&r], took + gen_took, None);

    let (r, took) = timed(|| procedure_equivalence(SEED, &tables).unwrap());
    gate.reports(8, "membership procedures match ground truth", &[&r], took, Some(secs(120)));

    let r = locality_validator(&tables);
    let witness = check_locality(&violating_table());
    let ok = r.passed() && witness == Err(VIOLATING_WITNESS);
    gate.line(9, "locality validator", ok, format!("{} cases, hand-built witness {witness:?}", r.cases));

    let config = SuiteConfig::new(SEED, horizon);
    let first = serde_json::to_string(&run_suite(&config).unwrap()).unwrap();
    let second = serde_json::to_string(&run_suite(&config).unwrap()).unwrap();
    gate.line(10, "suite reports are byte-identical", first == second, format!("{} bytes", first.len()));

    assert!(gate.failed.is_empty(), "failed criteria: {:?}", gate.failed);
}

//! Positive existential formulas over unary function symbols `e_k`.
//!
//! Text form (prefix, parenthesized):
//!
//! ```text
//! term    := xN | cN | (e K term)
//! formula := (and formula*) | (= term term) | (!= term term)
//!          | (exists xN formula) | (exists-ne xN term formula)
//! ```
//!
//! `(exists-ne z t φ)` reads `(∃z ≠ t) φ`. `(and)` is the empty conjunction.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(pub u32);

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(Var),
    /// The i-th distinguished constant of the structure.
    Const(usize),
    Apply(u64, Box<Term>),
}

impl Term {
    pub fn var(n: u32) -> Self {
        Term::Var(Var(n))
    }

    pub fn apply(k: u64, t: Term) -> Self {
        Term::Apply(k, Box::new(t))
    }

    fn vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Term::Var(v) => {
                out.insert(*v);
            }
            Term::Const(_) => {}
            Term::Apply(_, t) => t.vars(out),
        }
    }

    fn substitute(&self, var: Var, by: &Term) -> Term {
        match self {
            Term::Var(v) if *v == var => by.clone(),
            Term::Var(_) | Term::Const(_) => self.clone(),
            Term::Apply(k, t) => Term::apply(*k, t.substitute(var, by)),
        }
    }

    fn applications(&self) -> usize {
        match self {
            Term::Apply(_, t) => 1 + t.applications(),
            _ => 0,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Const(i) => write!(f, "c{i}"),
            Term::Apply(k, t) => write!(f, "(e {k} {t})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    Eq(Term, Term),
    Neq(Term, Term),
    And(Vec<Formula>),
    Exists { var: Var, guard: Option<Term>, body: Box<Formula> },
}

impl Formula {
    /// The empty conjunction.
    pub fn truth() -> Self {
        Formula::And(Vec::new())
    }

    pub fn is_empty_conjunction(&self) -> bool {
        matches!(self, Formula::And(v) if v.is_empty())
    }

    pub fn exists(var: Var, guard: Option<Term>, body: Formula) -> Self {
        Formula::Exists { var, guard, body: Box::new(body) }
    }

    /// Flattens nested conjunctions and unwraps singletons.
    pub fn conj(parts: Vec<Formula>) -> Self {
        let mut flat = Vec::new();
        for p in parts {
            match p {
                Formula::And(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        if flat.len() == 1 {
            flat.pop().unwrap()
        } else {
            Formula::And(flat)
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut out);
        out
    }

    fn collect_free(&self, out: &mut BTreeSet<Var>) {
        match self {
            Formula::Eq(a, b) | Formula::Neq(a, b) => {
                a.vars(out);
                b.vars(out);
            }
            Formula::And(parts) => parts.iter().for_each(|p| p.collect_free(out)),
            Formula::Exists { var, guard, body } => {
                let mut inner = BTreeSet::new();
                body.collect_free(&mut inner);
                inner.remove(var);
                out.extend(inner);
                if let Some(g) = guard {
                    let mut gv = BTreeSet::new();
                    g.vars(&mut gv);
                    gv.remove(var);
                    out.extend(gv);
                }
            }
        }
    }

    fn max_var(&self) -> u32 {
        fn term_max(t: &Term) -> u32 {
            match t {
                Term::Var(v) => v.0,
                Term::Const(_) => 0,
                Term::Apply(_, t) => term_max(t),
            }
        }
        match self {
            Formula::Eq(a, b) | Formula::Neq(a, b) => term_max(a).max(term_max(b)),
            Formula::And(parts) => parts.iter().map(Formula::max_var).max().unwrap_or(0),
            Formula::Exists { var, guard, body } => {
                var.0.max(body.max_var()).max(guard.as_ref().map_or(0, term_max))
            }
        }
    }

    /// Capture-avoiding substitution of `by` for the free occurrences of `var`.
    pub fn substitute(&self, var: Var, by: &Term) -> Formula {
        match self {
            Formula::Eq(a, b) => Formula::Eq(a.substitute(var, by), b.substitute(var, by)),
            Formula::Neq(a, b) => Formula::Neq(a.substitute(var, by), b.substitute(var, by)),
            Formula::And(parts) => Formula::And(parts.iter().map(|p| p.substitute(var, by)).collect()),
            Formula::Exists { var: bound, guard, body } => {
                // The guard lies in the quantifier's scope: `(∃z ≠ t)` compares z with t.
                if *bound == var {
                    return self.clone();
                }
                let mut by_vars = BTreeSet::new();
                by.vars(&mut by_vars);
                if by_vars.contains(bound) {
                    let fresh = Var(self.max_var().max(by_vars.iter().map(|v| v.0).max().unwrap_or(0)) + 1);
                    let renamed_body = body.substitute(*bound, &Term::Var(fresh));
                    let renamed_guard = guard.as_ref().map(|g| g.substitute(*bound, &Term::Var(fresh)));
                    return Formula::exists(
                        fresh,
                        renamed_guard.map(|g| g.substitute(var, by)),
                        renamed_body.substitute(var, by),
                    );
                }
                Formula::exists(
                    *bound,
                    guard.as_ref().map(|g| g.substitute(var, by)),
                    body.substitute(var, by),
                )
            }
        }
    }

    /// Connective, quantifier and atom nodes plus function applications.
    /// Variables and constants are free; the empty conjunction has size 0.
    pub fn size(&self) -> usize {
        match self {
            Formula::Eq(a, b) | Formula::Neq(a, b) => 1 + a.applications() + b.applications(),
            Formula::And(parts) if parts.is_empty() => 0,
            Formula::And(parts) => parts.len() - 1 + parts.iter().map(Formula::size).sum::<usize>(),
            Formula::Exists { guard, body, .. } => {
                1 + guard.as_ref().map_or(0, Term::applications) + body.size()
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Eq(a, b) => write!(f, "(= {a} {b})"),
            Formula::Neq(a, b) => write!(f, "(!= {a} {b})"),
            Formula::And(parts) => {
                write!(f, "(and")?;
                for p in parts {
                    write!(f, " {p}")?;
                }
                write!(f, ")")
            }
            Formula::Exists { var, guard: None, body } => write!(f, "(exists {var} {body})"),
            Formula::Exists { var, guard: Some(g), body } => write!(f, "(exists-ne {var} {g} {body})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Open,
    Close,
    Atom(String),
}

fn tokenize(text: &str) -> Vec<(usize, Token)> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(pos, c)) = chars.peek() {
        match c {
            '(' => {
                out.push((pos, Token::Open));
                chars.next();
            }
            ')' => {
                out.push((pos, Token::Close));
                chars.next();
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            _ => {
                let mut atom = String::new();
                while let Some(&(_, c)) = chars.peek() {
                    if c == '(' || c == ')' || c.is_whitespace() {
                        break;
                    }
                    atom.push(c);
                    chars.next();
                }
                out.push((pos, Token::Atom(atom)));
            }
        }
    }
    out
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    at: usize,
    len: usize,
}

impl Parser {
    fn err(&self, msg: &str) -> Error {
        let pos = self.tokens.get(self.at).map_or(self.len, |t| t.0);
        Error::invalid(format!("formula parse error at byte {pos}: {msg}"))
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.at).map(|t| t.1.clone());
        self.at += 1;
        t
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.at).map(|t| &t.1)
    }

    fn expect_close(&mut self) -> Result<()> {
        match self.next() {
            Some(Token::Close) => Ok(()),
            _ => {
                self.at -= 1;
                Err(self.err("expected ')'"))
            }
        }
    }

    fn var(&mut self) -> Result<Var> {
        match self.next() {
            Some(Token::Atom(a)) if a.starts_with('x') => {
                a[1..].parse().map(Var).map_err(|_| self.err("bad variable"))
            }
            _ => {
                self.at -= 1;
                Err(self.err("expected a variable"))
            }
        }
    }

    fn term(&mut self) -> Result<Term> {
        match self.next() {
            Some(Token::Atom(a)) if a.starts_with('x') => {
                a[1..].parse().map(Term::var).map_err(|_| self.err("bad variable"))
            }
            Some(Token::Atom(a)) if a.starts_with('c') => {
                a[1..].parse().map(Term::Const).map_err(|_| self.err("bad constant"))
            }
            Some(Token::Open) => {
                match self.next() {
                    Some(Token::Atom(a)) if a == "e" => {}
                    _ => return Err(self.err("expected 'e'")),
                }
                let k = match self.next() {
                    Some(Token::Atom(a)) => a.parse::<u64>().map_err(|_| self.err("bad function index"))?,
                    _ => return Err(self.err("expected a function index")),
                };
                let t = self.term()?;
                self.expect_close()?;
                Ok(Term::apply(k, t))
            }
            _ => {
                self.at = self.at.saturating_sub(1);
                Err(self.err("expected a term"))
            }
        }
    }

    fn formula(&mut self) -> Result<Formula> {
        match self.next() {
            Some(Token::Open) => {}
            _ => {
                self.at = self.at.saturating_sub(1);
                return Err(self.err("expected '('"));
            }
        }
        let head = match self.next() {
            Some(Token::Atom(a)) => a,
            _ => return Err(self.err("expected a connective")),
        };
        let f = match head.as_str() {
            "and" => {
                let mut parts = Vec::new();
                while self.peek() == Some(&Token::Open) {
                    parts.push(self.formula()?);
                }
                Formula::And(parts)
            }
            "=" | "!=" => {
                let a = self.term()?;
                let b = self.term()?;
                if head == "=" {
                    Formula::Eq(a, b)
                } else {
                    Formula::Neq(a, b)
                }
            }
            "exists" => {
                let v = self.var()?;
                Formula::exists(v, None, self.formula()?)
            }
            "exists-ne" => {
                let v = self.var()?;
                let g = self.term()?;
                Formula::exists(v, Some(g), self.formula()?)
            }
            other => return Err(self.err(&format!("unknown connective '{other}'"))),
        };
        self.expect_close()?;
        Ok(f)
    }
}

impl FromStr for Formula {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser { tokens: tokenize(s), at: 0, len: s.len() };
        let f = p.formula()?;
        if p.at != p.tokens.len() {
            return Err(p.err("trailing input"));
        }
        Ok(f)
    }
}

impl Serialize for Formula {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Formula {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Three-valued satisfaction: `Pending` when an unresolved function value
/// was needed and no witness settled the answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truth {
    True,
    False,
    Pending,
}

impl Truth {
    pub fn is_true(self) -> bool {
        self == Truth::True
    }

    fn and(self, other: Truth) -> Truth {
        match (self, other) {
            (Truth::False, _) | (_, Truth::False) => Truth::False,
            (Truth::Pending, _) | (_, Truth::Pending) => Truth::Pending,
            _ => Truth::True,
        }
    }

    fn or(self, other: Truth) -> Truth {
        match (self, other) {
            (Truth::True, _) | (_, Truth::True) => Truth::True,
            (Truth::Pending, _) | (_, Truth::Pending) => Truth::Pending,
            _ => Truth::False,
        }
    }
}

impl From<bool> for Truth {
    fn from(b: bool) -> Self {
        if b {
            Truth::True
        } else {
            Truth::False
        }
    }
}

/// A finite structure in a language of unary functions and constants.
pub trait Interpretation {
    fn domain(&self) -> &BTreeSet<u64>;
    /// `None` when the value of `e_k` at `n` is not resolved.
    fn apply(&self, k: u64, n: u64) -> Option<u64>;
    fn constant(&self, i: usize) -> Option<u64>;

    /// All `z` in the domain with `e_k(z) = target`, when the structure can
    /// answer without a scan. Must agree with [`Interpretation::apply`].
    fn preimages(&self, _k: u64, _target: u64) -> Option<Vec<u64>> {
        None
    }
}

/// Matches `e_k(z) = t` (either orientation) with `z` not occurring in `t`.
fn preimage_pattern(var: Var, body: &Formula) -> Option<(u64, &Term)> {
    let Formula::Eq(l, r) = body else { return None };
    let free_of = |t: &Term| {
        let mut vs = BTreeSet::new();
        t.vars(&mut vs);
        !vs.contains(&var)
    };
    match (l, r) {
        (Term::Apply(k, z), t) | (t, Term::Apply(k, z)) if **z == Term::Var(var) && free_of(t) => Some((*k, t)),
        _ => None,
    }
}

fn eval_term<I: Interpretation + ?Sized>(t: &Term, m: &I, env: &BTreeMap<Var, u64>) -> Result<Option<u64>> {
    match t {
        Term::Var(v) => env
            .get(v)
            .copied()
            .map(Some)
            .ok_or_else(|| Error::invalid(format!("variable {v} is not assigned"))),
        Term::Const(i) => m
            .constant(*i)
            .map(Some)
            .ok_or_else(|| Error::invalid(format!("constant c{i} is not interpreted"))),
        Term::Apply(k, inner) => Ok(match eval_term(inner, m, env)? {
            Some(n) => m.apply(*k, n),
            None => None,
        }),
    }
}

fn eval_in<I: Interpretation + ?Sized>(phi: &Formula, m: &I, env: &mut BTreeMap<Var, u64>) -> Result<Truth> {
    Ok(match phi {
        Formula::Eq(a, b) | Formula::Neq(a, b) => {
            match (eval_term(a, m, env)?, eval_term(b, m, env)?) {
                (Some(x), Some(y)) => Truth::from((x == y) == matches!(phi, Formula::Eq(..))),
                _ => Truth::Pending,
            }
        }
        Formula::And(parts) => {
            let mut acc = Truth::True;
            for p in parts {
                acc = acc.and(eval_in(p, m, env)?);
                if acc == Truth::False {
                    break;
                }
            }
            acc
        }
        Formula::Exists { var, guard, body } => {
            let saved = env.get(var).copied();
            let mut acc = Truth::False;
            let candidates: Vec<u64> = match preimage_pattern(*var, body) {
                Some((k, t)) => match eval_term(t, m, env)?.and_then(|target| m.preimages(k, target)) {
                    Some(zs) => zs,
                    None => m.domain().iter().copied().collect(),
                },
                None => m.domain().iter().copied().collect(),
            };
            for z in candidates {
                env.insert(*var, z);
                let guard_ok = match guard {
                    None => Truth::True,
                    Some(g) => match eval_term(g, m, env)? {
                        Some(v) => Truth::from(v != z),
                        None => Truth::Pending,
                    },
                };
                if guard_ok == Truth::False {
                    continue;
                }
                acc = acc.or(guard_ok.and(eval_in(body, m, env)?));
                if acc == Truth::True {
                    break;
                }
            }
            match saved {
                Some(v) => env.insert(*var, v),
                None => env.remove(var),
            };
            acc
        }
    })
}

/// Satisfaction with quantifiers ranging over the interpretation's domain.
pub fn eval_formula<I: Interpretation + ?Sized>(
    phi: &Formula,
    m: &I,
    assignment: &BTreeMap<Var, u64>,
) -> Result<Truth> {
    if let Some(v) = phi.free_vars().into_iter().find(|v| !assignment.contains_key(v)) {
        return Err(Error::invalid(format!("free variable {v} is not covered by the assignment")));
    }
    let mut env = assignment.clone();
    eval_in(phi, m, &mut env)
}

/// Evaluates a formula in the single free variable `x0` at `x`.
pub fn eval_at<I: Interpretation + ?Sized>(phi: &Formula, m: &I, x: u64) -> Result<Truth> {
    eval_formula(phi, m, &BTreeMap::from([(Var(0), x)]))
}

/// All formulas in the free variable `x0` up to `max_size`, in the fixed
/// size-lexicographic coding order: by size, then atoms (`=` before `!=`),
/// binary conjunctions, and quantifiers, each ordered by their parts.
/// The position of a formula in the returned vector is its code.
pub fn enumerate_formulas(max_size: usize, symbols: &[u64], constants: usize) -> Vec<Formula> {
    let gen = Generator { symbols, constants };
    let mut out = vec![Formula::truth()];
    for s in 1..=max_size {
        out.extend(gen.formulas(1, s));
    }
    out
}

struct Generator<'a> {
    symbols: &'a [u64],
    constants: usize,
}

impl Generator<'_> {
    fn terms(&self, vars: u32, apps: usize) -> Vec<Term> {
        if apps == 0 {
            return (0..vars).map(Term::var).chain((0..self.constants).map(Term::Const)).collect();
        }
        let inner = self.terms(vars, apps - 1);
        self.symbols
            .iter()
            .flat_map(|&k| inner.iter().map(move |t| Term::apply(k, t.clone())))
            .collect()
    }

    fn formulas(&self, vars: u32, size: usize) -> Vec<Formula> {
        let mut out = Vec::new();
        if size == 0 {
            return out;
        }
        for eq in [true, false] {
            for left in 0..size {
                let right = size - 1 - left;
                let lts = self.terms(vars, left);
                let rts = self.terms(vars, right);
                for a in &lts {
                    for b in &rts {
                        out.push(if eq { Formula::Eq(a.clone(), b.clone()) } else { Formula::Neq(a.clone(), b.clone()) });
                    }
                }
            }
        }
        for left in 1..size.saturating_sub(1) {
            let right = size - 1 - left;
            let lfs = self.formulas(vars, left);
            let rfs = self.formulas(vars, right);
            for a in &lfs {
                for b in &rfs {
                    out.push(Formula::And(vec![a.clone(), b.clone()]));
                }
            }
        }
        let bound = Var(vars);
        for body in self.formulas(vars + 1, size - 1) {
            out.push(Formula::exists(bound, None, body.clone()));
            for g in 0..vars {
                out.push(Formula::exists(bound, Some(Term::var(g)), body.clone()));
            }
        }
        out
    }
}

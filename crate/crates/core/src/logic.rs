//! Continuous-logic formulas over the measure-algebra signature.
//!
//! Terms are boolean-algebra expressions in `∨`, `∧`, `⊕` (symmetric
//! difference) with constants `0`, `1`; atomic formulas are `m(t)` and
//! `d(t,u)`; connectives are addition, subtraction, truncated subtraction
//! (`-.`), absolute value, max, min, and scaling by a rational constant;
//! quantifiers `inf x .` and `sup x .` range, at evaluation depth `d`, over
//! the `2^(2^d)` unions of dyadic atoms of length `2^-d`.
//!
//! Multiplication of formulas is deliberately not in the grammar: every
//! construct admits a finite Lipschitz modulus, computed by [`modulus`],
//! which both certifies uniform continuity and drives the pruning of the
//! quantifier search.
//!
//! Concrete syntax (authoritative grammar):
//!
//! ```text
//! formula := 'inf' VAR '.' formula | 'sup' VAR '.' formula | expr
//! expr    := term2 (('+'|'-'|'-.') term2)*
//! term2   := RAT '*' term2 | prim
//! prim    := '|' formula '|' | 'max(' formula ',' formula ')'
//!          | 'min(' formula ',' formula ')' | 'm(' term ')'
//!          | 'd(' term ',' term ')' | RAT | '(' formula ')'
//! term    := factor (('\/'|'/\'|'(+)') factor)* ; factor := VAR | '0' | '1' | '(' term ')'
//! RAT     := integer | integer '/' positive-integer
//! ```

use crate::malg::MSet;
use crate::rat::{fmt_q, parse_q, q0, q1, Q};
use crate::types::TypeVector;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LogicError {
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("no binding for free variable {0:?}")]
    MissingBinding(String),
    #[error("depth {depth} exceeds the configured cap {cap}")]
    DepthOverCap { depth: usize, cap: usize },
    #[error("formula contains a quantifier; quantifier-free evaluation only")]
    QuantifierPresent,
    #[error("variable {0:?} is not of the form x1..xN")]
    BadVariableName(String),
    #[error("variable {var:?} exceeds the type arity {arity}")]
    ArityOutOfRange { var: String, arity: usize },
    #[error(transparent)]
    Malg(#[from] crate::malg::MalgError),
}

fn perr(pos: usize, msg: impl Into<String>) -> LogicError {
    LogicError::Parse {
        pos,
        msg: msg.into(),
    }
}

/// Boolean-algebra term.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Term {
    Var(String),
    Zero,
    One,
    Join(Box<Term>, Box<Term>),
    Meet(Box<Term>, Box<Term>),
    SymDiff(Box<Term>, Box<Term>),
}

impl Term {
    fn vars_into(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(x) => {
                out.insert(x.clone());
            }
            Term::Zero | Term::One => {}
            Term::Join(a, b) | Term::Meet(a, b) | Term::SymDiff(a, b) => {
                a.vars_into(out);
                b.vars_into(out);
            }
        }
    }

    fn modulus_into(&self, out: &mut BTreeMap<String, Q>) {
        match self {
            Term::Var(x) => {
                *out.entry(x.clone()).or_insert_with(q0) += q1();
            }
            Term::Zero | Term::One => {}
            Term::Join(a, b) | Term::Meet(a, b) | Term::SymDiff(a, b) => {
                a.modulus_into(out);
                b.modulus_into(out);
            }
        }
    }
}

/// Real-valued formula.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Formula {
    /// `m(t)`
    Measure(Term),
    /// `d(t, u)`
    Dist(Term, Term),
    Const(Q),
    Add(Box<Formula>, Box<Formula>),
    Sub(Box<Formula>, Box<Formula>),
    /// truncated subtraction `max(a - b, 0)`
    Monus(Box<Formula>, Box<Formula>),
    Abs(Box<Formula>),
    Max(Box<Formula>, Box<Formula>),
    Min(Box<Formula>, Box<Formula>),
    Scale(Q, Box<Formula>),
    Inf(String, Box<Formula>),
    Sup(String, Box<Formula>),
}

impl Formula {
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.free_vars_into(&mut out);
        out
    }

    fn free_vars_into(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Measure(t) => t.vars_into(out),
            Formula::Dist(t, u) => {
                t.vars_into(out);
                u.vars_into(out);
            }
            Formula::Const(_) => {}
            Formula::Add(a, b)
            | Formula::Sub(a, b)
            | Formula::Monus(a, b)
            | Formula::Max(a, b)
            | Formula::Min(a, b) => {
                a.free_vars_into(out);
                b.free_vars_into(out);
            }
            Formula::Abs(a) | Formula::Scale(_, a) => a.free_vars_into(out),
            Formula::Inf(x, a) | Formula::Sup(x, a) => {
                let mut inner = BTreeSet::new();
                a.free_vars_into(&mut inner);
                inner.remove(x);
                out.extend(inner);
            }
        }
    }

    pub fn is_quantifier_free(&self) -> bool {
        match self {
            Formula::Measure(_) | Formula::Dist(..) | Formula::Const(_) => true,
            Formula::Add(a, b)
            | Formula::Sub(a, b)
            | Formula::Monus(a, b)
            | Formula::Max(a, b)
            | Formula::Min(a, b) => a.is_quantifier_free() && b.is_quantifier_free(),
            Formula::Abs(a) | Formula::Scale(_, a) => a.is_quantifier_free(),
            Formula::Inf(..) | Formula::Sup(..) => false,
        }
    }

    pub fn parse(text: &str) -> Result<Formula, LogicError> {
        let toks = lex(text)?;
        let mut p = Parser { toks, at: 0 };
        let f = p.formula()?;
        if p.at != p.toks.len() {
            return Err(perr(p.pos(), "trailing input after formula"));
        }
        Ok(f)
    }
}

/// Per-variable Lipschitz constants of the interpretation.
///
/// The signature symbols `m`, `d`, `∨`, `∧`, `⊕` are 1-Lipschitz in each
/// argument; addition and subtraction add the constants, `max`/`min`/`-.`
/// and `| |` keep the larger one, scaling multiplies by `|c|`, and a
/// quantifier erases its own variable while preserving the bound in the
/// remaining ones. Every formula in the grammar gets a finite bound.
pub fn modulus(f: &Formula) -> BTreeMap<String, Q> {
    fn merge_max(a: BTreeMap<String, Q>, b: BTreeMap<String, Q>) -> BTreeMap<String, Q> {
        let mut out = a;
        for (k, v) in b {
            let e = out.entry(k).or_insert_with(q0);
            if v > *e {
                *e = v;
            }
        }
        out
    }
    match f {
        Formula::Measure(t) => {
            let mut out = BTreeMap::new();
            t.modulus_into(&mut out);
            out
        }
        Formula::Dist(t, u) => {
            let mut out = BTreeMap::new();
            t.modulus_into(&mut out);
            u.modulus_into(&mut out);
            out
        }
        Formula::Const(_) => BTreeMap::new(),
        Formula::Add(a, b) | Formula::Sub(a, b) => {
            let mut out = modulus(a);
            for (k, v) in modulus(b) {
                *out.entry(k).or_insert_with(q0) += v;
            }
            out
        }
        Formula::Monus(a, b) | Formula::Max(a, b) | Formula::Min(a, b) => {
            merge_max(modulus(a), modulus(b))
        }
        Formula::Abs(a) => modulus(a),
        Formula::Scale(c, a) => {
            let s = c.abs();
            modulus(a)
                .into_iter()
                .map(|(k, v)| (k, v * &s))
                .collect()
        }
        Formula::Inf(x, a) | Formula::Sup(x, a) => {
            let mut out = modulus(a);
            out.remove(x);
            out
        }
    }
}

// ---------------------------------------------------------------------------
// lexer / parser
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Inf,
    Sup,
    Dot,
    Comma,
    LParen,
    RParen,
    Pipe,
    Plus,
    Minus,
    MinusDot,
    Star,
    Join,
    Meet,
    OPlus,
    MaxKw,
    MinKw,
    MKw,
    DKw,
    Rat(Q),
    Var(String),
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, LogicError> {
    let b = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0usize;
    while i < b.len() {
        let c = b[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            b'(' => {
                if b.get(i + 1) == Some(&b'+') && b.get(i + 2) == Some(&b')') {
                    i += 3;
                    Tok::OPlus
                } else {
                    i += 1;
                    Tok::LParen
                }
            }
            b')' => {
                i += 1;
                Tok::RParen
            }
            b'|' => {
                i += 1;
                Tok::Pipe
            }
            b'+' => {
                i += 1;
                Tok::Plus
            }
            b'-' => {
                if b.get(i + 1) == Some(&b'.') {
                    i += 2;
                    Tok::MinusDot
                } else {
                    i += 1;
                    Tok::Minus
                }
            }
            b'*' => {
                i += 1;
                Tok::Star
            }
            b'.' => {
                i += 1;
                Tok::Dot
            }
            b',' => {
                i += 1;
                Tok::Comma
            }
            b'/' => {
                if b.get(i + 1) == Some(&b'\\') {
                    i += 2;
                    Tok::Meet
                } else {
                    return Err(perr(i, "unexpected '/'"));
                }
            }
            b'\\' => {
                if b.get(i + 1) == Some(&b'/') {
                    i += 2;
                    Tok::Join
                } else {
                    return Err(perr(i, "unexpected '\\'"));
                }
            }
            b'0'..=b'9' => {
                while i < b.len() && b[i].is_ascii_digit() {
                    i += 1;
                }
                // consume '/' only as a fraction bar, not the start of '/\'
                if i < b.len()
                    && b[i] == b'/'
                    && b.get(i + 1).is_some_and(u8::is_ascii_digit)
                {
                    i += 1;
                    while i < b.len() && b[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                let lit = &text[start..i];
                Tok::Rat(parse_q(lit).map_err(|m| perr(start, m))?)
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                    i += 1;
                }
                match &text[start..i] {
                    "inf" => Tok::Inf,
                    "sup" => Tok::Sup,
                    "max" => Tok::MaxKw,
                    "min" => Tok::MinKw,
                    "m" => Tok::MKw,
                    "d" => Tok::DKw,
                    name => Tok::Var(name.to_string()),
                }
            }
            other => return Err(perr(i, format!("unexpected character {:?}", other as char))),
        };
        out.push((start, tok));
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
}

impl Parser {
    fn pos(&self) -> usize {
        self.toks
            .get(self.at)
            .or_else(|| self.toks.last())
            .map_or(0, |(p, _)| *p)
    }

    fn peek(&self, ahead: usize) -> Option<&Tok> {
        self.toks.get(self.at + ahead).map(|(_, t)| t)
    }

    fn next_tok(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.at).map(|(_, t)| t.clone());
        if t.is_some() {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, want: &Tok, what: &str) -> Result<(), LogicError> {
        match self.next_tok() {
            Some(ref t) if t == want => Ok(()),
            _ => Err(perr(self.pos(), format!("expected {what}"))),
        }
    }

    fn formula(&mut self) -> Result<Formula, LogicError> {
        match self.peek(0) {
            Some(Tok::Inf) | Some(Tok::Sup) => {
                let is_inf = matches!(self.peek(0), Some(Tok::Inf));
                self.at += 1;
                let var = match self.next_tok() {
                    Some(Tok::Var(x)) => x,
                    _ => return Err(perr(self.pos(), "expected a variable after quantifier")),
                };
                self.expect(&Tok::Dot, "'.' after quantified variable")?;
                let body = Box::new(self.formula()?);
                Ok(if is_inf {
                    Formula::Inf(var, body)
                } else {
                    Formula::Sup(var, body)
                })
            }
            _ => self.expr(),
        }
    }

    fn expr(&mut self) -> Result<Formula, LogicError> {
        let mut acc = self.term2()?;
        loop {
            match self.peek(0) {
                Some(Tok::Plus) => {
                    self.at += 1;
                    acc = Formula::Add(Box::new(acc), Box::new(self.term2()?));
                }
                Some(Tok::Minus) => {
                    self.at += 1;
                    acc = Formula::Sub(Box::new(acc), Box::new(self.term2()?));
                }
                Some(Tok::MinusDot) => {
                    self.at += 1;
                    acc = Formula::Monus(Box::new(acc), Box::new(self.term2()?));
                }
                _ => return Ok(acc),
            }
        }
    }

    /// Parses an optionally negated rational literal if one starts here.
    fn rat_literal(&mut self) -> Option<Q> {
        match (self.peek(0), self.peek(1)) {
            (Some(Tok::Rat(_)), _) => match self.next_tok() {
                Some(Tok::Rat(v)) => Some(v),
                _ => unreachable!(),
            },
            (Some(Tok::Minus), Some(Tok::Rat(_))) => {
                self.at += 1;
                match self.next_tok() {
                    Some(Tok::Rat(v)) => Some(-v),
                    _ => unreachable!(),
                }
            }
            _ => None,
        }
    }

    fn term2(&mut self) -> Result<Formula, LogicError> {
        // RAT '*' term2 needs lookahead past the (possibly signed) literal
        let scale_ahead = match self.peek(0) {
            Some(Tok::Rat(_)) => self.peek(1) == Some(&Tok::Star),
            Some(Tok::Minus) => {
                matches!(self.peek(1), Some(Tok::Rat(_))) && self.peek(2) == Some(&Tok::Star)
            }
            _ => false,
        };
        if scale_ahead {
            let c = self.rat_literal().expect("checked by lookahead");
            self.expect(&Tok::Star, "'*' after scale constant")?;
            let body = self.term2()?;
            return Ok(Formula::Scale(c, Box::new(body)));
        }
        self.prim()
    }

    fn prim(&mut self) -> Result<Formula, LogicError> {
        if let Some(c) = self.rat_literal() {
            return Ok(Formula::Const(c));
        }
        match self.next_tok() {
            Some(Tok::Pipe) => {
                let inner = self.formula()?;
                self.expect(&Tok::Pipe, "closing '|'")?;
                Ok(Formula::Abs(Box::new(inner)))
            }
            Some(Tok::MaxKw) => {
                self.expect(&Tok::LParen, "'(' after max")?;
                let a = self.formula()?;
                self.expect(&Tok::Comma, "',' in max")?;
                let b = self.formula()?;
                self.expect(&Tok::RParen, "')' closing max")?;
                Ok(Formula::Max(Box::new(a), Box::new(b)))
            }
            Some(Tok::MinKw) => {
                self.expect(&Tok::LParen, "'(' after min")?;
                let a = self.formula()?;
                self.expect(&Tok::Comma, "',' in min")?;
                let b = self.formula()?;
                self.expect(&Tok::RParen, "')' closing min")?;
                Ok(Formula::Min(Box::new(a), Box::new(b)))
            }
            Some(Tok::MKw) => {
                self.expect(&Tok::LParen, "'(' after m")?;
                let t = self.term()?;
                self.expect(&Tok::RParen, "')' closing m")?;
                Ok(Formula::Measure(t))
            }
            Some(Tok::DKw) => {
                self.expect(&Tok::LParen, "'(' after d")?;
                let t = self.term()?;
                self.expect(&Tok::Comma, "',' in d")?;
                let u = self.term()?;
                self.expect(&Tok::RParen, "')' closing d")?;
                Ok(Formula::Dist(t, u))
            }
            Some(Tok::LParen) => {
                let f = self.formula()?;
                self.expect(&Tok::RParen, "closing ')'")?;
                Ok(f)
            }
            _ => Err(perr(self.pos(), "expected a formula")),
        }
    }

    fn term(&mut self) -> Result<Term, LogicError> {
        let mut acc = self.factor()?;
        loop {
            match self.peek(0) {
                Some(Tok::Join) => {
                    self.at += 1;
                    acc = Term::Join(Box::new(acc), Box::new(self.factor()?));
                }
                Some(Tok::Meet) => {
                    self.at += 1;
                    acc = Term::Meet(Box::new(acc), Box::new(self.factor()?));
                }
                Some(Tok::OPlus) => {
                    self.at += 1;
                    acc = Term::SymDiff(Box::new(acc), Box::new(self.factor()?));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<Term, LogicError> {
        match self.next_tok() {
            Some(Tok::Var(x)) => Ok(Term::Var(x)),
            Some(Tok::Rat(v)) if v.is_zero() => Ok(Term::Zero),
            Some(Tok::Rat(v)) if v.is_one() => Ok(Term::One),
            Some(Tok::LParen) => {
                let t = self.term()?;
                self.expect(&Tok::RParen, "closing ')' in term")?;
                Ok(t)
            }
            _ => Err(perr(self.pos(), "expected a term factor (variable, 0, 1, or '(')")),
        }
    }
}

// ---------------------------------------------------------------------------
// pretty printing (reparses to an equal AST)
// ---------------------------------------------------------------------------

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn factor(t: &Term, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match t {
                Term::Var(x) => write!(f, "{x}"),
                Term::Zero => write!(f, "0"),
                Term::One => write!(f, "1"),
                composite => write!(f, "({composite})"),
            }
        }
        match self {
            Term::Var(x) => write!(f, "{x}"),
            Term::Zero => write!(f, "0"),
            Term::One => write!(f, "1"),
            Term::Join(a, b) => {
                factor(a, f)?;
                write!(f, " \\/ ")?;
                factor(b, f)
            }
            Term::Meet(a, b) => {
                factor(a, f)?;
                write!(f, " /\\ ")?;
                factor(b, f)
            }
            Term::SymDiff(a, b) => {
                factor(a, f)?;
                write!(f, " (+) ")?;
                factor(b, f)
            }
        }
    }
}

impl Formula {
    fn is_prim_shaped(&self) -> bool {
        matches!(
            self,
            Formula::Measure(_)
                | Formula::Dist(..)
                | Formula::Const(_)
                | Formula::Abs(_)
                | Formula::Max(..)
                | Formula::Min(..)
        )
    }

    fn is_term2_shaped(&self) -> bool {
        match self {
            Formula::Scale(_, body) => body.is_term2_shaped(),
            other => other.is_prim_shaped(),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn term2(x: &Formula, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            if x.is_term2_shaped() {
                write!(f, "{x}")
            } else {
                write!(f, "({x})")
            }
        }
        match self {
            Formula::Measure(t) => write!(f, "m({t})"),
            Formula::Dist(t, u) => write!(f, "d({t}, {u})"),
            Formula::Const(c) => write!(f, "{}", fmt_q(c)),
            Formula::Add(a, b) => {
                term2(a, f)?;
                write!(f, " + ")?;
                term2(b, f)
            }
            Formula::Sub(a, b) => {
                term2(a, f)?;
                write!(f, " - ")?;
                term2(b, f)
            }
            Formula::Monus(a, b) => {
                term2(a, f)?;
                write!(f, " -. ")?;
                term2(b, f)
            }
            Formula::Abs(a) => write!(f, "|{a}|"),
            Formula::Max(a, b) => write!(f, "max({a}, {b})"),
            Formula::Min(a, b) => write!(f, "min({a}, {b})"),
            Formula::Scale(c, a) => {
                write!(f, "{} * ", fmt_q(c))?;
                term2(a, f)
            }
            Formula::Inf(x, a) => write!(f, "inf {x} . {a}"),
            Formula::Sup(x, a) => write!(f, "sup {x} . {a}"),
        }
    }
}

// ---------------------------------------------------------------------------
// evaluation over depth-d dyadic subalgebras
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct EvalOptions {
    pub depth_cap: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { depth_cap: 4 }
    }
}

/// Practical ceiling regardless of the configured cap.
pub const HARD_DEPTH_CAP: usize = 10;

/// Segment bitmask: the unit interval is cut at every dyadic atom boundary
/// and every environment endpoint; sets become unions of whole segments.
#[derive(Clone, PartialEq, Eq, Debug)]
struct Bits {
    words: Vec<u64>,
}

impl Bits {
    fn empty(nwords: usize) -> Bits {
        Bits {
            words: vec![0; nwords],
        }
    }

    fn set(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    fn or(&self, o: &Bits) -> Bits {
        Bits {
            words: self
                .words
                .iter()
                .zip(&o.words)
                .map(|(a, b)| a | b)
                .collect(),
        }
    }

    fn or_assign(&mut self, o: &Bits) {
        for (a, b) in self.words.iter_mut().zip(&o.words) {
            *a |= b;
        }
    }

    fn and(&self, o: &Bits) -> Bits {
        Bits {
            words: self
                .words
                .iter()
                .zip(&o.words)
                .map(|(a, b)| a & b)
                .collect(),
        }
    }

    fn and_not(&self, o: &Bits) -> Bits {
        Bits {
            words: self
                .words
                .iter()
                .zip(&o.words)
                .map(|(a, b)| a & !b)
                .collect(),
        }
    }

    fn not_within(&self, universe: &Bits) -> Bits {
        Bits {
            words: self
                .words
                .iter()
                .zip(&universe.words)
                .map(|(a, u)| !a & u)
                .collect(),
        }
    }

    fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * 64 + b)
                }
            })
        })
    }
}

/// Three-valued set: definitely-in mask and possibly-in mask (`on ⊆ poss`).
/// Exact sets have `on == poss`.
#[derive(Clone, Debug)]
struct TriSet {
    on: Bits,
    poss: Bits,
}

impl TriSet {
    fn exact(m: Bits) -> TriSet {
        TriSet {
            on: m.clone(),
            poss: m,
        }
    }

    fn is_exact(&self) -> bool {
        self.on == self.poss
    }
}

fn tri_symdiff(a: &TriSet, b: &TriSet, universe: &Bits) -> TriSet {
    let on = a
        .on
        .and_not(&b.poss)
        .or(&b.on.and_not(&a.poss));
    let surely_equal = a
        .on
        .and(&b.on)
        .or(&a.poss.not_within(universe).and(&b.poss.not_within(universe)));
    TriSet {
        on,
        poss: surely_equal.not_within(universe),
    }
}

fn eval_term(t: &Term, env: &BTreeMap<String, TriSet>, universe: &Bits) -> Result<TriSet, LogicError> {
    Ok(match t {
        Term::Var(x) => env
            .get(x)
            .cloned()
            .ok_or_else(|| LogicError::MissingBinding(x.clone()))?,
        Term::Zero => TriSet::exact(Bits::empty(universe.words.len())),
        Term::One => TriSet::exact(universe.clone()),
        Term::Join(a, b) => {
            let (a, b) = (eval_term(a, env, universe)?, eval_term(b, env, universe)?);
            TriSet {
                on: a.on.or(&b.on),
                poss: a.poss.or(&b.poss),
            }
        }
        Term::Meet(a, b) => {
            let (a, b) = (eval_term(a, env, universe)?, eval_term(b, env, universe)?);
            TriSet {
                on: a.on.and(&b.on),
                poss: a.poss.and(&b.poss),
            }
        }
        Term::SymDiff(a, b) => {
            let (a, b) = (eval_term(a, env, universe)?, eval_term(b, env, universe)?);
            tri_symdiff(&a, &b, universe)
        }
    })
}

/// Scalar abstraction: the fast path stores exact numerators over a fixed
/// common denominator in `i128`; the fallback uses big rationals.
trait Scalar: Clone + Ord + Sized {
    type Ctx;
    /// `None` when this representation cannot hold the computation.
    fn build_ctx(seg_measures: &[Q], formula: &Formula) -> Option<Self::Ctx>;
    fn zero(ctx: &Self::Ctx) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn from_const(ctx: &Self::Ctx, c: &Q) -> Self;
    fn scale(ctx: &Self::Ctx, c: &Q, v: &Self) -> Self;
    fn measure(ctx: &Self::Ctx, mask: &Bits) -> Self;
    fn to_q(ctx: &Self::Ctx, v: &Self) -> Q;
}

/// Denominator capacity of a formula: every node's exact value, evaluated
/// over segments with denominator `d_seg`, has denominator dividing this.
fn denom_capacity(f: &Formula, d_seg: &BigInt) -> BigInt {
    match f {
        Formula::Measure(_) | Formula::Dist(..) => d_seg.clone(),
        Formula::Const(c) => c.denom().clone(),
        Formula::Add(a, b)
        | Formula::Sub(a, b)
        | Formula::Monus(a, b)
        | Formula::Max(a, b)
        | Formula::Min(a, b) => denom_capacity(a, d_seg).lcm(&denom_capacity(b, d_seg)),
        Formula::Abs(a) | Formula::Inf(_, a) | Formula::Sup(_, a) => denom_capacity(a, d_seg),
        Formula::Scale(c, a) => c.denom() * denom_capacity(a, d_seg),
    }
}

/// Bound on the absolute value of any subformula's interpretation.
fn value_bound(f: &Formula) -> Q {
    match f {
        Formula::Measure(_) | Formula::Dist(..) => q1(),
        Formula::Const(c) => c.abs(),
        Formula::Add(a, b) | Formula::Sub(a, b) | Formula::Monus(a, b) => {
            value_bound(a) + value_bound(b)
        }
        Formula::Max(a, b) | Formula::Min(a, b) => value_bound(a).max(value_bound(b)),
        Formula::Abs(a) | Formula::Inf(_, a) | Formula::Sup(_, a) => value_bound(a),
        Formula::Scale(c, a) => c.abs() * value_bound(a),
    }
}

fn max_const_numer(f: &Formula) -> BigInt {
    match f {
        Formula::Measure(_) | Formula::Dist(..) => BigInt::one(),
        Formula::Const(c) => c.numer().abs(),
        Formula::Add(a, b)
        | Formula::Sub(a, b)
        | Formula::Monus(a, b)
        | Formula::Max(a, b)
        | Formula::Min(a, b) => max_const_numer(a).max(max_const_numer(b)),
        Formula::Abs(a) | Formula::Inf(_, a) | Formula::Sup(_, a) => max_const_numer(a),
        Formula::Scale(c, a) => c.numer().abs().max(max_const_numer(a)),
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
struct FastVal(i128);

struct FastCtx {
    seg_num: Vec<i128>,
    denom: BigInt,
}

impl Scalar for FastVal {
    type Ctx = FastCtx;

    fn build_ctx(seg_measures: &[Q], formula: &Formula) -> Option<FastCtx> {
        let d_seg = crate::rat::common_denominator(seg_measures.iter());
        let denom = denom_capacity(formula, &d_seg);
        // conservative magnitude budget for every intermediate product
        let budget: BigInt = (&denom)
            * (value_bound(formula).ceil().to_integer() + 1)
            * (max_const_numer(formula) + 1)
            * BigInt::from(seg_measures.len() + 1);
        if budget.bits() > 110 {
            return None;
        }
        let seg_num = seg_measures
            .iter()
            .map(|m| (m * Q::from_integer(denom.clone())).to_integer().to_i128())
            .collect::<Option<Vec<_>>>()?;
        Some(FastCtx { seg_num, denom })
    }

    fn zero(_ctx: &FastCtx) -> Self {
        FastVal(0)
    }

    fn add(&self, o: &Self) -> Self {
        FastVal(self.0 + o.0)
    }

    fn sub(&self, o: &Self) -> Self {
        FastVal(self.0 - o.0)
    }

    fn neg(&self) -> Self {
        FastVal(-self.0)
    }

    fn from_const(ctx: &FastCtx, c: &Q) -> Self {
        let v = (c * Q::from_integer(ctx.denom.clone())).to_integer();
        FastVal(v.to_i128().expect("bounded by budget check"))
    }

    fn scale(_ctx: &FastCtx, c: &Q, v: &Self) -> Self {
        let n = c.numer().to_i128().expect("bounded by budget check");
        let d = c.denom().to_i128().expect("bounded by budget check");
        let prod = v.0 * n;
        debug_assert_eq!(prod % d, 0, "denominator capacity violated");
        FastVal(prod / d)
    }

    fn measure(ctx: &FastCtx, mask: &Bits) -> Self {
        let mut acc = 0i128;
        for i in mask.iter_ones() {
            acc += ctx.seg_num[i];
        }
        FastVal(acc)
    }

    fn to_q(ctx: &FastCtx, v: &Self) -> Q {
        Q::new(BigInt::from(v.0), ctx.denom.clone())
    }
}

struct SlowCtx {
    seg_meas: Vec<Q>,
}

impl Scalar for Q {
    type Ctx = SlowCtx;

    fn build_ctx(seg_measures: &[Q], _formula: &Formula) -> Option<SlowCtx> {
        Some(SlowCtx {
            seg_meas: seg_measures.to_vec(),
        })
    }

    fn zero(_ctx: &SlowCtx) -> Self {
        q0()
    }

    fn add(&self, o: &Self) -> Self {
        self + o
    }

    fn sub(&self, o: &Self) -> Self {
        self - o
    }

    fn neg(&self) -> Self {
        -self
    }

    fn from_const(_ctx: &SlowCtx, c: &Q) -> Self {
        c.clone()
    }

    fn scale(_ctx: &SlowCtx, c: &Q, v: &Self) -> Self {
        c * v
    }

    fn measure(ctx: &SlowCtx, mask: &Bits) -> Self {
        let mut acc = q0();
        for i in mask.iter_ones() {
            acc += &ctx.seg_meas[i];
        }
        acc
    }

    fn to_q(_ctx: &SlowCtx, v: &Self) -> Q {
        v.clone()
    }
}

struct Engine<S: Scalar> {
    ctx: S::Ctx,
    universe: Bits,
    atom_masks: Vec<Bits>,
    seg_measures: Vec<Q>,
}

type Interval<S> = (S, S);

impl<S: Scalar> Engine<S> {
    fn interval_abs(&self, (lo, hi): Interval<S>) -> Interval<S> {
        let zero = S::zero(&self.ctx);
        if lo <= zero && zero <= hi {
            (zero, lo.neg().max(hi))
        } else if hi <= zero {
            (hi.neg(), lo.neg())
        } else {
            (lo, hi)
        }
    }

    /// Interval evaluation; quantified variables range freely (all-unknown),
    /// which soundly brackets the quantified value.
    fn eval_interval(
        &self,
        f: &Formula,
        env: &mut BTreeMap<String, TriSet>,
    ) -> Result<Interval<S>, LogicError> {
        let zero = S::zero(&self.ctx);
        Ok(match f {
            Formula::Measure(t) => {
                let s = eval_term(t, env, &self.universe)?;
                (S::measure(&self.ctx, &s.on), S::measure(&self.ctx, &s.poss))
            }
            Formula::Dist(t, u) => {
                let a = eval_term(t, env, &self.universe)?;
                let b = eval_term(u, env, &self.universe)?;
                let d = tri_symdiff(&a, &b, &self.universe);
                (S::measure(&self.ctx, &d.on), S::measure(&self.ctx, &d.poss))
            }
            Formula::Const(c) => {
                let v = S::from_const(&self.ctx, c);
                (v.clone(), v)
            }
            Formula::Add(a, b) => {
                let (l1, h1) = self.eval_interval(a, env)?;
                let (l2, h2) = self.eval_interval(b, env)?;
                (l1.add(&l2), h1.add(&h2))
            }
            Formula::Sub(a, b) => {
                let (l1, h1) = self.eval_interval(a, env)?;
                let (l2, h2) = self.eval_interval(b, env)?;
                (l1.sub(&h2), h1.sub(&l2))
            }
            Formula::Monus(a, b) => {
                let (l1, h1) = self.eval_interval(a, env)?;
                let (l2, h2) = self.eval_interval(b, env)?;
                (l1.sub(&h2).max(zero.clone()), h1.sub(&l2).max(zero))
            }
            Formula::Abs(a) => {
                let iv = self.eval_interval(a, env)?;
                self.interval_abs(iv)
            }
            Formula::Max(a, b) => {
                let (l1, h1) = self.eval_interval(a, env)?;
                let (l2, h2) = self.eval_interval(b, env)?;
                (l1.max(l2), h1.max(h2))
            }
            Formula::Min(a, b) => {
                let (l1, h1) = self.eval_interval(a, env)?;
                let (l2, h2) = self.eval_interval(b, env)?;
                (l1.min(l2), h1.min(h2))
            }
            Formula::Scale(c, a) => {
                let (l, h) = self.eval_interval(a, env)?;
                if c.is_negative() {
                    (S::scale(&self.ctx, c, &h), S::scale(&self.ctx, c, &l))
                } else {
                    (S::scale(&self.ctx, c, &l), S::scale(&self.ctx, c, &h))
                }
            }
            Formula::Inf(x, body) | Formula::Sup(x, body) => {
                let exact_env = env.values().all(TriSet::is_exact);
                if exact_env {
                    let v = self.quantify(
                        x,
                        body,
                        env,
                        matches!(f, Formula::Sup(..)),
                    )?;
                    (v.clone(), v)
                } else {
                    let shadow = env.insert(
                        x.clone(),
                        TriSet {
                            on: Bits::empty(self.universe.words.len()),
                            poss: self.universe.clone(),
                        },
                    );
                    let iv = self.eval_interval(body, env)?;
                    restore(env, x, shadow);
                    iv
                }
            }
        })
    }

    /// Atoms of the quantified variable are interchangeable when a
    /// measure-preserving relabeling of their segments fixes every bound
    /// set: the value of any formula is invariant under swapping them. The
    /// signature capturing this is the multiset of (segment measure,
    /// membership pattern across the environment) pairs.
    fn atom_classes(&self, env: &BTreeMap<String, TriSet>) -> Vec<Vec<usize>> {
        type Signature = Vec<(Q, u64)>;
        let mut signatures: Vec<(Signature, usize)> = Vec::new();
        for (ai, mask) in self.atom_masks.iter().enumerate() {
            let mut sig: Vec<(Q, u64)> = mask
                .iter_ones()
                .map(|seg| {
                    let mut cell = 0u64;
                    for tri in env.values() {
                        cell <<= 1;
                        if tri.on.words[seg / 64] >> (seg % 64) & 1 == 1 {
                            cell |= 1;
                        }
                    }
                    (self.seg_measures[seg].clone(), cell)
                })
                .collect();
            sig.sort();
            signatures.push((sig, ai));
        }
        let mut classes: Vec<(Signature, Vec<usize>)> = Vec::new();
        for (sig, ai) in signatures {
            match classes.iter_mut().find(|(s, _)| *s == sig) {
                Some((_, atoms)) => atoms.push(ai),
                None => classes.push((sig, vec![ai])),
            }
        }
        // deterministic order: by smallest member
        let mut out: Vec<Vec<usize>> = classes.into_iter().map(|(_, a)| a).collect();
        out.sort_by_key(|c| c[0]);
        out
    }

    /// Branch-and-bound over subsets of the dyadic atoms, quotiented by
    /// atom interchangeability: one canonical mask (the first `k` atoms of
    /// each class) represents every subset with the same per-class counts.
    /// Classes are decided in order of their smallest atom with counts
    /// ascending, so canonical masks appear in lexicographic order.
    /// Pruning uses the interval bracket of the partial assignment and,
    /// for quantifier-free bodies, the Lipschitz modulus.
    fn quantify(
        &self,
        x: &str,
        body: &Formula,
        env: &mut BTreeMap<String, TriSet>,
        is_sup: bool,
    ) -> Result<S, LogicError> {
        let classes = self.atom_classes(env);
        // measure of all atoms in classes from index i on
        let nwords = self.universe.words.len();
        let mut class_suffix = vec![Bits::empty(nwords); classes.len() + 1];
        for i in (0..classes.len()).rev() {
            let mut m = class_suffix[i + 1].clone();
            for &a in &classes[i] {
                m.or_assign(&self.atom_masks[a]);
            }
            class_suffix[i] = m;
        }
        let lipschitz = if body.is_quantifier_free() {
            modulus(body).get(x).cloned()
        } else {
            None
        };
        let mut best: Option<S> = None;
        self.bnb(
            x,
            body,
            env,
            is_sup,
            &classes,
            &class_suffix,
            0,
            Bits::empty(nwords),
            &lipschitz,
            &mut best,
        )?;
        Ok(best.expect("quantifier search always visits a leaf"))
    }

    #[allow(clippy::too_many_arguments)]
    fn bnb(
        &self,
        x: &str,
        body: &Formula,
        env: &mut BTreeMap<String, TriSet>,
        is_sup: bool,
        classes: &[Vec<usize>],
        class_suffix: &[Bits],
        class_idx: usize,
        on: Bits,
        lipschitz: &Option<Q>,
        best: &mut Option<S>,
    ) -> Result<(), LogicError> {
        if class_idx == classes.len() {
            let shadow = env.insert(x.to_string(), TriSet::exact(on));
            let (lo, hi) = self.eval_interval(body, env)?;
            restore(env, x, shadow);
            debug_assert!(lo == hi, "exact assignment must evaluate exactly");
            match best {
                None => *best = Some(lo),
                Some(b) => {
                    if (is_sup && lo > *b) || (!is_sup && lo < *b) {
                        *b = lo;
                    }
                }
            }
            return Ok(());
        }
        if let Some(b) = best {
            // interval prune over all completions of the undecided classes
            let tri = TriSet {
                on: on.clone(),
                poss: on.or(&class_suffix[class_idx]),
            };
            let shadow = env.insert(x.to_string(), tri);
            let (lo, hi) = self.eval_interval(body, env)?;
            restore(env, x, shadow);
            if (!is_sup && lo >= *b) || (is_sup && hi <= *b) {
                return Ok(());
            }
            // Lipschitz prune around the all-excluded completion
            if let Some(k) = lipschitz {
                let shadow = env.insert(x.to_string(), TriSet::exact(on.clone()));
                let (v0, v0hi) = self.eval_interval(body, env)?;
                restore(env, x, shadow);
                debug_assert!(v0 == v0hi);
                if (is_sup && v0 > *b) || (!is_sup && v0 < *b) {
                    *b = v0.clone();
                }
                let r = S::measure(&self.ctx, &class_suffix[class_idx]);
                let kr = S::scale(&self.ctx, k, &r);
                if (!is_sup && v0.sub(&kr) >= *b) || (is_sup && v0.add(&kr) <= *b) {
                    return Ok(());
                }
            }
        }
        let mut with = on;
        let mut count = 0usize;
        loop {
            self.bnb(
                x,
                body,
                env,
                is_sup,
                classes,
                class_suffix,
                class_idx + 1,
                with.clone(),
                lipschitz,
                best,
            )?;
            if count == classes[class_idx].len() {
                return Ok(());
            }
            with.or_assign(&self.atom_masks[classes[class_idx][count]]);
            count += 1;
        }
    }
}

fn restore(env: &mut BTreeMap<String, TriSet>, x: &str, shadow: Option<TriSet>) {
    match shadow {
        Some(v) => {
            env.insert(x.to_string(), v);
        }
        None => {
            env.remove(x);
        }
    }
}

fn build_segments(env: &BTreeMap<String, MSet>, depth: usize) -> (Vec<Q>, Vec<Bits>, Bits, BTreeMap<String, Bits>) {
    let den = BigInt::from(1u64) << depth;
    let mut cuts: Vec<Q> = (0..=(1u64 << depth))
        .map(|k| Q::new(BigInt::from(k), den.clone()))
        .collect();
    for m in env.values() {
        for (lo, hi) in m.intervals() {
            cuts.push(lo.clone());
            cuts.push(hi.clone());
        }
    }
    cuts.sort();
    cuts.dedup();
    let n_segs = cuts.len() - 1;
    let nwords = n_segs.div_ceil(64);
    let seg_measures: Vec<Q> = cuts.windows(2).map(|w| &w[1] - &w[0]).collect();
    let mut universe = Bits::empty(nwords);
    for i in 0..n_segs {
        universe.set(i);
    }
    let n_atoms = 1usize << depth;
    let mut atom_masks = vec![Bits::empty(nwords); n_atoms];
    for (i, w) in cuts.windows(2).enumerate() {
        // segment lies inside exactly one dyadic atom
        let atom = (&w[0] * Q::from_integer(den.clone()))
            .floor()
            .to_integer()
            .to_usize()
            .expect("depth is capped");
        atom_masks[atom.min(n_atoms - 1)].set(i);
    }
    let env_masks = env
        .iter()
        .map(|(name, m)| {
            let mut bits = Bits::empty(nwords);
            for (i, w) in cuts.windows(2).enumerate() {
                if m.contains_point(&w[0]) {
                    bits.set(i);
                }
            }
            (name.clone(), bits)
        })
        .collect();
    (seg_measures, atom_masks, universe, env_masks)
}

fn eval_with<S: Scalar>(
    f: &Formula,
    seg_measures: &[Q],
    atom_masks: Vec<Bits>,
    universe: Bits,
    env_masks: &BTreeMap<String, Bits>,
) -> Option<Result<Q, LogicError>> {
    let ctx = S::build_ctx(seg_measures, f)?;
    let engine = Engine::<S> {
        ctx,
        universe,
        atom_masks,
        seg_measures: seg_measures.to_vec(),
    };
    let mut env: BTreeMap<String, TriSet> = env_masks
        .iter()
        .map(|(k, v)| (k.clone(), TriSet::exact(v.clone())))
        .collect();
    Some(engine.eval_interval(f, &mut env).map(|(lo, hi)| {
        debug_assert!(lo == hi, "top-level evaluation must be exact");
        S::to_q(&engine.ctx, &lo)
    }))
}

/// Exact value of `f` where quantifiers range over the unions of depth-`d`
/// dyadic atoms. Exhaustive for small depths; branch-and-bound with
/// modulus and interval pruning keeps depth 4 tractable.
pub fn eval_at_depth(
    f: &Formula,
    env: &BTreeMap<String, MSet>,
    depth: usize,
    opts: &EvalOptions,
) -> Result<Q, LogicError> {
    if depth > opts.depth_cap || depth > HARD_DEPTH_CAP {
        return Err(LogicError::DepthOverCap {
            depth,
            cap: opts.depth_cap.min(HARD_DEPTH_CAP),
        });
    }
    for v in f.free_vars() {
        if !env.contains_key(&v) {
            return Err(LogicError::MissingBinding(v));
        }
    }
    let (seg_measures, atom_masks, universe, env_masks) = build_segments(env, depth);
    if let Some(res) = eval_with::<FastVal>(
        f,
        &seg_measures,
        atom_masks.clone(),
        universe.clone(),
        &env_masks,
    ) {
        return res;
    }
    eval_with::<Q>(f, &seg_measures, atom_masks, universe, &env_masks)
        .expect("rational context always builds")
}

/// Bracketing of observed per-depth values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundsValue {
    pub lower: Q,
    pub upper: Q,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Trend {
    Constant,
    NonIncreasing,
    NonDecreasing,
    Mixed,
}

/// Per-depth values plus a convergence report.
#[derive(Clone, Debug)]
pub struct BoundsReport {
    pub values: Vec<(usize, Q)>,
    pub bounds: BoundsValue,
    pub trend: Trend,
    /// Each successive value is exactly half the previous one (the
    /// signature of the atomless benchmark sentence, `2^-(d+1)`).
    pub halving: bool,
}

pub fn eval_bounds(
    f: &Formula,
    env: &BTreeMap<String, MSet>,
    depths: &[usize],
    opts: &EvalOptions,
) -> Result<BoundsReport, LogicError> {
    let mut values = Vec::with_capacity(depths.len());
    for &d in depths {
        values.push((d, eval_at_depth(f, env, d, opts)?));
    }
    let vs: Vec<&Q> = values.iter().map(|(_, v)| v).collect();
    let lower = vs.iter().min().cloned().cloned().unwrap_or_else(q0);
    let upper = vs.iter().max().cloned().cloned().unwrap_or_else(q0);
    let non_inc = vs.windows(2).all(|w| w[0] >= w[1]);
    let non_dec = vs.windows(2).all(|w| w[0] <= w[1]);
    let trend = match (non_inc, non_dec) {
        (true, true) => Trend::Constant,
        (true, false) => Trend::NonIncreasing,
        (false, true) => Trend::NonDecreasing,
        (false, false) => Trend::Mixed,
    };
    let halving = vs.len() >= 2
        && vs
            .windows(2)
            .all(|w| w[1] * &Q::from_integer(BigInt::from(2)) == *w[0]);
    Ok(BoundsReport {
        values,
        bounds: BoundsValue { lower, upper },
        trend,
        halving,
    })
}

/// Quantifier-free evaluation straight from a type: atoms of the type play
/// the role of the tuple's atoms, so the value depends on the type alone.
/// Variables must be named `x1..xN` with `N` the type's arity.
pub fn qf_eval(f: &Formula, p: &TypeVector) -> Result<Q, LogicError> {
    if !f.is_quantifier_free() {
        return Err(LogicError::QuantifierPresent);
    }
    let n = p.arity();
    let mut var_index: BTreeMap<String, usize> = BTreeMap::new();
    for v in f.free_vars() {
        let k: usize = v
            .strip_prefix('x')
            .and_then(|s| s.parse().ok())
            .filter(|&k| k >= 1)
            .ok_or_else(|| LogicError::BadVariableName(v.clone()))?;
        if k > n {
            return Err(LogicError::ArityOutOfRange { var: v, arity: n });
        }
        var_index.insert(v, k);
    }
    fn term_truth(t: &Term, delta: usize, n: usize, vars: &BTreeMap<String, usize>) -> bool {
        match t {
            // convention: bit 0 in position i means "inside A_i"
            Term::Var(x) => (delta >> (n - vars[x])) & 1 == 0,
            Term::Zero => false,
            Term::One => true,
            Term::Join(a, b) => {
                term_truth(a, delta, n, vars) || term_truth(b, delta, n, vars)
            }
            Term::Meet(a, b) => {
                term_truth(a, delta, n, vars) && term_truth(b, delta, n, vars)
            }
            Term::SymDiff(a, b) => {
                term_truth(a, delta, n, vars) != term_truth(b, delta, n, vars)
            }
        }
    }
    fn go(
        f: &Formula,
        p: &TypeVector,
        vars: &BTreeMap<String, usize>,
    ) -> Q {
        let n = p.arity();
        match f {
            Formula::Measure(t) => {
                let mut acc = q0();
                for delta in 0..(1usize << n) {
                    if term_truth(t, delta, n, vars) {
                        acc += p.weight(delta);
                    }
                }
                acc
            }
            Formula::Dist(t, u) => {
                let mut acc = q0();
                for delta in 0..(1usize << n) {
                    if term_truth(t, delta, n, vars) != term_truth(u, delta, n, vars) {
                        acc += p.weight(delta);
                    }
                }
                acc
            }
            Formula::Const(c) => c.clone(),
            Formula::Add(a, b) => go(a, p, vars) + go(b, p, vars),
            Formula::Sub(a, b) => go(a, p, vars) - go(b, p, vars),
            Formula::Monus(a, b) => crate::rat::monus(&go(a, p, vars), &go(b, p, vars)),
            Formula::Abs(a) => go(a, p, vars).abs(),
            Formula::Max(a, b) => go(a, p, vars).max(go(b, p, vars)),
            Formula::Min(a, b) => go(a, p, vars).min(go(b, p, vars)),
            Formula::Scale(c, a) => c * go(a, p, vars),
            Formula::Inf(..) | Formula::Sup(..) => unreachable!("checked quantifier-free"),
        }
    }
    Ok(go(f, p, &var_index))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::q;
    use crate::types::qf_type;

    fn parse(s: &str) -> Formula {
        Formula::parse(s).unwrap()
    }

    fn eval(f: &str, env: &[(&str, &str)], depth: usize) -> Q {
        let formula = parse(f);
        let env: BTreeMap<String, MSet> = env
            .iter()
            .map(|(k, v)| (k.to_string(), MSet::parse(v).unwrap()))
            .collect();
        eval_at_depth(&formula, &env, depth, &EvalOptions::default()).unwrap()
    }

    const ATOMLESS: &str = "sup x . inf y . |m(x /\\ y) - 1/2 * m(x)|";
    const DIAMETER: &str = "sup x1 . sup x2 . d(x1, x2)";

    #[test]
    fn parse_atomless_sentence() {
        let f = parse(ATOMLESS);
        let expect = Formula::Sup(
            "x".into(),
            Box::new(Formula::Inf(
                "y".into(),
                Box::new(Formula::Abs(Box::new(Formula::Sub(
                    Box::new(Formula::Measure(Term::Meet(
                        Box::new(Term::Var("x".into())),
                        Box::new(Term::Var("y".into())),
                    ))),
                    Box::new(Formula::Scale(
                        q(1, 2),
                        Box::new(Formula::Measure(Term::Var("x".into()))),
                    )),
                )))),
            )),
        );
        assert_eq!(f, expect);
        assert!(f.free_vars().is_empty());
    }

    #[test]
    fn parse_free_vars() {
        let f = parse("d(x, y)");
        let fv: Vec<String> = f.free_vars().into_iter().collect();
        assert_eq!(fv, vec!["x".to_string(), "y".to_string()]);
        let g = parse(DIAMETER);
        assert!(g.free_vars().is_empty());
    }

    #[test]
    fn print_parse_round_trip() {
        for s in [
            ATOMLESS,
            DIAMETER,
            "m(x \\/ (y /\\ z))",
            "m(x (+) 1) - m(0)",
            "max(m(x), min(d(x, y), 1/3))",
            "2 * 3/4 * m(x) -. 1/2",
            "inf x . m(x) + 1",
            "-1/2 * m(x) + -3",
        ] {
            let f = parse(s);
            let printed = f.to_string();
            assert_eq!(parse(&printed), f, "round trip of {s:?} via {printed:?}");
        }
    }

    #[test]
    fn parse_errors_carry_positions() {
        for bad in ["m(", "sup . m(x)", "m(x) ++ 1", "d(x)", "m(2)"] {
            match Formula::parse(bad) {
                Err(LogicError::Parse { .. }) => {}
                other => panic!("expected parse error for {bad:?}, got {other:?}"),
            }
        }
    }

    #[test]
    fn modulus_examples() {
        let m = modulus(&parse("m(x)"));
        assert_eq!(m["x"], q(1, 1));
        let m = modulus(&parse("1/2 * m(x)"));
        assert_eq!(m["x"], q(1, 2));
        let m = modulus(&parse("|m(x /\\ y) - 1/2 * m(x)|"));
        assert_eq!(m["x"], q(3, 2));
        assert_eq!(m["y"], q(1, 1));
        // quantifiers erase their own variable
        let m = modulus(&parse("inf y . |m(x /\\ y) - 1/2 * m(x)|"));
        assert_eq!(m["x"], q(3, 2));
        assert!(!m.contains_key("y"));
    }

    #[test]
    fn atomless_depth_law() {
        for d in 1..=3usize {
            assert_eq!(
                eval(ATOMLESS, &[], d),
                q(1, 1 << (d + 1)),
                "depth {d}"
            );
        }
    }

    #[test]
    fn diameter_is_one_at_every_depth() {
        for d in 0..=3usize {
            assert_eq!(eval(DIAMETER, &[], d), q(1, 1));
        }
    }

    #[test]
    fn quantifier_free_measure() {
        assert_eq!(eval("m(x)", &[("x", "[1/4,1/3)")], 2), q(1, 12));
        assert_eq!(eval("m(1)", &[], 0), q(1, 1));
    }

    #[test]
    fn missing_binding_and_depth_cap() {
        let f = parse("m(x)");
        let empty = BTreeMap::new();
        assert!(matches!(
            eval_at_depth(&f, &empty, 1, &EvalOptions::default()),
            Err(LogicError::MissingBinding(_))
        ));
        assert!(matches!(
            eval_at_depth(&f, &empty, 7, &EvalOptions::default()),
            Err(LogicError::DepthOverCap { .. })
        ));
    }

    #[test]
    fn bounds_report_flags_halving() {
        let f = parse(ATOMLESS);
        let env = BTreeMap::new();
        let r = eval_bounds(&f, &env, &[1, 2, 3], &EvalOptions::default()).unwrap();
        assert_eq!(r.trend, Trend::NonIncreasing);
        assert!(r.halving);
        assert_eq!(r.bounds.lower, q(1, 16));
        assert_eq!(r.bounds.upper, q(1, 4));
        let d = parse(DIAMETER);
        let r = eval_bounds(&d, &env, &[1, 2, 3], &EvalOptions::default()).unwrap();
        assert_eq!(r.trend, Trend::Constant);
        assert!(!r.halving);
    }

    #[test]
    fn qf_eval_examples() {
        let p = qf_type(&[
            MSet::parse("[0,1/3)").unwrap(),
            MSet::parse("[1/4,1)").unwrap(),
        ])
        .unwrap();
        assert_eq!(qf_eval(&parse("m(x1 /\\ x2)"), &p).unwrap(), q(1, 12));
        assert_eq!(qf_eval(&parse("d(x1, x1)"), &p).unwrap(), q(0, 1));
        assert_eq!(qf_eval(&parse("m(x1 (+) x2)"), &p).unwrap(), q(11, 12));
    }

    #[test]
    fn qf_eval_rejects_quantifiers_and_bad_vars() {
        let p = qf_type(&[MSet::parse("[0,1/2)").unwrap()]).unwrap();
        assert!(matches!(
            qf_eval(&parse("inf x1 . m(x1)"), &p),
            Err(LogicError::QuantifierPresent)
        ));
        assert!(matches!(
            qf_eval(&parse("m(y)"), &p),
            Err(LogicError::BadVariableName(_))
        ));
        assert!(matches!(
            qf_eval(&parse("m(x2)"), &p),
            Err(LogicError::ArityOutOfRange { .. })
        ));
    }

    #[test]
    fn qf_eval_matches_direct_evaluation() {
        let tuple = [
            MSet::parse("[0,1/3)u[1/2,5/8)").unwrap(),
            MSet::parse("[1/4,3/4)").unwrap(),
        ];
        let p = qf_type(&tuple).unwrap();
        let env: BTreeMap<String, MSet> = [
            ("x1".to_string(), tuple[0].clone()),
            ("x2".to_string(), tuple[1].clone()),
        ]
        .into();
        for s in [
            "m(x1 /\\ x2)",
            "d(x1, x2) - m(x1 (+) x2)",
            "max(m(x1), m(x2)) -. 1/3",
            "|m(x1) - m(x2)| + 2 * m(x1 \\/ x2)",
        ] {
            let f = parse(s);
            assert_eq!(
                qf_eval(&f, &p).unwrap(),
                eval_at_depth(&f, &env, 1, &EvalOptions::default()).unwrap(),
                "formula {s}"
            );
        }
    }

    #[test]
    fn monotone_refinement_single_quantifier() {
        let env: BTreeMap<String, MSet> =
            [("z".to_string(), MSet::parse("[1/3,2/3)").unwrap())].into();
        let inf = parse("inf x . |m(x) - m(x /\\ z) - 1/5|");
        let sup = parse("sup x . m(x (+) z) -. 2/3");
        let opts = EvalOptions::default();
        let mut prev_inf: Option<Q> = None;
        let mut prev_sup: Option<Q> = None;
        for d in 0..=3 {
            let vi = eval_at_depth(&inf, &env, d, &opts).unwrap();
            let vs = eval_at_depth(&sup, &env, d, &opts).unwrap();
            if let Some(p) = prev_inf {
                assert!(vi <= p, "inf must refine downward at depth {d}");
            }
            if let Some(p) = prev_sup {
                assert!(vs >= p, "sup must refine upward at depth {d}");
            }
            prev_inf = Some(vi);
            prev_sup = Some(vs);
        }
    }

    #[test]
    fn depth_four_quantifier_with_environment() {
        // the environment splits the atom classes: [0,1/3) covers five full
        // depth-4 atoms (3/48 each) and a sixth partially (1/48), so the
        // reachable values of m(x ∧ z) are (3a + b)/48 with a ≤ 5, b ≤ 1
        let env: BTreeMap<String, MSet> =
            [("z".to_string(), MSet::parse("[0,1/3)").unwrap())].into();
        let opts = EvalOptions::default();
        // 1/6 = 8/48 is unreachable; 7/48 and 9/48 are the neighbors
        let f = parse("inf x . |m(x /\\ z) - 1/6|");
        assert_eq!(eval_at_depth(&f, &env, 4, &opts).unwrap(), q(1, 48));
        // 1/5 sits between 9/48 and the reachable 10/48
        let g = parse("inf x . |m(x /\\ z) - 1/5|");
        assert_eq!(eval_at_depth(&g, &env, 4, &opts).unwrap(), q(1, 120));
    }

    #[test]
    fn invariance_under_atom_permutations() {
        // an exchange permuting the depth-2 atoms leaves every value fixed
        let mut rng = crate::sampling::SplitMix64::new(9);
        let env: BTreeMap<String, MSet> =
            [("z".to_string(), MSet::parse("[0,1/4)u[1/2,3/4)").unwrap())].into();
        let f = parse("inf x . |m(x /\\ z) - 1/3 * m(x)|");
        let opts = EvalOptions::default();
        let base = eval_at_depth(&f, &env, 2, &opts).unwrap();
        for _ in 0..5 {
            let t = crate::sampling::random_iet(&mut rng, 4);
            let moved: BTreeMap<String, MSet> = env
                .iter()
                .map(|(k, v)| (k.clone(), t.apply(v)))
                .collect();
            assert_eq!(eval_at_depth(&f, &moved, 2, &opts).unwrap(), base);
        }
    }
}

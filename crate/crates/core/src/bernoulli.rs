//! The two-generator Bernoulli shift on the cylinder algebra of
//! `{0,1}^(ℕ×F₂)`.
//!
//! A cylinder set is a finite boolean condition on coordinates `(n, g)`
//! with `n` a level and `g` a reduced word; the product measure gives each
//! coordinate an independent fair bit. The group acts by
//! `(γ·x)(n, g) = x(n, γ⁻¹g)`, so membership of `y` in `γ·A` is decided by
//! the coordinates `(n, γg)`: shifting translates supports within the group
//! column while the truth table is untouched.
//!
//! Distinct group columns are independent, which makes quantifier-free
//! types of tuples living in two different columns factor as products —
//! checked here exactly. Finally, the two shift generators are exported as
//! dyadic interval exchanges through a windowed binary embedding: the
//! canonical coordinate order `(level, length-lex word)` fixes the
//! embedding and hence the exchanges bit for bit.

use crate::freegroup::{FreeGroupError, Gen, ReducedWord};
use crate::malg::{Iet, MSet, MalgError};
use crate::rat::Q;
use crate::types::{TypeError, TypeVector};
use num_bigint::BigInt;
use num_traits::One;
use serde_json::{json, Value};
use std::collections::BTreeSet;
use std::fmt;
use thiserror::Error;

/// Support-size cap: truth tables are bitmasks over `2^|support|`.
pub const MAX_SUPPORT: usize = 20;

/// Cap on the extended window depth for [`generator_iets`] (the exchanges
/// permute `2^depth` dyadic atoms).
pub const MAX_WINDOW_DEPTH: usize = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BernoulliError {
    #[error("support of size {0} exceeds the cap {MAX_SUPPORT}")]
    SupportTooWide(usize),
    #[error("duplicate coordinate {0} in support")]
    DuplicateCoordinate(String),
    #[error("truth index {index} out of range for support of size {support}")]
    TruthIndexOutOfRange { index: u64, support: usize },
    #[error("tuple mixes group columns {0} and {1}")]
    MixedColumns(String, String),
    #[error("both tuples live in the same group column {0}")]
    SameColumn(String),
    #[error("extended window has depth {depth}, above the cap {cap}")]
    WindowTooLarge { depth: usize, cap: usize },
    #[error("cylinder set uses coordinate {0} outside the embedding window")]
    SupportOutsideWindow(String),
    #[error("bad coordinate literal {0:?}: {1}")]
    Parse(String, String),
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error(transparent)]
    Malg(#[from] MalgError),
    #[error(transparent)]
    FreeGroup(#[from] FreeGroupError),
}

/// A coordinate `(n, g)` of the product space; ordered by
/// `(level, length-lex word)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Coord {
    pub level: u32,
    pub word: ReducedWord,
}

impl Coord {
    pub fn new(level: u32, word: ReducedWord) -> Self {
        Coord { level, word }
    }

    /// Literal syntax `level:word`, e.g. `0:e` or `1:ab'`.
    pub fn parse(text: &str) -> Result<Self, BernoulliError> {
        let (lvl, w) = text
            .split_once(':')
            .ok_or_else(|| BernoulliError::Parse(text.to_string(), "expected level:word".into()))?;
        let level: u32 = lvl
            .trim()
            .parse()
            .map_err(|e| BernoulliError::Parse(text.to_string(), format!("bad level: {e}")))?;
        let word = ReducedWord::parse(w)
            .map_err(|e| BernoulliError::Parse(text.to_string(), e.to_string()))?;
        Ok(Coord { level, word })
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.level, self.word)
    }
}

impl PartialOrd for Coord {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Coord {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.level, &self.word).cmp(&(other.level, &other.word))
    }
}

/// Truth table over `2^k` assignments, stored as a bitmask.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Truth {
    k: usize,
    words: Vec<u64>,
}

impl Truth {
    fn new_false(k: usize) -> Truth {
        Truth {
            k,
            words: vec![0; (1usize << k).div_ceil(64)],
        }
    }

    fn rows(&self) -> u64 {
        1u64 << self.k
    }

    fn get(&self, idx: u64) -> bool {
        self.words[(idx / 64) as usize] >> (idx % 64) & 1 == 1
    }

    fn set(&mut self, idx: u64) {
        self.words[(idx / 64) as usize] |= 1 << (idx % 64);
    }

    fn count(&self) -> u64 {
        let full = self.rows();
        let mut seen = 0u64;
        let mut total = 0u64;
        for w in &self.words {
            let take = (full - seen).min(64);
            let mask = if take == 64 { !0u64 } else { (1u64 << take) - 1 };
            total += (w & mask).count_ones() as u64;
            seen += take;
        }
        total
    }
}

/// An element of the cylinder algebra in canonical form: the support is
/// sorted and minimal (no coordinate the truth table ignores).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CylinderSet {
    support: Vec<Coord>,
    truth: Truth,
}

impl CylinderSet {
    pub fn empty() -> Self {
        CylinderSet {
            support: vec![],
            truth: Truth::new_false(0),
        }
    }

    pub fn full() -> Self {
        let mut t = Truth::new_false(0);
        t.set(0);
        CylinderSet { support: vec![], truth: t }
    }

    /// The event `x(coord) = value`.
    pub fn coordinate_is(coord: Coord, value: bool) -> Self {
        let mut t = Truth::new_false(1);
        t.set(u64::from(value));
        CylinderSet {
            support: vec![coord],
            truth: t,
        }
    }

    /// Builds from a support and the list of satisfying assignment indices
    /// (bit `j` of an index is the value at the `j`-th listed coordinate).
    pub fn from_truth_indices(
        support: Vec<Coord>,
        truth_indices: &[u64],
    ) -> Result<Self, BernoulliError> {
        if support.len() > MAX_SUPPORT {
            return Err(BernoulliError::SupportTooWide(support.len()));
        }
        {
            let mut seen = BTreeSet::new();
            for c in &support {
                if !seen.insert(c.clone()) {
                    return Err(BernoulliError::DuplicateCoordinate(c.to_string()));
                }
            }
        }
        let k = support.len();
        let mut truth = Truth::new_false(k);
        for &idx in truth_indices {
            if idx >= truth.rows() {
                return Err(BernoulliError::TruthIndexOutOfRange {
                    index: idx,
                    support: k,
                });
            }
            truth.set(idx);
        }
        Ok(CylinderSet { support, truth }.canonicalize())
    }

    pub fn support(&self) -> &[Coord] {
        &self.support
    }

    /// Sorts the support and drops coordinates the truth table ignores.
    fn canonicalize(self) -> CylinderSet {
        let k = self.support.len();
        // sort support, permuting assignment bits accordingly
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&i, &j| self.support[i].cmp(&self.support[j]));
        let sorted_support: Vec<Coord> =
            order.iter().map(|&i| self.support[i].clone()).collect();
        let mut sorted_truth = Truth::new_false(k);
        for idx in 0..self.truth.rows() {
            if self.truth.get(idx) {
                let mut new_idx = 0u64;
                for (new_bit, &old_bit) in order.iter().enumerate() {
                    if idx >> old_bit & 1 == 1 {
                        new_idx |= 1 << new_bit;
                    }
                }
                sorted_truth.set(new_idx);
            }
        }
        // drop irrelevant coordinates
        let mut support = sorted_support;
        let mut truth = sorted_truth;
        let mut bit = 0usize;
        while bit < support.len() {
            let rows = truth.rows();
            let mut relevant = false;
            for idx in 0..rows {
                if truth.get(idx) != truth.get(idx ^ (1 << bit)) {
                    relevant = true;
                    break;
                }
            }
            if relevant {
                bit += 1;
                continue;
            }
            // project the coordinate away
            let mut smaller = Truth::new_false(support.len() - 1);
            for idx in 0..rows {
                if idx >> bit & 1 == 1 {
                    continue;
                }
                if truth.get(idx) {
                    let low = idx & ((1 << bit) - 1);
                    let high = (idx >> (bit + 1)) << bit;
                    smaller.set(low | high);
                }
            }
            support.remove(bit);
            truth = smaller;
        }
        CylinderSet { support, truth }
    }

    /// Product measure: satisfied assignments over `2^|support|`.
    pub fn measure(&self) -> Q {
        Q::new(
            BigInt::from(self.truth.count()),
            BigInt::one() << self.support.len(),
        )
    }

    fn align(a: &CylinderSet, b: &CylinderSet) -> (Vec<Coord>, Truth, Truth) {
        let mut support: Vec<Coord> = a.support.iter().chain(&b.support).cloned().collect();
        support.sort();
        support.dedup();
        let lift = |c: &CylinderSet| -> Truth {
            let positions: Vec<Option<usize>> = support
                .iter()
                .map(|coord| c.support.iter().position(|x| x == coord))
                .collect();
            let mut out = Truth::new_false(support.len());
            for idx in 0..out.rows() {
                let mut small = 0u64;
                for (big_bit, pos) in positions.iter().enumerate() {
                    if let Some(p) = pos {
                        if idx >> big_bit & 1 == 1 {
                            small |= 1 << p;
                        }
                    }
                }
                if c.truth.get(small) {
                    out.set(idx);
                }
            }
            out
        };
        let ta = lift(a);
        let tb = lift(b);
        (support, ta, tb)
    }

    fn combine(a: &CylinderSet, b: &CylinderSet, f: impl Fn(bool, bool) -> bool) -> Result<CylinderSet, BernoulliError> {
        let (support, ta, tb) = CylinderSet::align(a, b);
        if support.len() > MAX_SUPPORT {
            return Err(BernoulliError::SupportTooWide(support.len()));
        }
        let mut truth = Truth::new_false(support.len());
        for idx in 0..truth.rows() {
            if f(ta.get(idx), tb.get(idx)) {
                truth.set(idx);
            }
        }
        Ok(CylinderSet { support, truth }.canonicalize())
    }

    pub fn intersect(&self, other: &CylinderSet) -> Result<CylinderSet, BernoulliError> {
        CylinderSet::combine(self, other, |a, b| a && b)
    }

    pub fn union(&self, other: &CylinderSet) -> Result<CylinderSet, BernoulliError> {
        CylinderSet::combine(self, other, |a, b| a || b)
    }

    pub fn sym_diff(&self, other: &CylinderSet) -> Result<CylinderSet, BernoulliError> {
        CylinderSet::combine(self, other, |a, b| a != b)
    }

    pub fn difference(&self, other: &CylinderSet) -> Result<CylinderSet, BernoulliError> {
        CylinderSet::combine(self, other, |a, b| a && !b)
    }

    pub fn complement(&self) -> CylinderSet {
        let mut truth = Truth::new_false(self.support.len());
        for idx in 0..truth.rows() {
            if !self.truth.get(idx) {
                truth.set(idx);
            }
        }
        CylinderSet {
            support: self.support.clone(),
            truth,
        }
        .canonicalize()
    }

    /// The distinct group column of the support, when there is one.
    pub fn column(&self) -> Result<Option<ReducedWord>, BernoulliError> {
        let mut col: Option<ReducedWord> = None;
        for c in &self.support {
            match &col {
                None => col = Some(c.word.clone()),
                Some(w) if *w == c.word => {}
                Some(w) => {
                    return Err(BernoulliError::MixedColumns(
                        w.to_string(),
                        c.word.to_string(),
                    ))
                }
            }
        }
        Ok(col)
    }

    /// JSON form `{"support": ["0:e", …], "truth": [0, 3, …]}`.
    pub fn to_json(&self) -> Value {
        let truth: Vec<u64> = (0..self.truth.rows()).filter(|&i| self.truth.get(i)).collect();
        json!({
            "support": self.support.iter().map(Coord::to_string).collect::<Vec<_>>(),
            "truth": truth,
        })
    }

    /// Literal syntax `coord,coord|idx,idx`, e.g. `0:e,0:a|1,3`; the empty
    /// support is written `|0` (full) or `|` (empty).
    pub fn parse(text: &str) -> Result<Self, BernoulliError> {
        let (coords, idxs) = text
            .split_once('|')
            .ok_or_else(|| BernoulliError::Parse(text.to_string(), "expected coords|indices".into()))?;
        let support: Vec<Coord> = coords
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(Coord::parse)
            .collect::<Result<_, _>>()?;
        let truth: Vec<u64> = idxs
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| {
                s.trim()
                    .parse::<u64>()
                    .map_err(|e| BernoulliError::Parse(text.to_string(), format!("bad index: {e}")))
            })
            .collect::<Result<_, _>>()?;
        CylinderSet::from_truth_indices(support, &truth)
    }
}

/// The shift action: `(γ·x)(n, g) = x(n, γ⁻¹g)`, i.e. the support
/// coordinate `(n, g)` moves to `(n, γ·g)` with the truth table unchanged.
pub fn shift(gamma: &ReducedWord, a: &CylinderSet) -> CylinderSet {
    let support = a
        .support
        .iter()
        .map(|c| Coord::new(c.level, gamma.mul(&c.word)))
        .collect();
    CylinderSet {
        support,
        truth: a.truth.clone(),
    }
    .canonicalize()
}

/// Exact independence check: `μ(A ∩ B)` versus `μ(A)·μ(B)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndependenceReport {
    pub independent: bool,
    pub lhs: Q,
    pub rhs: Q,
}

pub fn independence_check(a: &CylinderSet, b: &CylinderSet) -> Result<IndependenceReport, BernoulliError> {
    let lhs = a.intersect(b)?.measure();
    let rhs = a.measure() * b.measure();
    Ok(IndependenceReport {
        independent: lhs == rhs,
        lhs,
        rhs,
    })
}

/// Quantifier-free type of a tuple of cylinder sets: the measures of the
/// `2^n` boolean atoms, with the same index conventions as
/// [`crate::types::qf_type`].
pub fn cyl_qf_type(tuple: &[CylinderSet]) -> Result<TypeVector, BernoulliError> {
    if tuple.is_empty() {
        return Ok(TypeVector::trivial());
    }
    let mut cells = vec![CylinderSet::full()];
    for a in tuple {
        let mut next = Vec::with_capacity(cells.len() * 2);
        for cell in &cells {
            next.push(cell.intersect(a)?);
            next.push(cell.difference(a)?);
        }
        cells = next;
    }
    let weights = cells.iter().map(CylinderSet::measure).collect();
    Ok(TypeVector::from_weights(tuple.len(), weights)?)
}

/// Result of the exact type-factorization check for tuples in two distinct
/// group columns.
#[derive(Clone, Debug)]
pub struct FactorizationReport {
    pub holds: bool,
    /// Type of the interleaved tuple `A₁,B₁,A₂,B₂,…`.
    pub joint: TypeVector,
    /// Product of the two marginal types, arranged on the same atoms.
    pub product: TypeVector,
}

/// Verifies that the joint type of two tuples living in distinct group
/// columns factors exactly as the product of the marginal types.
pub fn joint_type_factorization(
    a: &[CylinderSet],
    b: &[CylinderSet],
) -> Result<FactorizationReport, BernoulliError> {
    let mut col_a: Option<ReducedWord> = None;
    for s in a {
        if let Some(c) = s.column()? {
            match &col_a {
                None => col_a = Some(c),
                Some(w) if *w == c => {}
                Some(w) => {
                    return Err(BernoulliError::MixedColumns(w.to_string(), c.to_string()))
                }
            }
        }
    }
    let mut col_b: Option<ReducedWord> = None;
    for s in b {
        if let Some(c) = s.column()? {
            match &col_b {
                None => col_b = Some(c),
                Some(w) if *w == c => {}
                Some(w) => {
                    return Err(BernoulliError::MixedColumns(w.to_string(), c.to_string()))
                }
            }
        }
    }
    if let (Some(x), Some(y)) = (&col_a, &col_b) {
        if x == y {
            return Err(BernoulliError::SameColumn(x.to_string()));
        }
    }
    // interleave a1 b1 a2 b2 …, draining the longer tuple at the end
    let mut interleaved: Vec<CylinderSet> = Vec::with_capacity(a.len() + b.len());
    let mut from_a: Vec<bool> = Vec::with_capacity(a.len() + b.len());
    let mut ia = a.iter();
    let mut ib = b.iter();
    loop {
        match (ia.next(), ib.next()) {
            (Some(x), Some(y)) => {
                interleaved.push(x.clone());
                from_a.push(true);
                interleaved.push(y.clone());
                from_a.push(false);
            }
            (Some(x), None) => {
                interleaved.push(x.clone());
                from_a.push(true);
            }
            (None, Some(y)) => {
                interleaved.push(y.clone());
                from_a.push(false);
            }
            (None, None) => break,
        }
    }
    let joint = cyl_qf_type(&interleaved)?;
    let pa = cyl_qf_type(a)?;
    let pb = cyl_qf_type(b)?;
    let n = interleaved.len();
    let mut product_weights = Vec::with_capacity(1 << n);
    for delta in 0..(1usize << n) {
        let mut da = 0usize;
        let mut db = 0usize;
        for (pos, &is_a) in from_a.iter().enumerate() {
            let bit = delta >> (n - 1 - pos) & 1;
            if is_a {
                da = da << 1 | bit;
            } else {
                db = db << 1 | bit;
            }
        }
        product_weights.push(pa.weight(da) * pb.weight(db));
    }
    let product = TypeVector::from_weights(n, product_weights)?;
    Ok(FactorizationReport {
        holds: joint == product,
        joint,
        product,
    })
}

/// Binary embedding of the cylinder algebra over a fixed finite window into
/// dyadic intervals: the canonical coordinate order gives the bit order,
/// first coordinate most significant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WindowEmbedding {
    coords: Vec<Coord>,
}

impl WindowEmbedding {
    pub fn new(mut coords: Vec<Coord>) -> Self {
        coords.sort();
        coords.dedup();
        WindowEmbedding { coords }
    }

    pub fn coords(&self) -> &[Coord] {
        &self.coords
    }

    pub fn depth(&self) -> usize {
        self.coords.len()
    }

    /// Image of a cylinder set supported inside the window.
    pub fn embed(&self, a: &CylinderSet) -> Result<MSet, BernoulliError> {
        let positions: Vec<usize> = a
            .support()
            .iter()
            .map(|c| {
                self.coords
                    .iter()
                    .position(|w| w == c)
                    .ok_or_else(|| BernoulliError::SupportOutsideWindow(c.to_string()))
            })
            .collect::<Result<_, _>>()?;
        let m = self.coords.len();
        let den = BigInt::one() << m;
        let mut raw = Vec::new();
        for cell in 0..(1u64 << m) {
            // cell bit for coordinate i (0 = first, most significant)
            let mut small = 0u64;
            for (j, &pos) in positions.iter().enumerate() {
                if cell >> (m - 1 - pos) & 1 == 1 {
                    small |= 1 << j;
                }
            }
            if a.truth.get(small) {
                raw.push((
                    Q::new(BigInt::from(cell), den.clone()),
                    Q::new(BigInt::from(cell + 1), den.clone()),
                ));
            }
        }
        Ok(MSet::normalize(&raw)?)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "depth": self.depth(),
            "coords": self.coords.iter().map(Coord::to_string).collect::<Vec<_>>(),
        })
    }
}

/// The two shift generators realized as dyadic interval exchanges on a
/// finite window, plus the embedding they act through.
#[derive(Clone, Debug)]
pub struct GeneratorIets {
    pub t1: Iet,
    pub t2: Iet,
    pub embedding: WindowEmbedding,
}

/// Realizes the generator shifts on the extended window
/// `W* = W ∪ aW ∪ bW`: each generator becomes the coordinate relabeling
/// `(n,w) ↦ (n,gw)` on `W`, completed order-preservingly on the leftover
/// coordinates, acting on depth-`|W*|` dyadic atoms. The intertwining
/// `apply(T_g, embed(A)) = embed(shift(g, A))` holds for every cylinder
/// set supported in `W`.
pub fn generator_iets(window: &[Coord]) -> Result<GeneratorIets, BernoulliError> {
    let mut w: Vec<Coord> = window.to_vec();
    w.sort();
    w.dedup();
    let mut star: BTreeSet<Coord> = w.iter().cloned().collect();
    for g in [Gen::A, Gen::B] {
        let gw = ReducedWord::generator(g);
        for c in &w {
            star.insert(Coord::new(c.level, gw.mul(&c.word)));
        }
    }
    let star: Vec<Coord> = star.into_iter().collect();
    let depth = star.len();
    if depth > MAX_WINDOW_DEPTH {
        return Err(BernoulliError::WindowTooLarge {
            depth,
            cap: MAX_WINDOW_DEPTH,
        });
    }
    let embedding = WindowEmbedding::new(star.clone());
    let build = |g: Gen| -> Result<Iet, BernoulliError> {
        let gw = ReducedWord::generator(g);
        // source coordinate at each target position: σ(n,w) = (n,gw) on W,
        // leftovers paired in order
        let mut sigma: Vec<Option<usize>> = vec![None; depth]; // target pos -> source pos
        let pos_of = |c: &Coord| star.iter().position(|x| x == c).expect("coord in star");
        let mut used_targets = vec![false; depth];
        let mut used_sources = vec![false; depth];
        for c in &w {
            let src = pos_of(c);
            let tgt = pos_of(&Coord::new(c.level, gw.mul(&c.word)));
            sigma[tgt] = Some(src);
            used_targets[tgt] = true;
            used_sources[src] = true;
        }
        let free_targets: Vec<usize> = (0..depth).filter(|&i| !used_targets[i]).collect();
        let free_sources: Vec<usize> = (0..depth).filter(|&i| !used_sources[i]).collect();
        for (t, s) in free_targets.iter().zip(&free_sources) {
            sigma[*t] = Some(*s);
        }
        let den = BigInt::one() << depth;
        let mut pieces = Vec::with_capacity(1usize << depth);
        for cell in 0..(1u64 << depth) {
            // target assignment: β(target) = α(σ(target))
            let mut target_cell = 0u64;
            for (tgt, src) in sigma.iter().enumerate() {
                let src = src.expect("sigma is total");
                if cell >> (depth - 1 - src) & 1 == 1 {
                    target_cell |= 1 << (depth - 1 - tgt);
                }
            }
            let lo = Q::new(BigInt::from(cell), den.clone());
            let hi = Q::new(BigInt::from(cell + 1), den.clone());
            let shift = Q::new(
                BigInt::from(target_cell as i128 - cell as i128),
                den.clone(),
            );
            pieces.push((lo, hi, shift));
        }
        Ok(Iet::from_pieces(pieces)?)
    };
    Ok(GeneratorIets {
        t1: build(Gen::A)?,
        t2: build(Gen::B)?,
        embedding,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::q;
    use crate::sampling::SplitMix64;

    fn coord(s: &str) -> Coord {
        Coord::parse(s).unwrap()
    }

    fn word(s: &str) -> ReducedWord {
        ReducedWord::parse(s).unwrap()
    }

    /// Random cylinder set over a pool of coordinates.
    fn random_cyl(rng: &mut SplitMix64, pool: &[Coord], max_coords: usize) -> CylinderSet {
        let k = 1 + rng.below(max_coords as u64) as usize;
        let mut support = Vec::new();
        for _ in 0..k {
            let c = pool[rng.below(pool.len() as u64) as usize].clone();
            if !support.contains(&c) {
                support.push(c);
            }
        }
        let rows = 1u64 << support.len();
        let truth: Vec<u64> = (0..rows).filter(|_| rng.chance(1, 2)).collect();
        CylinderSet::from_truth_indices(support, &truth).unwrap()
    }

    #[test]
    fn single_coordinate_measure() {
        let a = CylinderSet::coordinate_is(coord("0:e"), true);
        assert_eq!(a.measure(), q(1, 2));
        assert!(a.intersect(&a.complement()).unwrap().measure() == q(0, 1));
    }

    #[test]
    fn independent_coordinates_multiply() {
        let a = CylinderSet::coordinate_is(coord("0:e"), true);
        let b = CylinderSet::coordinate_is(coord("0:a"), true);
        assert_eq!(a.intersect(&b).unwrap().measure(), q(1, 4));
    }

    #[test]
    fn canonical_form_drops_irrelevant_coordinates() {
        // truth table over two coordinates that only depends on the first
        let s = CylinderSet::from_truth_indices(
            vec![coord("0:e"), coord("0:a")],
            &[1, 3],
        )
        .unwrap();
        assert_eq!(s.support().len(), 1);
        assert_eq!(s, CylinderSet::coordinate_is(coord("0:e"), true));
    }

    #[test]
    fn shift_moves_supports() {
        let a = CylinderSet::coordinate_is(coord("0:e"), true);
        let sa = shift(&word("a"), &a);
        assert_eq!(sa, CylinderSet::coordinate_is(coord("0:a"), true));
        assert_eq!(shift(&ReducedWord::identity(), &a), a);
        assert_eq!(shift(&word("a'"), &shift(&word("a"), &a)), a);
    }

    #[test]
    fn action_law_on_random_sets() {
        let pool: Vec<Coord> = ["0:e", "0:a", "1:b", "0:ab", "2:e"]
            .iter()
            .map(|s| coord(s))
            .collect();
        let mut rng = SplitMix64::new(77);
        for _ in 0..60 {
            let (l1, l2) = (rng.below(4) as usize, rng.below(4) as usize);
            let g1 = crate::sampling::random_reduced_word(&mut rng, l1);
            let g2 = crate::sampling::random_reduced_word(&mut rng, l2);
            let a = random_cyl(&mut rng, &pool, 3);
            assert_eq!(
                shift(&g1.mul(&g2), &a),
                shift(&g1, &shift(&g2, &a)),
                "action law"
            );
            assert_eq!(shift(&g1, &a).measure(), a.measure());
        }
    }

    #[test]
    fn shift_commutes_with_boolean_ops() {
        let pool: Vec<Coord> = ["0:e", "0:a", "1:e"].iter().map(|s| coord(s)).collect();
        let mut rng = SplitMix64::new(13);
        for _ in 0..40 {
            let lg = 1 + rng.below(3) as usize;
            let g = crate::sampling::random_reduced_word(&mut rng, lg);
            let a = random_cyl(&mut rng, &pool, 2);
            let b = random_cyl(&mut rng, &pool, 2);
            assert_eq!(
                shift(&g, &a.union(&b).unwrap()),
                shift(&g, &a).union(&shift(&g, &b)).unwrap()
            );
            assert_eq!(
                shift(&g, &a.sym_diff(&b).unwrap()),
                shift(&g, &a).sym_diff(&shift(&g, &b)).unwrap()
            );
            assert_eq!(shift(&g, &a.complement()), shift(&g, &a).complement());
        }
    }

    #[test]
    fn independence_of_distinct_columns() {
        let a = CylinderSet::from_truth_indices(
            vec![coord("0:e"), coord("1:e")],
            &[1, 2],
        )
        .unwrap();
        let b = CylinderSet::from_truth_indices(
            vec![coord("0:a"), coord("2:a")],
            &[0, 3],
        )
        .unwrap();
        let rep = independence_check(&a, &b).unwrap();
        assert!(rep.independent);
        assert_eq!(rep.lhs, rep.rhs);
        // non-trivial self-intersection is dependent
        let rep = independence_check(&a, &a).unwrap();
        assert!(!rep.independent);
    }

    #[test]
    fn shifted_copies_are_independent() {
        let a = CylinderSet::from_truth_indices(vec![coord("0:b"), coord("1:b")], &[1]).unwrap();
        let moved = shift(&word("a"), &a); // column ab ≠ b
        let rep = independence_check(&a, &moved).unwrap();
        assert!(rep.independent);
    }

    #[test]
    fn factorization_products() {
        let a = vec![CylinderSet::coordinate_is(coord("0:e"), true)];
        let b = vec![CylinderSet::coordinate_is(coord("0:a"), true)];
        let rep = joint_type_factorization(&a, &b).unwrap();
        assert!(rep.holds);
        for w in rep.joint.weights() {
            assert_eq!(*w, q(1, 4));
        }
        // empty left tuple: trivially true
        let rep = joint_type_factorization(&[], &b).unwrap();
        assert!(rep.holds);
    }

    #[test]
    fn factorization_random_columns() {
        let pool_e: Vec<Coord> = ["0:e", "1:e", "2:e"].iter().map(|s| coord(s)).collect();
        let pool_b: Vec<Coord> = ["0:b", "1:b", "2:b"].iter().map(|s| coord(s)).collect();
        let mut rng = SplitMix64::new(99);
        for _ in 0..30 {
            let na = 1 + rng.below(3) as usize;
            let nb = 1 + rng.below(3) as usize;
            let a: Vec<CylinderSet> =
                (0..na).map(|_| random_cyl(&mut rng, &pool_e, 2)).collect();
            let b: Vec<CylinderSet> =
                (0..nb).map(|_| random_cyl(&mut rng, &pool_b, 2)).collect();
            let rep = joint_type_factorization(&a, &b).unwrap();
            assert!(rep.holds);
        }
    }

    #[test]
    fn factorization_rejects_same_column() {
        let a = vec![CylinderSet::coordinate_is(coord("0:e"), true)];
        assert!(matches!(
            joint_type_factorization(&a, &a),
            Err(BernoulliError::SameColumn(_))
        ));
    }

    #[test]
    fn empty_window_gives_identities() {
        let out = generator_iets(&[]).unwrap();
        assert!(out.t1.is_identity());
        assert!(out.t2.is_identity());
        assert_eq!(out.embedding.depth(), 0);
    }

    #[test]
    fn single_coordinate_intertwining() {
        let w = vec![coord("0:e")];
        let out = generator_iets(&w).unwrap();
        let a = CylinderSet::coordinate_is(coord("0:e"), true);
        assert_eq!(
            out.t1.apply(&out.embedding.embed(&a).unwrap()),
            out.embedding.embed(&shift(&word("a"), &a)).unwrap()
        );
        assert_eq!(
            out.t2.apply(&out.embedding.embed(&a).unwrap()),
            out.embedding.embed(&shift(&word("b"), &a)).unwrap()
        );
    }

    #[test]
    fn two_coordinate_window_exhaustive() {
        let w = vec![coord("0:e"), coord("0:a")];
        let out = generator_iets(&w).unwrap();
        // all 16 cylinder sets supported in the window
        for mask in 0u64..16 {
            let truth: Vec<u64> = (0..4).filter(|i| mask >> i & 1 == 1).collect();
            let a = CylinderSet::from_truth_indices(w.clone(), &truth).unwrap();
            for (iet, g) in [(&out.t1, "a"), (&out.t2, "b")] {
                let lhs = iet.apply(&out.embedding.embed(&a).unwrap());
                let rhs = out.embedding.embed(&shift(&word(g), &a)).unwrap();
                assert_eq!(lhs, rhs, "mask {mask} generator {g}");
            }
        }
    }

    #[test]
    fn embedding_respects_measure() {
        let w = vec![coord("0:e"), coord("0:a"), coord("1:e")];
        let out = generator_iets(&w).unwrap();
        let mut rng = SplitMix64::new(3);
        for _ in 0..20 {
            let a = random_cyl(&mut rng, &w, 3);
            let e = out.embedding.embed(&a).unwrap();
            assert_eq!(e.measure(), a.measure());
        }
    }

    #[test]
    fn window_cap_enforced() {
        let coords: Vec<Coord> = (0..8).map(|i| Coord::new(i, word("e"))).collect();
        // extended window is 3x the size: 24 > 16
        assert!(matches!(
            generator_iets(&coords),
            Err(BernoulliError::WindowTooLarge { .. })
        ));
    }

    #[test]
    fn literal_and_json_round_trip() {
        let s = CylinderSet::from_truth_indices(vec![coord("0:e"), coord("0:a")], &[1, 2]).unwrap();
        let j = s.to_json();
        assert_eq!(j["support"][0], "0:e");
        let parsed = CylinderSet::parse("0:e,0:a|1,2").unwrap();
        assert_eq!(parsed, s);
    }
}

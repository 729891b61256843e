//! Exact combinatorics of the free group on two generators: reduced words,
//! multiplication with cancellation at the junction, Cayley-ball
//! enumeration, and compressed operators on the ball.
//!
//! Words are ordered length-lexicographically with letter order
//! `a < a⁻¹ < b < b⁻¹`; the ball enumeration and hence all operator files
//! are reproducible bit for bit.

use num_rational::Ratio;
use serde_json::json;
use std::collections::HashMap;
use std::fmt;
use std::io::{self, Write};
use thiserror::Error;

/// Radius cap for ball enumeration (about 1.06M words at 12).
pub const MAX_RADIUS: usize = 12;

/// Operator entries: small exact rationals (`1`, `1/4`).
pub type Weight = Ratio<i32>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FreeGroupError {
    #[error("radius {0} exceeds the cap {MAX_RADIUS}")]
    RadiusOverCap(usize),
    #[error("letters contain an adjacent inverse pair at position {0}")]
    NotReduced(usize),
    #[error("bad word literal {0:?}: {1}")]
    Parse(String, String),
}

/// A generator letter of `F₂ = ⟨a,b⟩` or its inverse.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Gen {
    A,
    AInv,
    B,
    BInv,
}

impl Gen {
    pub const ALL: [Gen; 4] = [Gen::A, Gen::AInv, Gen::B, Gen::BInv];

    pub fn inverse(self) -> Gen {
        match self {
            Gen::A => Gen::AInv,
            Gen::AInv => Gen::A,
            Gen::B => Gen::BInv,
            Gen::BInv => Gen::B,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Gen::A => 0,
            Gen::AInv => 1,
            Gen::B => 2,
            Gen::BInv => 3,
        }
    }

    pub fn from_index(i: usize) -> Gen {
        Gen::ALL[i]
    }
}

impl fmt::Display for Gen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gen::A => write!(f, "a"),
            Gen::AInv => write!(f, "a'"),
            Gen::B => write!(f, "b"),
            Gen::BInv => write!(f, "b'"),
        }
    }
}

/// A fully reduced word: no adjacent inverse pairs.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct ReducedWord {
    letters: Vec<Gen>,
}

impl ReducedWord {
    pub fn identity() -> Self {
        ReducedWord::default()
    }

    pub fn generator(g: Gen) -> Self {
        ReducedWord { letters: vec![g] }
    }

    /// Accepts only already-reduced letter sequences.
    pub fn from_letters(letters: Vec<Gen>) -> Result<Self, FreeGroupError> {
        for (i, w) in letters.windows(2).enumerate() {
            if w[0] == w[1].inverse() {
                return Err(FreeGroupError::NotReduced(i));
            }
        }
        Ok(ReducedWord { letters })
    }

    /// Reduces an arbitrary letter sequence by iterated cancellation.
    pub fn reduce(letters: impl IntoIterator<Item = Gen>) -> Self {
        let mut stack: Vec<Gen> = Vec::new();
        for g in letters {
            if stack.last() == Some(&g.inverse()) {
                stack.pop();
            } else {
                stack.push(g);
            }
        }
        ReducedWord { letters: stack }
    }

    pub fn letters(&self) -> &[Gen] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    /// Product with cancellation at the junction only.
    pub fn mul(&self, other: &ReducedWord) -> ReducedWord {
        let mut left = self.letters.clone();
        let mut idx = 0usize;
        while idx < other.letters.len() {
            let g = other.letters[idx];
            if left.last() == Some(&g.inverse()) {
                left.pop();
                idx += 1;
            } else {
                break;
            }
        }
        left.extend_from_slice(&other.letters[idx..]);
        ReducedWord { letters: left }
    }

    pub fn inv(&self) -> ReducedWord {
        ReducedWord {
            letters: self.letters.iter().rev().map(|g| g.inverse()).collect(),
        }
    }

    /// Length-lexicographic order with `a < a⁻¹ < b < b⁻¹`.
    pub fn len_lex_key(&self) -> (usize, Vec<usize>) {
        (
            self.letters.len(),
            self.letters.iter().map(|g| g.index()).collect(),
        )
    }

    /// Literal syntax: `e` for the identity, else letters with `'` marking
    /// inverses, e.g. `ab'a`.
    pub fn parse(text: &str) -> Result<Self, FreeGroupError> {
        let s = text.trim();
        if s.is_empty() || s == "e" {
            return Ok(ReducedWord::identity());
        }
        let mut letters = Vec::new();
        let mut chars = s.chars().peekable();
        while let Some(c) = chars.next() {
            let base = match c {
                'a' => Gen::A,
                'b' => Gen::B,
                other => {
                    return Err(FreeGroupError::Parse(
                        s.to_string(),
                        format!("unexpected character {other:?}"),
                    ))
                }
            };
            let g = if chars.peek() == Some(&'\'') {
                chars.next();
                base.inverse()
            } else {
                base
            };
            letters.push(g);
        }
        ReducedWord::from_letters(letters)
            .map_err(|e| FreeGroupError::Parse(s.to_string(), e.to_string()))
    }
}

impl fmt::Display for ReducedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "e");
        }
        for g in &self.letters {
            write!(f, "{g}")?;
        }
        Ok(())
    }
}

impl PartialOrd for ReducedWord {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ReducedWord {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.len_lex_key().cmp(&other.len_lex_key())
    }
}

/// Packed word for ball storage: 2 bits per letter (first letter lowest),
/// length in the top byte. Supports lengths up to 12.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
struct Packed(u32);

impl Packed {
    const EMPTY: Packed = Packed(0);

    fn len(self) -> usize {
        (self.0 >> 24) as usize
    }

    fn first(self) -> Gen {
        Gen::from_index((self.0 & 0b11) as usize)
    }

    fn push_front(self, g: Gen) -> Packed {
        let len = self.len() as u32;
        let bits = (self.0 & 0x00FF_FFFF) << 2 | g.index() as u32;
        Packed((len + 1) << 24 | (bits & 0x00FF_FFFF))
    }

    fn pop_front(self) -> Packed {
        let len = self.len() as u32;
        Packed((len - 1) << 24 | (self.0 & 0x00FF_FFFF) >> 2)
    }

    /// Left multiplication by `g`, reduced.
    fn left_mul(self, g: Gen) -> Packed {
        if self.len() > 0 && self.first() == g.inverse() {
            self.pop_front()
        } else {
            self.push_front(g)
        }
    }

    fn unpack(self) -> ReducedWord {
        let mut letters = Vec::with_capacity(self.len());
        let mut bits = self.0 & 0x00FF_FFFF;
        for _ in 0..self.len() {
            letters.push(Gen::from_index((bits & 0b11) as usize));
            bits >>= 2;
        }
        ReducedWord { letters }
    }

    fn pack(w: &ReducedWord) -> Option<Packed> {
        if w.len() > 12 {
            return None;
        }
        let mut bits = 0u32;
        for g in w.letters().iter().rev() {
            bits = bits << 2 | g.index() as u32;
        }
        Some(Packed((w.len() as u32) << 24 | bits))
    }
}

/// Indexed enumeration of the ball `B_R` in length-lex order; the identity
/// has index 0.
pub struct Ball {
    radius: usize,
    words: Vec<Packed>,
    index: HashMap<u32, u32>,
}

/// `|B_R| = 1 + 2(3^R − 1)`.
pub fn ball_size(radius: usize) -> u64 {
    1 + 2 * (3u64.pow(radius as u32) - 1)
}

/// `|S_r| = 4·3^(r−1)` for `r ≥ 1`.
pub fn sphere_size(r: usize) -> u64 {
    if r == 0 {
        1
    } else {
        4 * 3u64.pow(r as u32 - 1)
    }
}

pub fn ball(radius: usize) -> Result<Ball, FreeGroupError> {
    if radius > MAX_RADIUS {
        return Err(FreeGroupError::RadiusOverCap(radius));
    }
    // BFS by length, extending on the right with letters in index order;
    // within a level this produces length-lex order. The packed form keeps
    // the FIRST letter in the low bits, so a right-extension of word `w`
    // by `g` is `pack(w) + g at position len`.
    let mut words: Vec<Packed> = Vec::with_capacity(ball_size(radius) as usize);
    words.push(Packed::EMPTY);
    let mut level_start = 0usize;
    for _ in 1..=radius {
        let level_end = words.len();
        for i in level_start..level_end {
            let p = words[i];
            let len = p.len() as u32;
            let last =
                Gen::from_index(((p.0 >> (2 * (len.max(1) - 1))) & 0b11) as usize);
            for g in Gen::ALL {
                if len > 0 && last == g.inverse() {
                    continue;
                }
                let bits = (p.0 & 0x00FF_FFFF) | (g.index() as u32) << (2 * len);
                words.push(Packed((len + 1) << 24 | bits));
            }
        }
        level_start = level_end;
    }
    let mut index = HashMap::with_capacity(words.len());
    for (i, p) in words.iter().enumerate() {
        index.insert(p.0, i as u32);
    }
    Ok(Ball {
        radius,
        words,
        index,
    })
}

impl Ball {
    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn word(&self, i: usize) -> ReducedWord {
        self.words[i].unpack()
    }

    pub fn word_len(&self, i: usize) -> usize {
        self.words[i].len()
    }

    pub fn index_of(&self, w: &ReducedWord) -> Option<usize> {
        Packed::pack(w).and_then(|p| self.index.get(&p.0).map(|&i| i as usize))
    }

    /// Index of `g·w_i`, if it stays in the ball.
    pub fn left_mul_index(&self, g: Gen, i: usize) -> Option<usize> {
        let p = self.words[i].left_mul(g);
        self.index.get(&p.0).map(|&i| i as usize)
    }
}

/// Compressed operator on `ℓ²(B_R)` in row-major sparse form.
pub struct SparseOperator {
    radius: usize,
    dim: usize,
    row_ptr: Vec<u32>,
    cols: Vec<u32>,
    vals: Vec<Weight>,
    symmetric: bool,
}

impl SparseOperator {
    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, Weight)> + '_ {
        let lo = self.row_ptr[i] as usize;
        let hi = self.row_ptr[i + 1] as usize;
        self.cols[lo..hi]
            .iter()
            .zip(&self.vals[lo..hi])
            .map(|(&c, &v)| (c as usize, v))
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn row_sum(&self, i: usize) -> Weight {
        self.row(i).map(|(_, v)| v).sum()
    }

    /// Exact symmetry check of the rational entries.
    pub fn verify_symmetric(&self) -> bool {
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                let back = self.row(j).find(|&(c, _)| c == i).map(|(_, w)| w);
                if back != Some(v) {
                    return false;
                }
            }
        }
        true
    }

    /// Entry values as `f64` for the spectral iteration.
    pub fn values_f64(&self) -> Vec<f64> {
        self.vals
            .iter()
            .map(|v| *v.numer() as f64 / *v.denom() as f64)
            .collect()
    }

    /// `out = M·x` with precomputed `f64` values (from [`Self::values_f64`]).
    #[allow(clippy::needless_range_loop)]
    pub fn matvec(&self, vals_f64: &[f64], x: &[f64], out: &mut [f64]) {
        for i in 0..self.dim {
            let lo = self.row_ptr[i] as usize;
            let hi = self.row_ptr[i + 1] as usize;
            let mut acc = 0.0;
            for k in lo..hi {
                acc += vals_f64[k] * x[self.cols[k] as usize];
            }
            out[i] = acc;
        }
    }

    /// Coordinate-list export: a JSON header line with `radius`, `dim`,
    /// `symmetric`, then one `i j num/den` line per entry.
    pub fn write_coo(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(
            w,
            "{}",
            json!({"radius": self.radius, "dim": self.dim, "symmetric": self.symmetric})
        )?;
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                writeln!(w, "{i} {j} {v}")?;
            }
        }
        Ok(())
    }
}

fn build_operator(
    ball: &Ball,
    radius: usize,
    symmetric: bool,
    neighbors: impl Fn(usize) -> Vec<(usize, Weight)>,
) -> SparseOperator {
    let dim = ball.len();
    let mut row_ptr = Vec::with_capacity(dim + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    row_ptr.push(0u32);
    for i in 0..dim {
        let mut row = neighbors(i);
        row.sort_by_key(|&(c, _)| c);
        for (c, v) in row {
            cols.push(c as u32);
            vals.push(v);
        }
        row_ptr.push(cols.len() as u32);
    }
    SparseOperator {
        radius,
        dim,
        row_ptr,
        cols,
        vals,
        symmetric,
    }
}

/// The compressed regular-representation operator of a generator:
/// `(π(g)ξ)(w) = ξ(g⁻¹w)`, entries dropped when `g⁻¹w` leaves the ball.
pub fn generator_operator(g: Gen, ball: &Ball) -> SparseOperator {
    let ginv = g.inverse();
    build_operator(ball, ball.radius(), false, move |i| {
        ball.left_mul_index(ginv, i)
            .map(|j| (j, Weight::new(1, 1)))
            .into_iter()
            .collect()
    })
}

/// The compressed Markov operator `(π(a)+π(a⁻¹)+π(b)+π(b⁻¹))/4`.
pub fn markov_operator(ball: &Ball) -> SparseOperator {
    build_operator(ball, ball.radius(), true, move |i| {
        Gen::ALL
            .iter()
            .filter_map(|&g| {
                ball.left_mul_index(g.inverse(), i)
                    .map(|j| (j, Weight::new(1, 4)))
            })
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> ReducedWord {
        ReducedWord::parse(s).unwrap()
    }

    #[test]
    fn junction_cancellation() {
        assert_eq!(w("ab").mul(&w("b'a")), w("aa"));
        let x = w("ab'ab");
        assert!(x.mul(&x.inv()).is_identity());
        assert_eq!(
            ReducedWord::reduce([Gen::A, Gen::AInv, Gen::B]),
            w("b")
        );
    }

    #[test]
    fn from_letters_validates() {
        assert!(ReducedWord::from_letters(vec![Gen::A, Gen::AInv]).is_err());
        assert!(ReducedWord::from_letters(vec![Gen::A, Gen::B, Gen::BInv]).is_err());
    }

    #[test]
    fn ball_sizes_match_closed_form() {
        for r in 0..=6 {
            let b = ball(r).unwrap();
            assert_eq!(b.len() as u64, ball_size(r), "radius {r}");
        }
        assert_eq!(ball_size(0), 1);
        assert_eq!(ball_size(2), 17);
        assert_eq!(ball_size(12), 1_062_881);
    }

    #[test]
    fn sphere_sizes_match_enumeration() {
        let b = ball(5).unwrap();
        let mut counts = [0u64; 6];
        for i in 0..b.len() {
            counts[b.word_len(i)] += 1;
        }
        for (r, &c) in counts.iter().enumerate() {
            assert_eq!(c, sphere_size(r), "sphere {r}");
        }
    }

    #[test]
    fn enumeration_is_length_lex() {
        let b = ball(3).unwrap();
        let words: Vec<ReducedWord> = (0..b.len()).map(|i| b.word(i)).collect();
        let mut sorted = words.clone();
        sorted.sort();
        assert_eq!(words, sorted);
        assert_eq!(words[0], ReducedWord::identity());
        assert_eq!(words[1], w("a"));
        assert_eq!(words[4], w("b'"));
        assert_eq!(words[5], w("aa"));
    }

    #[test]
    fn index_round_trip() {
        let b = ball(4).unwrap();
        for i in (0..b.len()).step_by(7) {
            assert_eq!(b.index_of(&b.word(i)), Some(i));
        }
        assert_eq!(b.index_of(&w("aaaaa")), None);
    }

    #[test]
    fn markov_rows() {
        let b = ball(3).unwrap();
        let m = markov_operator(&b);
        // identity row: four entries 1/4 to the length-1 words
        let row0: Vec<(usize, Weight)> = m.row(0).collect();
        assert_eq!(row0.len(), 4);
        for (j, v) in &row0 {
            assert_eq!(b.word_len(*j), 1);
            assert_eq!(*v, Weight::new(1, 4));
        }
        // row sums: 1 exactly on the interior, 1/4 on the boundary
        for i in 0..m.dim() {
            let expect = if b.word_len(i) <= 2 {
                Weight::new(1, 1)
            } else {
                Weight::new(1, 4)
            };
            assert_eq!(m.row_sum(i), expect, "row {i}");
        }
        assert!(m.verify_symmetric());
    }

    #[test]
    fn markov_zero_radius() {
        let b = ball(0).unwrap();
        let m = markov_operator(&b);
        assert_eq!(m.nnz(), 0);
    }

    #[test]
    fn generator_applied_to_delta() {
        let b = ball(2).unwrap();
        let pa = generator_operator(Gen::A, &b);
        // (π(a)δ_e)(w) = δ_e(a⁻¹w) = 1 iff w = a
        let mut x = vec![0.0; b.len()];
        x[0] = 1.0;
        let vals = pa.values_f64();
        let mut y = vec![0.0; b.len()];
        pa.matvec(&vals, &x, &mut y);
        let a_idx = b.index_of(&w("a")).unwrap();
        for (i, &v) in y.iter().enumerate() {
            assert_eq!(v, if i == a_idx { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn group_laws_random() {
        let mut rng = crate::sampling::SplitMix64::new(5);
        for _ in 0..1000 {
            let (lx, ly, lz) = (rng.below(6) as usize, rng.below(6) as usize, rng.below(6) as usize);
            let x = crate::sampling::random_reduced_word(&mut rng, lx);
            let y = crate::sampling::random_reduced_word(&mut rng, ly);
            let z = crate::sampling::random_reduced_word(&mut rng, lz);
            assert_eq!(x.mul(&y).mul(&z), x.mul(&y.mul(&z)));
            assert!(x.mul(&x.inv()).is_identity());
            assert!(x.inv().mul(&x).is_identity());
        }
    }

    #[test]
    fn word_parse_display_round_trip() {
        for s in ["e", "a", "b'", "ab'a", "aabb'"] {
            if let Ok(v) = ReducedWord::parse(s) {
                assert_eq!(ReducedWord::parse(&v.to_string()).unwrap(), v);
            }
        }
        assert!(ReducedWord::parse("aa'").is_err());
        assert!(ReducedWord::parse("xyz").is_err());
    }
}

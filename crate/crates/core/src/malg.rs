//! The measure algebra of `([0,1), λ)` restricted to finite unions of
//! rational half-open intervals, together with its measure-preserving
//! automorphisms realized as interval exchange transformations.
//!
//! Half-open intervals `[lo, hi)` make partitions exact and give every set a
//! unique canonical form; endpoints carry no measure, so identifying sets up
//! to null sets costs nothing here. The rational-interval sets form a dense
//! (not complete) subalgebra of the full measure algebra: every claim in
//! this crate is stated on that subalgebra, with explicit tolerances where
//! a statement about the completion is approximated. Everything in this
//! module is immutable after construction and all operations are pure.

use crate::rat::{fmt_q, parse_q, q0, q1, Q};
use num_traits::Zero;
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MalgError {
    #[error("interval endpoint {0} lies outside [0,1]")]
    EndpointOutOfRange(String),
    #[error("interval [{0}, {1}) has lo > hi")]
    InvertedInterval(String, String),
    #[error("requested slice of measure {0} exceeds the set's measure {1}")]
    SliceTooLarge(String, String),
    #[error("sets do not form a partition of [0,1): {0}")]
    NotAPartition(String),
    #[error("partition blocks {0} have measures {1} and {2}")]
    MeasureMismatch(usize, String, String),
    #[error("not an interval exchange: {0}")]
    BadIet(String),
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("bad JSON for {what}: {msg}")]
    Json { what: &'static str, msg: String },
}

fn parse_err(pos: usize, msg: impl Into<String>) -> MalgError {
    MalgError::Parse {
        pos,
        msg: msg.into(),
    }
}

/// An element of the measure algebra: a canonical finite union of rational
/// half-open subintervals of `[0,1)`.
///
/// Canonical form: intervals non-empty, pairwise disjoint, sorted, and never
/// touching at an endpoint. Two `MSet`s are equal as sets of points iff they
/// are equal componentwise.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MSet {
    intervals: Vec<(Q, Q)>,
}

impl MSet {
    pub fn empty() -> Self {
        MSet { intervals: vec![] }
    }

    /// The whole space `[0,1)`.
    pub fn full() -> Self {
        MSet {
            intervals: vec![(q0(), q1())],
        }
    }

    /// Single interval `[lo, hi)`; `lo == hi` gives the empty set.
    pub fn interval(lo: Q, hi: Q) -> Result<Self, MalgError> {
        Self::normalize(&[(lo, hi)])
    }

    /// Canonicalizes an arbitrary list of rational interval pairs: drops
    /// empty intervals, sorts, and merges overlapping or touching ones.
    pub fn normalize(raw: &[(Q, Q)]) -> Result<Self, MalgError> {
        let (zero, one) = (q0(), q1());
        let mut ivs: Vec<(Q, Q)> = Vec::with_capacity(raw.len());
        for (lo, hi) in raw {
            if *lo < zero || *lo > one || *hi < zero || *hi > one {
                let bad = if *lo < zero || *lo > one { lo } else { hi };
                return Err(MalgError::EndpointOutOfRange(fmt_q(bad)));
            }
            if lo > hi {
                return Err(MalgError::InvertedInterval(fmt_q(lo), fmt_q(hi)));
            }
            if lo < hi {
                ivs.push((lo.clone(), hi.clone()));
            }
        }
        ivs.sort();
        let mut out: Vec<(Q, Q)> = Vec::with_capacity(ivs.len());
        for (lo, hi) in ivs {
            match out.last_mut() {
                Some((_, top)) if *top >= lo => {
                    if hi > *top {
                        *top = hi;
                    }
                }
                _ => out.push((lo, hi)),
            }
        }
        Ok(MSet { intervals: out })
    }

    pub fn intervals(&self) -> &[(Q, Q)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Lebesgue measure, exact.
    pub fn measure(&self) -> Q {
        self.intervals
            .iter()
            .fold(q0(), |acc, (lo, hi)| acc + (hi - lo))
    }

    /// Membership of a point (left endpoints in, right endpoints out).
    pub fn contains_point(&self, x: &Q) -> bool {
        let idx = self.intervals.partition_point(|(lo, _)| lo <= x);
        idx > 0 && *x < self.intervals[idx - 1].1
    }

    fn endpoints_into(&self, cuts: &mut Vec<Q>) {
        for (lo, hi) in &self.intervals {
            cuts.push(lo.clone());
            cuts.push(hi.clone());
        }
    }

    fn sweep(a: &MSet, b: &MSet, keep: impl Fn(bool, bool) -> bool) -> MSet {
        let mut cuts = vec![q0(), q1()];
        a.endpoints_into(&mut cuts);
        b.endpoints_into(&mut cuts);
        cuts.sort();
        cuts.dedup();
        let mut out: Vec<(Q, Q)> = Vec::new();
        for w in cuts.windows(2) {
            let (lo, hi) = (&w[0], &w[1]);
            if keep(a.contains_point(lo), b.contains_point(lo)) {
                match out.last_mut() {
                    Some((_, top)) if top == lo => *top = hi.clone(),
                    _ => out.push((lo.clone(), hi.clone())),
                }
            }
        }
        MSet { intervals: out }
    }

    pub fn union(&self, other: &MSet) -> MSet {
        MSet::sweep(self, other, |a, b| a || b)
    }

    pub fn intersect(&self, other: &MSet) -> MSet {
        MSet::sweep(self, other, |a, b| a && b)
    }

    pub fn sym_diff(&self, other: &MSet) -> MSet {
        MSet::sweep(self, other, |a, b| a != b)
    }

    pub fn difference(&self, other: &MSet) -> MSet {
        MSet::sweep(self, other, |a, b| a && !b)
    }

    pub fn complement(&self) -> MSet {
        MSet::sweep(&MSet::full(), self, |a, b| a && !b)
    }

    /// The metric `d(A,B) = μ(A △ B)`.
    pub fn dist(&self, other: &MSet) -> Q {
        self.sym_diff(other).measure()
    }

    /// The leftmost piece of this set with the given measure.
    pub fn prefix_of_measure(&self, want: &Q) -> Result<MSet, MalgError> {
        if want.is_zero() {
            return Ok(MSet::empty());
        }
        if *want < q0() {
            return Err(MalgError::SliceTooLarge(fmt_q(want), fmt_q(&self.measure())));
        }
        let mut rest = want.clone();
        let mut out: Vec<(Q, Q)> = Vec::new();
        for (lo, hi) in &self.intervals {
            let len = hi - lo;
            if len < rest {
                out.push((lo.clone(), hi.clone()));
                rest -= len;
            } else {
                out.push((lo.clone(), lo + rest));
                return Ok(MSet { intervals: out });
            }
        }
        Err(MalgError::SliceTooLarge(fmt_q(want), fmt_q(&self.measure())))
    }

    /// Literal syntax `[0,1/3)u[1/2,1)`; the empty set prints as `[0,0)`.
    pub fn literal(&self) -> String {
        if self.intervals.is_empty() {
            return "[0,0)".to_string();
        }
        self.intervals
            .iter()
            .map(|(lo, hi)| format!("[{},{})", fmt_q(lo), fmt_q(hi)))
            .collect::<Vec<_>>()
            .join("u")
    }

    pub fn parse(text: &str) -> Result<Self, MalgError> {
        let bytes = text.as_bytes();
        let mut pos = 0usize;
        let mut raw: Vec<(Q, Q)> = Vec::new();
        let skip_ws = |pos: &mut usize| {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
        };
        loop {
            skip_ws(&mut pos);
            if pos >= bytes.len() || bytes[pos] != b'[' {
                return Err(parse_err(pos, "expected '['"));
            }
            pos += 1;
            let comma = text[pos..]
                .find(',')
                .map(|i| pos + i)
                .ok_or_else(|| parse_err(pos, "expected ',' in interval"))?;
            let lo = parse_q(&text[pos..comma]).map_err(|m| parse_err(pos, m))?;
            pos = comma + 1;
            let close = text[pos..]
                .find(')')
                .map(|i| pos + i)
                .ok_or_else(|| parse_err(pos, "expected ')' closing interval"))?;
            let hi = parse_q(&text[pos..close]).map_err(|m| parse_err(pos, m))?;
            pos = close + 1;
            raw.push((lo, hi));
            skip_ws(&mut pos);
            if pos >= bytes.len() {
                break;
            }
            if bytes[pos] == b'u' || bytes[pos] == b'U' {
                pos += 1;
            } else {
                return Err(parse_err(pos, "expected 'u' between intervals"));
            }
        }
        MSet::normalize(&raw)
    }

    /// JSON form `{"intervals": [["0","1/3"], ...]}` with rational strings.
    pub fn to_json(&self) -> Value {
        json!({
            "intervals": self
                .intervals
                .iter()
                .map(|(lo, hi)| json!([fmt_q(lo), fmt_q(hi)]))
                .collect::<Vec<_>>()
        })
    }

    pub fn from_json(v: &Value) -> Result<Self, MalgError> {
        let err = |msg: String| MalgError::Json { what: "MSet", msg };
        let arr = v
            .get("intervals")
            .and_then(Value::as_array)
            .ok_or_else(|| err("missing \"intervals\" array".into()))?;
        let mut raw = Vec::with_capacity(arr.len());
        for pair in arr {
            let ps = pair
                .as_array()
                .filter(|p| p.len() == 2)
                .ok_or_else(|| err("interval must be a two-element array".into()))?;
            let lo = ps[0]
                .as_str()
                .ok_or_else(|| err("endpoints must be strings".into()))
                .and_then(|s| parse_q(s).map_err(err))?;
            let hi = ps[1]
                .as_str()
                .ok_or_else(|| err("endpoints must be strings".into()))
                .and_then(|s| parse_q(s).map_err(err))?;
            raw.push((lo, hi));
        }
        MSet::normalize(&raw)
    }
}

/// A measure-preserving automorphism witness: an interval exchange
/// transformation, i.e. a piecewise rational translation of `[0,1)`.
///
/// Canonical form: pieces sorted by source, adjacent pieces with equal shift
/// merged. Equality of `Iet`s is equality as maps of `[0,1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Iet {
    /// `(lo, hi, shift)`: maps `[lo, hi)` to `[lo+shift, hi+shift)`.
    pieces: Vec<(Q, Q, Q)>,
}

impl Iet {
    pub fn identity() -> Self {
        Iet {
            pieces: vec![(q0(), q1(), q0())],
        }
    }

    /// Rotation `x ↦ x + r mod 1`.
    pub fn rotation(r: &Q) -> Self {
        let r = r - r.floor();
        if r.is_zero() {
            return Iet::identity();
        }
        let split = q1() - &r;
        Iet::from_pieces(vec![
            (q0(), split.clone(), r.clone()),
            (split, q1(), r - q1()),
        ])
        .expect("rotation pieces form an exchange")
    }

    /// Validates that `raw` describes a bijective piecewise translation of
    /// `[0,1)` and puts it in canonical form. Pieces need not be maximal and
    /// may arrive in any order; empty pieces are dropped.
    pub fn from_pieces(raw: Vec<(Q, Q, Q)>) -> Result<Self, MalgError> {
        let (zero, one) = (q0(), q1());
        let mut ps: Vec<(Q, Q, Q)> = Vec::with_capacity(raw.len());
        for (lo, hi, s) in raw {
            if lo > hi {
                return Err(MalgError::InvertedInterval(fmt_q(&lo), fmt_q(&hi)));
            }
            if lo == hi {
                continue;
            }
            if lo < zero || hi > one {
                return Err(MalgError::BadIet(format!(
                    "source [{},{}) outside [0,1)",
                    fmt_q(&lo),
                    fmt_q(&hi)
                )));
            }
            if &lo + &s < zero || &hi + &s > one {
                return Err(MalgError::BadIet(format!(
                    "target [{},{}) outside [0,1)",
                    fmt_q(&(&lo + &s)),
                    fmt_q(&(&hi + &s))
                )));
            }
            ps.push((lo, hi, s));
        }
        ps.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
        // sources must tile [0,1) exactly
        let mut cursor = zero.clone();
        for (lo, hi, _) in &ps {
            if *lo != cursor {
                return Err(MalgError::BadIet(format!(
                    "sources leave a gap or overlap at {}",
                    fmt_q(&cursor)
                )));
            }
            cursor = hi.clone();
        }
        if cursor != one {
            return Err(MalgError::BadIet(format!(
                "sources stop at {} instead of 1",
                fmt_q(&cursor)
            )));
        }
        // targets must tile [0,1) exactly
        let mut targets: Vec<(Q, Q)> = ps
            .iter()
            .map(|(lo, hi, s)| (lo + s, hi + s))
            .collect();
        targets.sort();
        let mut cursor = zero;
        for (lo, hi) in &targets {
            if *lo != cursor {
                return Err(MalgError::BadIet(format!(
                    "targets leave a gap or overlap at {}",
                    fmt_q(&cursor)
                )));
            }
            cursor = hi.clone();
        }
        // merge adjacent pieces translated by the same amount
        let mut merged: Vec<(Q, Q, Q)> = Vec::with_capacity(ps.len());
        for (lo, hi, s) in ps {
            match merged.last_mut() {
                Some((_, top, ts)) if *top == lo && *ts == s => *top = hi,
                _ => merged.push((lo, hi, s)),
            }
        }
        Ok(Iet { pieces: merged })
    }

    pub fn pieces(&self) -> &[(Q, Q, Q)] {
        &self.pieces
    }

    pub fn is_identity(&self) -> bool {
        self.pieces.len() == 1 && self.pieces[0].2.is_zero()
    }

    /// Image of a point.
    pub fn apply_point(&self, x: &Q) -> Q {
        for (lo, hi, s) in &self.pieces {
            if x >= lo && x < hi {
                return x + s;
            }
        }
        // canonical pieces tile [0,1); only points outside land here
        x.clone()
    }

    /// Image of a set; preserves measure exactly.
    pub fn apply(&self, a: &MSet) -> MSet {
        let mut out: Vec<(Q, Q)> = Vec::new();
        for (lo, hi, s) in &self.pieces {
            for (alo, ahi) in a.intervals() {
                let c = alo.max(lo);
                let d = ahi.min(hi);
                if c < d {
                    out.push((c + s, d + s));
                }
            }
        }
        MSet::normalize(&out).expect("translated pieces stay inside [0,1]")
    }

    /// `self ∘ other`: first `other`, then `self`.
    pub fn compose(&self, other: &Iet) -> Iet {
        let mut raw: Vec<(Q, Q, Q)> = Vec::new();
        for (lo, hi, s) in &other.pieces {
            let (ilo, ihi) = (lo + s, hi + s);
            for (l2, h2, s2) in &self.pieces {
                let c = ilo.clone().max(l2.clone());
                let d = ihi.clone().min(h2.clone());
                if c < d {
                    raw.push((&c - s, &d - s, s + s2));
                }
            }
        }
        Iet::from_pieces(raw).expect("composition of exchanges is an exchange")
    }

    pub fn invert(&self) -> Iet {
        let raw = self
            .pieces
            .iter()
            .map(|(lo, hi, s)| (lo + s, hi + s, -s))
            .collect();
        Iet::from_pieces(raw).expect("inverse of an exchange is an exchange")
    }

    /// Literal syntax `[0,3/4)->1/4,[3/4,1)->-3/4`.
    pub fn literal(&self) -> String {
        self.pieces
            .iter()
            .map(|(lo, hi, s)| format!("[{},{})->{}", fmt_q(lo), fmt_q(hi), fmt_q(s)))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn parse(text: &str) -> Result<Self, MalgError> {
        let mut raw: Vec<(Q, Q, Q)> = Vec::new();
        let mut pos = 0usize;
        // interval sources contain a comma themselves, so pieces are
        // delimited by `,[` rather than split naively on `,`
        let mut start = 0usize;
        let bytes = text.as_bytes();
        while start < bytes.len() {
            let end = match text[start..].find(")->") {
                Some(i) => start + i,
                None => return Err(parse_err(start, "expected ')->' in piece")),
            };
            let src = &text[start..end + 1];
            let src_set = MSet::parse(src)?;
            if src_set.intervals().len() != 1 {
                return Err(parse_err(start, "piece source must be one interval"));
            }
            pos = end + 3;
            let stop = text[pos..]
                .find(",[")
                .map(|i| pos + i)
                .unwrap_or(text.len());
            let shift = parse_q(&text[pos..stop]).map_err(|m| parse_err(pos, m))?;
            let (lo, hi) = src_set.intervals()[0].clone();
            raw.push((lo, hi, shift));
            start = if stop < text.len() { stop + 1 } else { text.len() };
        }
        if raw.is_empty() {
            return Err(parse_err(pos, "empty interval exchange literal"));
        }
        Iet::from_pieces(raw)
    }

    /// JSON form `{"pieces":[{"src":["0","3/4"],"shift":"1/4"}, ...]}`.
    pub fn to_json(&self) -> Value {
        json!({
            "pieces": self
                .pieces
                .iter()
                .map(|(lo, hi, s)| json!({"src": [fmt_q(lo), fmt_q(hi)], "shift": fmt_q(s)}))
                .collect::<Vec<_>>()
        })
    }

    pub fn from_json(v: &Value) -> Result<Self, MalgError> {
        let err = |msg: String| MalgError::Json { what: "Iet", msg };
        let arr = v
            .get("pieces")
            .and_then(Value::as_array)
            .ok_or_else(|| err("missing \"pieces\" array".into()))?;
        let mut raw = Vec::with_capacity(arr.len());
        for piece in arr {
            let src = piece
                .get("src")
                .and_then(Value::as_array)
                .filter(|p| p.len() == 2)
                .ok_or_else(|| err("piece needs a two-element \"src\"".into()))?;
            let lo = src[0]
                .as_str()
                .ok_or_else(|| err("src endpoints must be strings".into()))
                .and_then(|s| parse_q(s).map_err(err))?;
            let hi = src[1]
                .as_str()
                .ok_or_else(|| err("src endpoints must be strings".into()))
                .and_then(|s| parse_q(s).map_err(err))?;
            let shift = piece
                .get("shift")
                .and_then(Value::as_str)
                .ok_or_else(|| err("piece needs a \"shift\" string".into()))
                .and_then(|s| parse_q(s).map_err(err))?;
            raw.push((lo, hi, shift));
        }
        Iet::from_pieces(raw)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::q;

    fn ms(s: &str) -> MSet {
        MSet::parse(s).unwrap()
    }

    #[test]
    fn normalize_merges_adjacent() {
        let got = MSet::normalize(&[(q(0, 1), q(1, 2)), (q(1, 2), q(3, 4))]).unwrap();
        assert_eq!(got, ms("[0,3/4)"));
    }

    #[test]
    fn normalize_drops_empty() {
        let got = MSet::normalize(&[(q(1, 4), q(1, 4))]).unwrap();
        assert_eq!(got, MSet::empty());
    }

    #[test]
    fn normalize_sorts() {
        let got = MSet::normalize(&[(q(1, 3), q(1, 1)), (q(0, 1), q(1, 4))]).unwrap();
        assert_eq!(got, ms("[0,1/4)u[1/3,1)"));
    }

    #[test]
    fn normalize_rejects_bad_endpoints() {
        assert!(matches!(
            MSet::normalize(&[(q(-1, 2), q(1, 2))]),
            Err(MalgError::EndpointOutOfRange(_))
        ));
        assert!(matches!(
            MSet::normalize(&[(q(1, 2), q(1, 4))]),
            Err(MalgError::InvertedInterval(..))
        ));
        assert!(matches!(
            MSet::normalize(&[(q(1, 2), q(5, 4))]),
            Err(MalgError::EndpointOutOfRange(_))
        ));
    }

    #[test]
    fn intersection_example() {
        // [0,1/3) ∩ [1/4,1) = [1/4,1/3), of measure 1/12
        let a = ms("[0,1/3)");
        let b = ms("[1/4,1)");
        let i = a.intersect(&b);
        assert_eq!(i, ms("[1/4,1/3)"));
        assert_eq!(i.measure(), q(1, 12));
    }

    #[test]
    fn sym_diff_self_is_empty() {
        let a = ms("[0,1/3)u[1/2,2/3)");
        assert!(a.sym_diff(&a).is_empty());
    }

    #[test]
    fn complement_example() {
        assert_eq!(ms("[0,1/4)").complement(), ms("[1/4,1)"));
    }

    #[test]
    fn dist_examples() {
        let a = ms("[0,1/2)");
        assert_eq!(a.dist(&a), q(0, 1));
        assert_eq!(a.dist(&ms("[1/4,3/4)")), q(1, 2));
    }

    #[test]
    fn rotation_acts_by_translation() {
        let r = Iet::rotation(&q(1, 4));
        assert_eq!(r.apply(&ms("[0,1/2)")), ms("[1/4,3/4)"));
    }

    #[test]
    fn rotation_inverse() {
        let r = Iet::rotation(&q(1, 4));
        assert_eq!(r.invert(), Iet::rotation(&q(3, 4)));
        assert!(r.compose(&r.invert()).is_identity());
        assert!(r.invert().compose(&r).is_identity());
    }

    #[test]
    fn compose_is_pointwise_composition() {
        let r = Iet::rotation(&q(1, 3));
        let s = Iet::rotation(&q(1, 4));
        let c = r.compose(&s);
        for k in 0..12 {
            let x = q(k, 12);
            assert_eq!(c.apply_point(&x), r.apply_point(&s.apply_point(&x)));
        }
        assert_eq!(c, Iet::rotation(&q(7, 12)));
    }

    #[test]
    fn apply_respects_composition_on_sets() {
        let r = Iet::rotation(&q(1, 3));
        let s = Iet::rotation(&q(5, 8));
        let a = ms("[0,1/5)u[1/2,7/8)");
        assert_eq!(r.compose(&s).apply(&a), r.apply(&s.apply(&a)));
    }

    #[test]
    fn iet_rejects_non_partition() {
        assert!(Iet::from_pieces(vec![(q(0, 1), q(1, 2), q(0, 1))]).is_err());
        assert!(Iet::from_pieces(vec![
            (q(0, 1), q(1, 2), q(0, 1)),
            (q(1, 2), q(1, 1), q(1, 4)),
        ])
        .is_err());
    }

    #[test]
    fn literals_round_trip() {
        for s in ["[0,0)", "[0,1)", "[0,1/3)u[1/2,1)"] {
            let v = ms(s);
            assert_eq!(MSet::parse(&v.literal()).unwrap(), v);
        }
        let r = Iet::rotation(&q(1, 4));
        assert_eq!(Iet::parse(&r.literal()).unwrap(), r);
        let id = Iet::identity();
        assert_eq!(Iet::parse(&id.literal()).unwrap(), id);
    }

    #[test]
    fn json_round_trip() {
        let a = ms("[0,1/3)u[1/2,1)");
        assert_eq!(MSet::from_json(&a.to_json()).unwrap(), a);
        let r = Iet::rotation(&q(2, 7));
        assert_eq!(Iet::from_json(&r.to_json()).unwrap(), r);
    }

    #[test]
    fn prefix_slicing() {
        let a = ms("[0,1/4)u[1/2,3/4)");
        assert_eq!(a.prefix_of_measure(&q(3, 8)).unwrap(), ms("[0,1/4)u[1/2,5/8)"));
        assert_eq!(a.prefix_of_measure(&q(0, 1)).unwrap(), MSet::empty());
        assert!(a.prefix_of_measure(&q(2, 3)).is_err());
    }
}

//! Generic discrete back-and-forth engine with pluggable structures,
//! instantiated for the random graph in its BIT presentation and for the
//! dense linear order on the rationals.
//!
//! The BIT graph joins `i < j` exactly when bit `i` of `j` is set. Its
//! extension property has a total constructive witness — connect to all of
//! `S₁` by summing `2^i` over `S₁`, avoid `S₂` by construction — but the
//! witnesses can out-grow any fixed-width integer within a few stages (a
//! witness cites earlier witnesses as bit positions, so values tower).
//! Vertices are therefore hereditary bit sets: a vertex is the set of its
//! own bit positions, which are themselves vertices. Numeric comparison,
//! adjacency, and witness construction all stay exact at any height.

use crate::rat::{fmt_q, Q};
use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde_json::{json, Value};
use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BackForthError {
    #[error("adjacency is undefined on a loop (vertex {0})")]
    LoopQuery(String),
    #[error("witness constraint sets overlap at {0}")]
    OverlappingConstraints(String),
    #[error("incompatible cut: {0} is not below {1}")]
    IncompatibleCut(String, String),
    #[error("inconsistent relation pattern for {0} (an order relates each pair one way)")]
    InconsistentPattern(String),
    #[error("{side} structure failed to extend at stage {stage}: {reason}; constraints: {constraints:?}")]
    WitnessFailure {
        side: &'static str,
        stage: usize,
        reason: String,
        constraints: Vec<String>,
    },
    #[error("induced-substructure check failed at stage {stage} on pair ({left}, {right})")]
    VerificationFailed {
        stage: usize,
        left: String,
        right: String,
    },
}

// ---------------------------------------------------------------------------
// hereditary vertices for the BIT graph
// ---------------------------------------------------------------------------

/// A BIT-graph vertex: the (finite) set of its bit positions, which are
/// themselves vertices. Numerically, `v = Σ_{u ∈ bits(v)} 2^u`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Vertex(Arc<BTreeSet<Vertex>>);

impl Vertex {
    pub fn from_bits(bits: BTreeSet<Vertex>) -> Vertex {
        Vertex(Arc::new(bits))
    }

    pub fn from_u64(n: u64) -> Vertex {
        let mut bits = BTreeSet::new();
        for i in 0..64 {
            if n >> i & 1 == 1 {
                bits.insert(Vertex::from_u64(i));
            }
        }
        Vertex(Arc::new(bits))
    }

    pub fn bits(&self) -> &BTreeSet<Vertex> {
        &self.0
    }

    pub fn to_u64(&self) -> Option<u64> {
        let mut acc: u64 = 0;
        for b in self.0.iter() {
            let pos = b.to_u64()?;
            if pos >= 64 {
                return None;
            }
            acc = acc.checked_add(1u64.checked_shl(pos as u32)?)?;
        }
        Some(acc)
    }

    /// Numeric value when every bit position is a small natural.
    pub fn to_biguint(&self) -> Option<BigUint> {
        let mut acc = BigUint::zero();
        for b in self.0.iter() {
            let pos = b.to_u64()?;
            if pos >= 4096 {
                return None;
            }
            acc |= BigUint::one() << pos;
        }
        Some(acc)
    }
}

impl PartialOrd for Vertex {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Vertex {
    /// Numeric order: walk both bit sets from the largest position down;
    /// the first difference decides, and a leftover (smaller) bit makes
    /// its owner larger.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use std::cmp::Ordering;
        if Arc::ptr_eq(&self.0, &other.0) {
            return Ordering::Equal;
        }
        let mut a = self.0.iter().rev();
        let mut b = other.0.iter().rev();
        loop {
            match (a.next(), b.next()) {
                (None, None) => return Ordering::Equal,
                (None, Some(_)) => return Ordering::Less,
                (Some(_), None) => return Ordering::Greater,
                (Some(x), Some(y)) => match x.cmp(y) {
                    Ordering::Equal => continue,
                    ord => return ord,
                },
            }
        }
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(n) = self.to_biguint() {
            return write!(f, "{n}");
        }
        let parts: Vec<String> = self.0.iter().map(|b| format!("2^({b})")).collect();
        write!(f, "{}", parts.join("+"))
    }
}

impl fmt::Debug for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// BIT adjacency: with `m = min, M = max`, the pair is joined iff bit `m`
/// of `M` is set. Symmetric by construction; loops are rejected.
pub fn rado_adjacent(x: &Vertex, y: &Vertex) -> Result<bool, BackForthError> {
    match x.cmp(y) {
        std::cmp::Ordering::Equal => Err(BackForthError::LoopQuery(x.to_string())),
        std::cmp::Ordering::Less => Ok(y.bits().contains(x)),
        std::cmp::Ordering::Greater => Ok(x.bits().contains(y)),
    }
}

/// Small-number convenience form of [`rado_adjacent`].
pub fn rado_adjacent_u64(i: u64, j: u64) -> Result<bool, BackForthError> {
    rado_adjacent(&Vertex::from_u64(i), &Vertex::from_u64(j))
}

fn valid_rado_witness(c: &Vertex, s1: &[Vertex], s2: &[Vertex], used: &[Vertex]) -> bool {
    if used.contains(c) || s1.contains(c) || s2.contains(c) {
        return false;
    }
    s1.iter().all(|v| rado_adjacent(c, v) == Ok(true))
        && s2.iter().all(|v| rado_adjacent(c, v) == Ok(false))
}

/// A vertex adjacent to everything in `s1`, nothing in `s2`, distinct from
/// everything in `used`.
///
/// The smallest valid vertex is preferred: candidates are the supersets of
/// the bit set `s1` by bits outside `s1 ∪ s2`, enumerated in increasing
/// numeric order. If no small candidate survives the collision checks, the
/// always-valid construction `s1` plus one fresh bit above everything in
/// sight is used.
pub fn rado_witness(
    s1: &[Vertex],
    s2: &[Vertex],
    used: &[Vertex],
) -> Result<Vertex, BackForthError> {
    for v in s1 {
        if s2.contains(v) {
            return Err(BackForthError::OverlappingConstraints(v.to_string()));
        }
    }
    let base: BTreeSet<Vertex> = s1.iter().cloned().collect();
    let forbidden: BTreeSet<Vertex> = s1.iter().chain(s2).cloned().collect();
    // free bit positions in ascending numeric order (small naturals first)
    let mut free: Vec<Vertex> = Vec::new();
    let mut next_nat = 0u64;
    let limit = s1.len() + s2.len() + used.len() + 8;
    let mut fill_free = |free: &mut Vec<Vertex>, upto: usize| {
        while free.len() < upto {
            let v = Vertex::from_u64(next_nat);
            next_nat += 1;
            if !forbidden.contains(&v) {
                free.push(v);
            }
        }
    };
    for k in 0..limit as u64 {
        let need = 64 - k.leading_zeros() as usize;
        fill_free(&mut free, need);
        let mut bits = base.clone();
        for (i, f) in free.iter().enumerate().take(need) {
            if k >> i & 1 == 1 {
                bits.insert(f.clone());
            }
        }
        let cand = Vertex::from_bits(bits);
        if valid_rado_witness(&cand, s1, s2, used) {
            return Ok(cand);
        }
    }
    // fresh high bit above everything mentioned
    let top = s1
        .iter()
        .chain(s2)
        .chain(used)
        .max()
        .cloned()
        .unwrap_or_else(|| Vertex::from_u64(0));
    let high = Vertex::from_bits([top].into_iter().collect());
    let mut bits = base;
    bits.insert(high);
    let cand = Vertex::from_bits(bits);
    debug_assert!(valid_rado_witness(&cand, s1, s2, used));
    Ok(cand)
}

/// A fresh rational strictly between `lower` and `upper`: the midpoint of
/// the cut, or one beyond the end when a side is empty (0 when both are).
pub fn dlo_witness(lower: &[Q], upper: &[Q]) -> Result<Q, BackForthError> {
    let lo = lower.iter().max();
    let hi = upper.iter().min();
    match (lo, hi) {
        (Some(a), Some(b)) => {
            if a >= b {
                return Err(BackForthError::IncompatibleCut(fmt_q(a), fmt_q(b)));
            }
            Ok((a + b) / Q::from_integer(2.into()))
        }
        (Some(a), None) => Ok(a + Q::one()),
        (None, Some(b)) => Ok(b - Q::one()),
        (None, None) => Ok(Q::zero()),
    }
}

// ---------------------------------------------------------------------------
// generic engine
// ---------------------------------------------------------------------------

/// A structure the engine can extend partial isomorphisms over: a fixed
/// enumeration, a (directed) binary relation atom, and a witness oracle
/// producing fresh elements with a prescribed relation pattern.
pub trait StructureAdapter {
    type Elem: Clone + PartialEq + fmt::Display;

    fn enumerate(&self, i: usize) -> Self::Elem;

    fn related(&self, a: &Self::Elem, b: &Self::Elem) -> bool;

    /// Fresh element `y` with `related(y, e) == fwd` and
    /// `related(e, y) == bwd` for every constraint `(e, fwd, bwd)`,
    /// distinct from everything in `used`.
    fn witness(
        &self,
        constraints: &[(Self::Elem, bool, bool)],
        used: &[Self::Elem],
    ) -> Result<Self::Elem, BackForthError>;
}

/// A stage-verified partial isomorphism.
#[derive(Clone, Debug)]
pub struct PartialIso<L, R> {
    pub pairs: Vec<(L, R)>,
}

impl<L: fmt::Display, R: fmt::Display> PartialIso<L, R> {
    pub fn to_json(&self) -> Value {
        json!({
            "pairs": self
                .pairs
                .iter()
                .map(|(l, r)| json!({"left": l.to_string(), "right": r.to_string()}))
                .collect::<Vec<_>>(),
            "size": self.pairs.len(),
        })
    }
}

/// Runs `stages` va-et-vient rounds: round `i` brings the `i`-th enumerated
/// element of the left structure into the domain and the `i`-th of the
/// right into the image, verifying the induced-substructure isomorphism as
/// it goes. Deterministic given the adapters and the stage count.
pub fn run_back_and_forth<LS, RS>(
    left: &LS,
    right: &RS,
    stages: usize,
) -> Result<PartialIso<LS::Elem, RS::Elem>, BackForthError>
where
    LS: StructureAdapter,
    RS: StructureAdapter,
{
    let mut pairs: Vec<(LS::Elem, RS::Elem)> = Vec::new();
    for stage in 0..stages {
        // va: pull the next left element into the domain
        let x = left.enumerate(stage);
        if !pairs.iter().any(|(l, _)| *l == x) {
            let constraints: Vec<(RS::Elem, bool, bool)> = pairs
                .iter()
                .map(|(l, r)| (r.clone(), left.related(&x, l), left.related(l, &x)))
                .collect();
            let used: Vec<RS::Elem> = pairs.iter().map(|(_, r)| r.clone()).collect();
            let y = right.witness(&constraints, &used).map_err(|e| {
                BackForthError::WitnessFailure {
                    side: "right",
                    stage,
                    reason: e.to_string(),
                    constraints: constraints
                        .iter()
                        .map(|(e, f, b)| format!("({e}, {f}, {b})"))
                        .collect(),
                }
            })?;
            check_new_pair(left, right, &pairs, &x, &y, stage)?;
            pairs.push((x, y));
        }
        // vient: pull the next right element into the image
        let y = right.enumerate(stage);
        if !pairs.iter().any(|(_, r)| *r == y) {
            let constraints: Vec<(LS::Elem, bool, bool)> = pairs
                .iter()
                .map(|(l, r)| (l.clone(), right.related(&y, r), right.related(r, &y)))
                .collect();
            let used: Vec<LS::Elem> = pairs.iter().map(|(l, _)| l.clone()).collect();
            let x = left.witness(&constraints, &used).map_err(|e| {
                BackForthError::WitnessFailure {
                    side: "left",
                    stage,
                    reason: e.to_string(),
                    constraints: constraints
                        .iter()
                        .map(|(e, f, b)| format!("({e}, {f}, {b})"))
                        .collect(),
                }
            })?;
            check_new_pair(left, right, &pairs, &x, &y, stage)?;
            pairs.push((x, y));
        }
    }
    // final full re-verification
    for i in 0..pairs.len() {
        for j in 0..pairs.len() {
            if i == j {
                continue;
            }
            let (li, ri) = &pairs[i];
            let (lj, rj) = &pairs[j];
            if left.related(li, lj) != right.related(ri, rj) {
                return Err(BackForthError::VerificationFailed {
                    stage: stages,
                    left: li.to_string(),
                    right: ri.to_string(),
                });
            }
        }
    }
    Ok(PartialIso { pairs })
}

fn check_new_pair<LS, RS>(
    left: &LS,
    right: &RS,
    pairs: &[(LS::Elem, RS::Elem)],
    x: &LS::Elem,
    y: &RS::Elem,
    stage: usize,
) -> Result<(), BackForthError>
where
    LS: StructureAdapter,
    RS: StructureAdapter,
{
    for (l, r) in pairs {
        if left.related(x, l) != right.related(y, r) || left.related(l, x) != right.related(r, y)
        {
            return Err(BackForthError::VerificationFailed {
                stage,
                left: x.to_string(),
                right: y.to_string(),
            });
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// structure instances
// ---------------------------------------------------------------------------

/// The BIT graph, optionally presented through a seeded relabeling of a
/// finite window of vertices (identity outside the window): an isomorphic
/// copy with a different enumeration and adjacency matrix.
pub struct RadoStructure {
    perm: Vec<u64>,
    inv: Vec<u64>,
}

impl RadoStructure {
    /// The plain presentation.
    pub fn identity() -> Self {
        RadoStructure {
            perm: vec![],
            inv: vec![],
        }
    }

    /// Seeded window relabeling.
    pub fn permuted(seed: u64, window: usize) -> Self {
        let mut rng = crate::sampling::SplitMix64::new(seed);
        let perm: Vec<u64> = crate::sampling::random_permutation(&mut rng, window)
            .into_iter()
            .map(|v| v as u64)
            .collect();
        let mut inv = vec![0u64; window];
        for (i, &p) in perm.iter().enumerate() {
            inv[p as usize] = i as u64;
        }
        RadoStructure { perm, inv }
    }

    fn relabel(&self, table: &[u64], v: &Vertex) -> Vertex {
        match v.to_u64() {
            Some(n) if (n as usize) < table.len() => Vertex::from_u64(table[n as usize]),
            _ => v.clone(),
        }
    }

    fn relabel_to_base(&self, v: &Vertex) -> Vertex {
        self.relabel(&self.perm, v)
    }

    fn relabel_from_base(&self, v: &Vertex) -> Vertex {
        self.relabel(&self.inv, v)
    }
}

impl StructureAdapter for RadoStructure {
    type Elem = Vertex;

    fn enumerate(&self, i: usize) -> Vertex {
        Vertex::from_u64(i as u64)
    }

    fn related(&self, a: &Vertex, b: &Vertex) -> bool {
        if a == b {
            return false;
        }
        rado_adjacent(&self.relabel_to_base(a), &self.relabel_to_base(b)).unwrap_or(false)
    }

    fn witness(
        &self,
        constraints: &[(Vertex, bool, bool)],
        used: &[Vertex],
    ) -> Result<Vertex, BackForthError> {
        let mut s1 = Vec::new();
        let mut s2 = Vec::new();
        for (e, fwd, bwd) in constraints {
            if fwd != bwd {
                return Err(BackForthError::InconsistentPattern(e.to_string()));
            }
            let base = self.relabel_to_base(e);
            if *fwd {
                s1.push(base);
            } else {
                s2.push(base);
            }
        }
        let based_used: Vec<Vertex> = used.iter().map(|u| self.relabel_to_base(u)).collect();
        let w = rado_witness(&s1, &s2, &based_used)?;
        Ok(self.relabel_from_base(&w))
    }
}

/// The rationals with their order, enumerated by a seeded stream of
/// distinct values.
pub struct DloStructure {
    elems: Vec<Q>,
}

impl DloStructure {
    pub fn seeded(seed: u64, count: usize) -> Self {
        let mut rng = crate::sampling::SplitMix64::new(seed);
        let mut elems: Vec<Q> = Vec::with_capacity(count);
        while elems.len() < count {
            let num = rng.below(401) as i64 - 200;
            let den = rng.below(20) as i64 + 1;
            let v = crate::rat::q(num, den);
            if !elems.contains(&v) {
                elems.push(v);
            }
        }
        DloStructure { elems }
    }
}

impl StructureAdapter for DloStructure {
    type Elem = Q;

    fn enumerate(&self, i: usize) -> Q {
        self.elems
            .get(i)
            .cloned()
            .unwrap_or_else(|| Q::from_integer((1000 + i as i64).into()))
    }

    fn related(&self, a: &Q, b: &Q) -> bool {
        a < b
    }

    fn witness(
        &self,
        constraints: &[(Q, bool, bool)],
        used: &[Q],
    ) -> Result<Q, BackForthError> {
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        for (e, fwd, bwd) in constraints {
            // fwd: new < e, bwd: e < new
            if fwd == bwd {
                return Err(BackForthError::InconsistentPattern(fmt_q(e)));
            }
            if *fwd {
                upper.push(e.clone());
            } else {
                lower.push(e.clone());
            }
        }
        let w = dlo_witness(&lower, &upper)?;
        if used.contains(&w) {
            return Err(BackForthError::WitnessFailure {
                side: "dlo",
                stage: 0,
                reason: "midpoint collides with a used element outside the cut".into(),
                constraints: constraints
                    .iter()
                    .map(|(e, f, b)| format!("({}, {f}, {b})", fmt_q(e)))
                    .collect(),
            });
        }
        Ok(w)
    }
}

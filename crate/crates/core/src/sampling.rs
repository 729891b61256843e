//! Seeded, fully deterministic generators for measure-algebra objects.
//!
//! The CLI and the randomized law checks both need reproducible streams of
//! sets, exchanges, types, and words; everything here is a pure function of
//! the [`SplitMix64`] state it is handed.

use crate::freegroup::{Gen, ReducedWord};
use crate::malg::{Iet, MSet};
use crate::rat::{Q, q0};
use crate::types::TypeVector;
use num_bigint::BigInt;

/// SplitMix64 PRNG; tiny, seedable, platform-independent.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `0..bound` (`bound > 0`).
    pub fn below(&mut self, bound: u64) -> u64 {
        // multiply-shift; bias is irrelevant for test data
        ((u128::from(self.next_u64()) * u128::from(bound)) >> 64) as u64
    }

    pub fn chance(&mut self, num: u64, den: u64) -> bool {
        self.below(den) < num
    }
}

/// Random canonical set with endpoints on the grid `1/denom`.
pub fn random_mset(rng: &mut SplitMix64, denom: u64, max_intervals: usize) -> MSet {
    let pieces = 1 + rng.below(max_intervals.max(1) as u64);
    let mut raw = Vec::new();
    for _ in 0..pieces {
        let a = rng.below(denom + 1);
        let b = rng.below(denom + 1);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        raw.push((
            Q::new(BigInt::from(lo), BigInt::from(denom)),
            Q::new(BigInt::from(hi), BigInt::from(denom)),
        ));
    }
    MSet::normalize(&raw).expect("grid endpoints are in range")
}

/// Random interval exchange: a seeded permutation of the `denom` tiles
/// `[k/denom, (k+1)/denom)`.
pub fn random_iet(rng: &mut SplitMix64, denom: u64) -> Iet {
    let mut perm: Vec<u64> = (0..denom).collect();
    for i in (1..perm.len()).rev() {
        let j = rng.below((i + 1) as u64) as usize;
        perm.swap(i, j);
    }
    let pieces = perm
        .iter()
        .enumerate()
        .map(|(src, &dst)| {
            let lo = Q::new(BigInt::from(src as u64), BigInt::from(denom));
            let hi = Q::new(BigInt::from(src as u64 + 1), BigInt::from(denom));
            let shift = Q::new(
                BigInt::from(dst as i64 - src as i64),
                BigInt::from(denom),
            );
            (lo, hi, shift)
        })
        .collect();
    Iet::from_pieces(pieces).expect("tile permutation is an exchange")
}

/// Random partition of `[0,1)` into `n` blocks (some possibly empty), with
/// endpoints on the grid `1/denom`.
pub fn random_partition(rng: &mut SplitMix64, n: usize, denom: u64) -> Vec<MSet> {
    let mut raw: Vec<Vec<(Q, Q)>> = vec![Vec::new(); n];
    for k in 0..denom {
        let cls = rng.below(n as u64) as usize;
        raw[cls].push((
            Q::new(BigInt::from(k), BigInt::from(denom)),
            Q::new(BigInt::from(k + 1), BigInt::from(denom)),
        ));
    }
    raw.into_iter()
        .map(|iv| MSet::normalize(&iv).expect("grid endpoints are in range"))
        .collect()
}

/// Random type of arity `n`: `denom` unit masses thrown into the `2^n`
/// atoms.
pub fn random_typevector(rng: &mut SplitMix64, n: usize, denom: u64) -> TypeVector {
    let k = 1usize << n;
    let mut counts = vec![0u64; k];
    for _ in 0..denom {
        counts[rng.below(k as u64) as usize] += 1;
    }
    let weights = counts
        .iter()
        .map(|c| Q::new(BigInt::from(*c), BigInt::from(denom)))
        .collect();
    TypeVector::from_weights(n, weights).expect("counts sum to denom")
}

/// Random type of arity `n` supported on at most `max_atoms` atoms.
pub fn random_sparse_typevector(
    rng: &mut SplitMix64,
    n: usize,
    denom: u64,
    max_atoms: usize,
) -> TypeVector {
    let k = 1usize << n;
    let atoms: Vec<usize> = (0..max_atoms.max(1))
        .map(|_| rng.below(k as u64) as usize)
        .collect();
    let mut counts = vec![0u64; k];
    for _ in 0..denom {
        counts[atoms[rng.below(atoms.len() as u64) as usize]] += 1;
    }
    let weights = counts
        .iter()
        .map(|c| Q::new(BigInt::from(*c), BigInt::from(denom)))
        .collect();
    TypeVector::from_weights(n, weights).expect("counts sum to denom")
}

/// Random tuple of `n` sets on the grid `1/denom`.
pub fn random_tuple(rng: &mut SplitMix64, n: usize, denom: u64, max_intervals: usize) -> Vec<MSet> {
    (0..n).map(|_| random_mset(rng, denom, max_intervals)).collect()
}

/// Random reduced word of exactly `len` letters.
pub fn random_reduced_word(rng: &mut SplitMix64, len: usize) -> ReducedWord {
    let mut letters: Vec<Gen> = Vec::with_capacity(len);
    for _ in 0..len {
        loop {
            let g = Gen::from_index(rng.below(4) as usize);
            if letters.last().map(|l| l.inverse()) != Some(g) {
                letters.push(g);
                break;
            }
        }
    }
    ReducedWord::from_letters(letters).expect("constructed without cancellations")
}

/// Seeded permutation of `0..len`.
pub fn random_permutation(rng: &mut SplitMix64, len: usize) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..len).collect();
    for i in (1..len).rev() {
        let j = rng.below((i + 1) as u64) as usize;
        perm.swap(i, j);
    }
    perm
}

/// Random unit vector (ℓ²) with entries in `[-1,1)` before normalization.
pub fn random_unit_vector(rng: &mut SplitMix64, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim)
            .map(|_| (rng.next_u64() as f64 / u64::MAX as f64) * 2.0 - 1.0)
            .collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            return v.iter().map(|x| x / norm).collect();
        }
    }
}

/// Sum of the pairwise distances of two equal-length tuples.
pub fn tuple_dist(a: &[MSet], b: &[MSet]) -> Q {
    a.iter()
        .zip(b)
        .fold(q0(), |acc, (x, y)| acc + x.dist(y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    #[test]
    fn deterministic_streams() {
        let mut a = SplitMix64::new(7);
        let mut b = SplitMix64::new(7);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn partitions_cover_and_are_disjoint() {
        let mut rng = SplitMix64::new(3);
        for _ in 0..20 {
            let parts = random_partition(&mut rng, 4, 24);
            let mut union = MSet::empty();
            let mut total = q0();
            for p in &parts {
                total += p.measure();
                union = union.union(p);
            }
            assert!(Q::one() == total);
            assert_eq!(union, MSet::full());
        }
    }

    #[test]
    fn random_iets_preserve_measure() {
        let mut rng = SplitMix64::new(11);
        for _ in 0..20 {
            let t = random_iet(&mut rng, 12);
            let a = random_mset(&mut rng, 12, 4);
            assert_eq!(t.apply(&a).measure(), a.measure());
        }
    }
}

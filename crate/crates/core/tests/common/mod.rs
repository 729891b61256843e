//! Shared helpers for the integration suites: seeded object generators and
//! independent oracles.

#![allow(dead_code)]

use malg_core::logic::{Formula, Term};
use malg_core::rat::{q, q0, Q};
use malg_core::sampling::SplitMix64;
use malg_core::types::{hamming, TypeVector};
use num_bigint::BigInt;
use num_traits::Zero;

pub fn random_term(rng: &mut SplitMix64, vars: &[&str], depth: usize) -> Term {
    if depth == 0 || rng.chance(1, 3) {
        return match rng.below(vars.len() as u64 + 2) {
            0 => Term::Zero,
            1 => Term::One,
            k => Term::Var(vars[(k - 2) as usize].to_string()),
        };
    }
    let a = Box::new(random_term(rng, vars, depth - 1));
    let b = Box::new(random_term(rng, vars, depth - 1));
    match rng.below(3) {
        0 => Term::Join(a, b),
        1 => Term::Meet(a, b),
        _ => Term::SymDiff(a, b),
    }
}

fn random_const(rng: &mut SplitMix64) -> Q {
    let num = rng.below(13) as i64 - 6;
    let den = rng.below(6) as i64 + 1;
    q(num, den)
}

/// Random quantifier-free formula over the given variables.
pub fn random_qf_formula(rng: &mut SplitMix64, vars: &[&str], depth: usize) -> Formula {
    if depth == 0 || rng.chance(1, 4) {
        return match rng.below(3) {
            0 => Formula::Const(random_const(rng)),
            1 => Formula::Measure(random_term(rng, vars, 2)),
            _ => Formula::Dist(random_term(rng, vars, 2), random_term(rng, vars, 2)),
        };
    }
    let a = Box::new(random_qf_formula(rng, vars, depth - 1));
    let b = Box::new(random_qf_formula(rng, vars, depth - 1));
    match rng.below(8) {
        0 => Formula::Add(a, b),
        1 => Formula::Sub(a, b),
        2 => Formula::Monus(a, b),
        3 => Formula::Max(a, b),
        4 => Formula::Min(a, b),
        5 => Formula::Abs(a),
        6 => Formula::Scale(random_const(rng), a),
        _ => Formula::Sub(a, b),
    }
}

/// Random formula, possibly wrapping a quantifier around a body that uses
/// the bound variable.
pub fn random_formula(rng: &mut SplitMix64, vars: &[&str], depth: usize) -> Formula {
    if rng.chance(1, 3) {
        let mut inner_vars: Vec<&str> = vars.to_vec();
        inner_vars.push("qv");
        let body = Box::new(random_qf_formula(rng, &inner_vars, depth));
        if rng.chance(1, 2) {
            return Formula::Inf("qv".to_string(), body);
        }
        return Formula::Sup("qv".to_string(), body);
    }
    random_qf_formula(rng, vars, depth)
}

/// Exhaustive transport oracle: enumerates every basic feasible coupling
/// (edge sets of forest size, solved by leaf peeling) and takes the
/// cheapest. Independent of the successive-shortest-path solver.
pub fn oracle_orbit_distance(p: &TypeVector, q_vec: &TypeVector) -> Q {
    assert_eq!(p.arity(), q_vec.arity());
    let rows: Vec<(usize, Q)> = p
        .weights()
        .iter()
        .enumerate()
        .filter(|(_, w)| !w.is_zero())
        .map(|(i, w)| (i, w.clone()))
        .collect();
    let cols: Vec<(usize, Q)> = q_vec
        .weights()
        .iter()
        .enumerate()
        .filter(|(_, w)| !w.is_zero())
        .map(|(j, w)| (j, w.clone()))
        .collect();
    let (r, c) = (rows.len(), cols.len());
    let n_edges = r * c;
    assert!(n_edges <= 20, "oracle is exponential in the edge count");
    let max_edges = r + c - 1;
    let mut best: Option<Q> = None;
    'subsets: for mask in 0u32..(1u32 << n_edges) {
        if (mask.count_ones() as usize) > max_edges {
            continue;
        }
        // peel leaves of the bipartite edge set
        let mut sup: Vec<Q> = rows.iter().map(|(_, w)| w.clone()).collect();
        let mut dem: Vec<Q> = cols.iter().map(|(_, w)| w.clone()).collect();
        let mut alive: Vec<bool> = (0..n_edges).map(|e| mask >> e & 1 == 1).collect();
        let mut cost = q0();
        loop {
            // a node with exactly one incident live edge forces that flow
            let mut forced: Option<usize> = None;
            for i in 0..r {
                let es: Vec<usize> = (0..c).map(|j| i * c + j).filter(|&e| alive[e]).collect();
                if es.len() == 1 {
                    forced = Some(es[0]);
                    break;
                }
            }
            if forced.is_none() {
                for j in 0..c {
                    let es: Vec<usize> =
                        (0..r).map(|i| i * c + j).filter(|&e| alive[e]).collect();
                    if es.len() == 1 {
                        forced = Some(es[0]);
                        break;
                    }
                }
            }
            let Some(e) = forced else { break };
            let (i, j) = (e / c, e % c);
            // the flow equals the constrained side's remainder
            let flow = {
                let i_deg = (0..c).filter(|&jj| alive[i * c + jj]).count();
                if i_deg == 1 {
                    sup[i].clone()
                } else {
                    dem[j].clone()
                }
            };
            if flow < q0() {
                continue 'subsets;
            }
            sup[i] -= &flow;
            dem[j] -= &flow;
            if sup[i] < q0() || dem[j] < q0() {
                continue 'subsets;
            }
            let h = hamming(rows[i].0, cols[j].0);
            cost += &flow * Q::from_integer(BigInt::from(h));
            alive[e] = false;
        }
        if alive.iter().any(|&a| a) {
            continue; // a cycle remained: not a basic solution
        }
        if sup.iter().any(|s| !s.is_zero()) || dem.iter().any(|d| !d.is_zero()) {
            continue; // infeasible on this edge set
        }
        match &best {
            Some(b) if *b <= cost => {}
            _ => best = Some(cost),
        }
    }
    best.expect("the complete bipartite graph always has a feasible forest")
}

/// Random 1-Lipschitz (for Hamming distance) function on `{0,1}^n`, built
/// by regularizing random values: `f(δ) = min_ε raw(ε) + hamming(δ, ε)`.
pub fn random_lipschitz_fn(rng: &mut SplitMix64, n: usize) -> Vec<Q> {
    let k = 1usize << n;
    let raw: Vec<Q> = (0..k)
        .map(|_| q(rng.below(4 * n as u64 + 1) as i64, 4))
        .collect();
    (0..k)
        .map(|d| {
            (0..k)
                .map(|e| &raw[e] + Q::from_integer(BigInt::from(hamming(d, e))))
                .min()
                .expect("nonempty cube")
        })
        .collect()
}

/// `Σ f·(p − q)` for a function given on atoms.
pub fn pairing(f: &[Q], p: &TypeVector, q_vec: &TypeVector) -> Q {
    f.iter()
        .zip(p.weights().iter().zip(q_vec.weights()))
        .fold(q0(), |acc, (fv, (pw, qw))| acc + fv * &(pw - qw))
}

//! Numerical and exact certificates around the spectral theory of the
//! simple random walk on the free group.
//!
//! Three strands converge on the same constants: exact return
//! probabilities of the walk (whose `2k`-th roots climb towards `√3/2`),
//! truncated spectral radii of the Markov operator on Cayley balls (which
//! increase towards `√3/2` from below), and the displacement bound
//! `min_ξ ½(‖π(a)ξ−ξ‖² + ‖π(b)ξ−ξ‖²) = 2 − 2·λ_max ≥ 2 − √3`, whose square
//! root is the constant `√(2−√3) ≈ 0.5176380902`.
//!
//! All combinatorial counts are exact rationals; floating point enters only
//! in the spectral iteration, certified by interval tolerances.

use crate::freegroup::{ball, generator_operator, markov_operator, Ball, FreeGroupError, Gen,
                       SparseOperator};
use crate::rat::{q0, q1, Q};
use num_bigint::BigInt;
use num_traits::Zero;
use thiserror::Error;

/// Step cap for the exact return-probability recursion.
pub const MAX_STEPS: usize = 40;

/// `√3/2`, the spectral radius of the Markov operator on the full group.
pub const TARGET_LAMBDA: f64 = 0.8660254037844386;

/// `2 − √3`, the limiting averaged squared displacement.
pub const TARGET_DISP_SQ: f64 = 0.2679491924311228;

/// `√(2 − √3)`, the displacement constant.
pub const TARGET_DISP: f64 = 0.5176380902050415;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KestenError {
    #[error("step count {0} exceeds the cap {MAX_STEPS}")]
    StepsOverCap(usize),
    #[error("power iteration did not converge in {iterations} iterations (last estimate {last})")]
    NoConvergence { last: f64, iterations: usize },
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error(transparent)]
    FreeGroup(#[from] FreeGroupError),
}

/// Exact probability that the simple random walk (uniform on the four
/// generators) returns to the identity after `steps` steps.
///
/// Computed by the distance chain: from distance `d ≥ 1` the walk moves
/// closer with probability `1/4` and farther with probability `3/4`; from
/// the identity it always moves away. Odd step counts return probability
/// zero (the Cayley graph is bipartite); this is a value, not an error.
pub fn return_probability(steps: usize) -> Result<Q, KestenError> {
    if steps > MAX_STEPS {
        return Err(KestenError::StepsOverCap(steps));
    }
    if steps % 2 == 1 {
        return Ok(q0());
    }
    let mut dist: Vec<Q> = vec![q0(); steps + 2];
    dist[0] = q1();
    let quarter = Q::new(BigInt::from(1), BigInt::from(4));
    let three_quarters = Q::new(BigInt::from(3), BigInt::from(4));
    for _ in 0..steps {
        let mut next = vec![q0(); steps + 2];
        for (d, mass) in dist.iter().enumerate() {
            if mass.is_zero() {
                continue;
            }
            if d == 0 {
                next[1] += mass;
            } else {
                next[d - 1] += mass * &quarter;
                if d + 1 < next.len() {
                    next[d + 1] += mass * &three_quarters;
                }
            }
        }
        dist = next;
    }
    Ok(dist[0].clone())
}

/// All even-step return probabilities up to `max_steps`.
pub fn return_probabilities_upto(max_steps: usize) -> Result<Vec<(usize, Q)>, KestenError> {
    (1..=max_steps / 2)
        .map(|k| return_probability(2 * k).map(|p| (2 * k, p)))
        .collect()
}

#[derive(Clone, Copy, Debug)]
pub struct EigenEstimate {
    pub value: f64,
    pub iterations: usize,
}

/// Rayleigh-quotient power iteration for the top eigenvalue of a symmetric
/// operator, started from the deterministic vector `δ_0` (the identity
/// word, which has positive overlap with the Perron direction of the
/// connected ball).
///
/// The iteration runs on `M + I` because Cayley balls are bipartite: the
/// raw operator makes the iterates oscillate between parity classes while
/// the shift leaves the eigenvectors untouched. The reported estimate is
/// the Rayleigh quotient of `M` itself, and the stop rule is a successive
/// change below `tol`.
pub fn top_eigenvalue(
    op: &SparseOperator,
    tol: f64,
    max_iters: usize,
) -> Result<EigenEstimate, KestenError> {
    if tol <= 0.0 {
        return Err(KestenError::BadTolerance(tol));
    }
    let dim = op.dim();
    let vals = op.values_f64();
    let mut x = vec![0.0; dim];
    x[0] = 1.0;
    let mut y = vec![0.0; dim];
    let mut prev: Option<f64> = None;
    for it in 0..max_iters {
        op.matvec(&vals, &x, &mut y);
        let est: f64 = y.iter().zip(&x).map(|(a, b)| a * b).sum();
        if let Some(p) = prev {
            if (est - p).abs() < tol {
                return Ok(EigenEstimate {
                    value: est,
                    iterations: it + 1,
                });
            }
        }
        prev = Some(est);
        // shifted step: z = (M + I) x, renormalized
        let mut norm_sq = 0.0;
        for i in 0..dim {
            y[i] += x[i];
            norm_sq += y[i] * y[i];
        }
        let norm = norm_sq.sqrt();
        if norm == 0.0 {
            return Ok(EigenEstimate {
                value: 0.0,
                iterations: it + 1,
            });
        }
        for i in 0..dim {
            x[i] = y[i] / norm;
        }
    }
    Err(KestenError::NoConvergence {
        last: prev.unwrap_or(f64::NAN),
        iterations: max_iters,
    })
}

/// Squared displacement `‖π(g)ξ − ξ‖²` of a unit vector supported in the
/// ball, computed as `2 − 2⟨P_g ξ, ξ⟩` (the inner product only sees the
/// compressed operator; the norm identity uses that the full
/// representation is isometric).
pub fn displacement_sq(op_g: &SparseOperator, xi: &[f64]) -> f64 {
    let vals = op_g.values_f64();
    let mut y = vec![0.0; op_g.dim()];
    op_g.matvec(&vals, xi, &mut y);
    let inner: f64 = y.iter().zip(xi).map(|(a, b)| a * b).sum();
    let norm_sq: f64 = xi.iter().map(|v| v * v).sum();
    2.0 * norm_sq - 2.0 * inner
}

/// Spectral certificate at radius `R`.
#[derive(Clone, Debug)]
pub struct KestenReport {
    pub radius: usize,
    /// Top eigenvalue of the compressed Markov operator.
    pub lambda_max: f64,
    pub iterations: usize,
    /// `2 − 2·λ_max`: the exact minimum of
    /// `½(‖π(a)ξ−ξ‖² + ‖π(b)ξ−ξ‖²)` over unit vectors supported in the
    /// ball.
    pub min_avg_disp_sq: f64,
    /// `√(min_avg_disp_sq)`: lower bound for the larger of the two
    /// generator displacements of any such vector.
    pub min_max_disp: f64,
    pub target_lambda: f64,
    pub target_disp_sq: f64,
    pub target_disp: f64,
    /// `λ_max ≤ √3/2 + tol`.
    pub lambda_bound_ok: bool,
    /// `min_avg_disp_sq ≥ 2 − √3 − tol`.
    pub disp_bound_ok: bool,
    pub tol: f64,
    /// Exact even-step return probabilities up to [`MAX_STEPS`].
    pub return_probs: Vec<(usize, Q)>,
    /// Non-certified upper-bound probe for the minimax displacement, when
    /// requested: `max(‖π(a)ξ−ξ‖, ‖π(b)ξ−ξ‖)` at a balanced near-minimizer.
    pub probe_max_disp: Option<f64>,
}

/// Weighted symmetrized generator operator `w·S_a + (1−w)·S_b` as a dense
/// row list, where `S_g = (P_g + P_{g⁻¹})/2`.
#[allow(clippy::needless_range_loop)]
fn weighted_sym_rows(ball: &Ball, w: f64) -> (Vec<Vec<(u32, f64)>>, usize) {
    let dim = ball.len();
    let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); dim];
    let mut add = |g: Gen, weight: f64| {
        for i in 0..dim {
            if let Some(j) = ball.left_mul_index(g.inverse(), i) {
                rows[i].push((j as u32, weight / 2.0));
            }
        }
    };
    add(Gen::A, w);
    add(Gen::AInv, w);
    add(Gen::B, 1.0 - w);
    add(Gen::BInv, 1.0 - w);
    (rows, dim)
}

fn power_iterate_rows(rows: &[Vec<(u32, f64)>], dim: usize, iters: usize) -> Vec<f64> {
    let mut x = vec![0.0; dim];
    x[0] = 1.0;
    let mut y = vec![0.0; dim];
    for _ in 0..iters {
        for i in 0..dim {
            let mut acc = x[i]; // +I shift
            for &(j, v) in &rows[i] {
                acc += v * x[j as usize];
            }
            y[i] = acc;
        }
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        for i in 0..dim {
            x[i] = y[i] / norm;
        }
    }
    x
}

/// Alternating bisection probe: balances the two generator displacements
/// by reweighting the averaged objective. Returns an upper bound on the
/// minimax displacement (not certified).
fn minimax_probe(ball: &Ball, pa: &SparseOperator, pb: &SparseOperator) -> f64 {
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    let mut best = f64::INFINITY;
    for _ in 0..10 {
        let w = 0.5 * (lo + hi);
        let (rows, dim) = weighted_sym_rows(ball, w);
        let xi = power_iterate_rows(&rows, dim, 200);
        let da = displacement_sq(pa, &xi).max(0.0).sqrt();
        let db = displacement_sq(pb, &xi).max(0.0).sqrt();
        best = best.min(da.max(db));
        if da > db {
            // hit `a` harder
            lo = w;
        } else {
            hi = w;
        }
    }
    best
}

pub fn kesten_certificate(
    radius: usize,
    tol: f64,
    max_iters: usize,
    with_probe: bool,
) -> Result<KestenReport, KestenError> {
    let b = ball(radius)?;
    let m = markov_operator(&b);
    let est = top_eigenvalue(&m, tol, max_iters)?;
    let lambda_max = est.value;
    let min_avg_disp_sq = 2.0 - 2.0 * lambda_max;
    let probe_max_disp = if with_probe {
        let pa = generator_operator(Gen::A, &b);
        let pb = generator_operator(Gen::B, &b);
        Some(minimax_probe(&b, &pa, &pb))
    } else {
        None
    };
    Ok(KestenReport {
        radius,
        lambda_max,
        iterations: est.iterations,
        min_avg_disp_sq,
        min_max_disp: min_avg_disp_sq.max(0.0).sqrt(),
        target_lambda: TARGET_LAMBDA,
        target_disp_sq: TARGET_DISP_SQ,
        target_disp: TARGET_DISP,
        lambda_bound_ok: lambda_max <= TARGET_LAMBDA + tol,
        disp_bound_ok: min_avg_disp_sq >= TARGET_DISP_SQ - tol,
        tol,
        return_probs: return_probabilities_upto(MAX_STEPS)?,
        probe_max_disp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freegroup::ReducedWord;
    use crate::rat::q;
    use crate::sampling::{random_unit_vector, SplitMix64};
    use num_traits::ToPrimitive;

    #[test]
    fn small_return_probabilities() {
        assert_eq!(return_probability(1).unwrap(), q(0, 1));
        assert_eq!(return_probability(2).unwrap(), q(1, 4));
        assert_eq!(return_probability(4).unwrap(), q(7, 64));
        assert!(return_probability(42).is_err());
    }

    /// Brute-force oracle: enumerate all generator strings and count the
    /// ones whose product reduces to the identity.
    fn brute_force_return(steps: usize) -> Q {
        let mut hits = 0u64;
        let total = 4u64.pow(steps as u32);
        for code in 0..total {
            let mut c = code;
            let mut w = ReducedWord::identity();
            for _ in 0..steps {
                let g = Gen::from_index((c % 4) as usize);
                c /= 4;
                w = w.mul(&ReducedWord::generator(g));
            }
            if w.is_identity() {
                hits += 1;
            }
        }
        Q::new(BigInt::from(hits), BigInt::from(total))
    }

    #[test]
    fn distance_chain_matches_brute_force() {
        for steps in [2usize, 4, 6, 8] {
            assert_eq!(
                return_probability(steps).unwrap(),
                brute_force_return(steps),
                "steps {steps}"
            );
        }
    }

    #[test]
    fn root_growth_is_monotone_and_bounded() {
        let probs = return_probabilities_upto(MAX_STEPS).unwrap();
        let mut prev = 0.0f64;
        for (k, p) in probs {
            let root = p.to_f64().unwrap().powf(1.0 / k as f64);
            assert!(root >= prev - 1e-12, "2k={k}");
            assert!(root <= TARGET_LAMBDA + 1e-6, "2k={k}");
            prev = root;
        }
    }

    #[test]
    fn star_eigenvalue_is_half() {
        // M_1: the 5-node star with weights 1/4; eigenvalues ±1/2, 0
        let b = ball(1).unwrap();
        let m = markov_operator(&b);
        let est = top_eigenvalue(&m, 1e-12, 10_000).unwrap();
        assert!((est.value - 0.5).abs() < 1e-9, "estimate {}", est.value);
    }

    #[test]
    fn zero_operator_has_zero_top_eigenvalue() {
        let b = ball(0).unwrap();
        let m = markov_operator(&b);
        let est = top_eigenvalue(&m, 1e-12, 100).unwrap();
        assert_eq!(est.value, 0.0);
    }

    /// Jacobi rotations on a dense copy: an independent eigensolver used to
    /// cross-check the power iteration at small radii.
    #[allow(clippy::needless_range_loop)]
    fn jacobi_top_eigenvalue(op: &SparseOperator) -> f64 {
        let n = op.dim();
        let mut a = vec![vec![0.0f64; n]; n];
        for i in 0..n {
            for (j, v) in op.row(i) {
                a[i][j] = *v.numer() as f64 / *v.denom() as f64;
            }
        }
        for _sweep in 0..100 {
            let mut off = 0.0;
            for p in 0..n {
                for r in (p + 1)..n {
                    off += a[p][r] * a[p][r];
                }
            }
            if off < 1e-22 {
                break;
            }
            for p in 0..n {
                for r in (p + 1)..n {
                    if a[p][r].abs() < 1e-15 {
                        continue;
                    }
                    let theta = 0.5 * (a[r][r] - a[p][p]) / a[p][r];
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let (akp, akr) = (a[k][p], a[k][r]);
                        a[k][p] = c * akp - s * akr;
                        a[k][r] = s * akp + c * akr;
                    }
                    for k in 0..n {
                        let (apk, ark) = (a[p][k], a[r][k]);
                        a[p][k] = c * apk - s * ark;
                        a[r][k] = s * apk + c * ark;
                    }
                }
            }
        }
        (0..n).map(|i| a[i][i]).fold(f64::MIN, f64::max)
    }

    #[test]
    fn power_iteration_agrees_with_dense_solver() {
        for r in 1..=3 {
            let b = ball(r).unwrap();
            let m = markov_operator(&b);
            let by_power = top_eigenvalue(&m, 1e-12, 100_000).unwrap().value;
            let by_jacobi = jacobi_top_eigenvalue(&m);
            assert!(
                (by_power - by_jacobi).abs() < 1e-8,
                "radius {r}: {by_power} vs {by_jacobi}"
            );
        }
    }

    #[test]
    fn eigenvalues_increase_with_radius() {
        let mut prev = 0.0;
        for r in 1..=5 {
            let b = ball(r).unwrap();
            let m = markov_operator(&b);
            let est = top_eigenvalue(&m, 1e-10, 100_000).unwrap();
            assert!(est.value >= prev - 1e-9, "radius {r}");
            assert!(est.value <= TARGET_LAMBDA + 1e-7, "radius {r}");
            prev = est.value;
        }
    }

    #[test]
    fn rayleigh_bound_on_random_vectors() {
        let radius = 4;
        let b = ball(radius).unwrap();
        let m = markov_operator(&b);
        let pa = generator_operator(Gen::A, &b);
        let pb = generator_operator(Gen::B, &b);
        let lambda = top_eigenvalue(&m, 1e-12, 100_000).unwrap().value;
        let floor = 2.0 - 2.0 * lambda;
        let mut rng = SplitMix64::new(23);
        for _ in 0..20 {
            let xi = random_unit_vector(&mut rng, b.len());
            let avg = 0.5 * (displacement_sq(&pa, &xi) + displacement_sq(&pb, &xi));
            assert!(avg >= floor - 1e-9, "avg {avg} < floor {floor}");
            let max_disp = displacement_sq(&pa, &xi)
                .max(displacement_sq(&pb, &xi))
                .sqrt();
            assert!(max_disp >= TARGET_DISP - 1e-6);
        }
    }

    #[test]
    fn norm_identity_for_generator_operators() {
        // ‖π(g)ξ‖ = ‖ξ‖ on the full group; after compression the identity
        // ‖π(g)ξ−ξ‖² = 2‖ξ‖² − 2⟨π(g)ξ,ξ⟩ still holds with the full-space
        // norm on the left, which the displacement helper relies on.
        // Check it on vectors supported strictly inside the ball, where the
        // compression is lossless.
        let b5 = ball(5).unwrap();
        let b4 = ball(4).unwrap();
        let pa5 = generator_operator(Gen::A, &b5);
        let vals = pa5.values_f64();
        let mut rng = SplitMix64::new(31);
        for _ in 0..10 {
            let mut xi = random_unit_vector(&mut rng, b4.len());
            xi.resize(b5.len(), 0.0);
            let mut y = vec![0.0; b5.len()];
            pa5.matvec(&vals, &xi, &mut y);
            let direct: f64 = y
                .iter()
                .zip(&xi)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            let via_inner = displacement_sq(&pa5, &xi);
            assert!((direct - via_inner).abs() < 1e-12);
        }
    }

    #[test]
    fn certificate_at_radius_one() {
        let rep = kesten_certificate(1, 1e-9, 100_000, true).unwrap();
        assert!((rep.lambda_max - 0.5).abs() < 1e-9);
        assert!((rep.min_avg_disp_sq - 1.0).abs() < 1e-8);
        assert!(rep.lambda_bound_ok && rep.disp_bound_ok);
        let probe = rep.probe_max_disp.unwrap();
        assert!(probe >= rep.min_max_disp - 1e-9);
        assert!(probe <= 2.0);
    }
}

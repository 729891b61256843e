//! Rational scalar helpers shared across the crate.
//!
//! All exact arithmetic uses arbitrary-precision rationals; the only
//! floating point in the crate lives inside the spectral iteration of
//! [`crate::kesten`].

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Arbitrary-precision rational scalar.
pub type Q = BigRational;

/// `num/den` as a rational, reduced.
pub fn q(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

/// Integer as a rational.
pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn q0() -> Q {
    Q::zero()
}

pub fn q1() -> Q {
    Q::one()
}

/// Parses `"num/den"` or `"num"` (optionally signed, surrounding
/// whitespace ignored).
pub fn parse_q(text: &str) -> Result<Q, String> {
    let s = text.trim();
    if s.is_empty() {
        return Err("empty rational literal".to_string());
    }
    match s.split_once('/') {
        None => s
            .parse::<BigInt>()
            .map(Q::from_integer)
            .map_err(|e| format!("bad integer {s:?}: {e}")),
        Some((n, d)) => {
            let num = n
                .trim()
                .parse::<BigInt>()
                .map_err(|e| format!("bad numerator {n:?}: {e}"))?;
            let den = d
                .trim()
                .parse::<BigInt>()
                .map_err(|e| format!("bad denominator {d:?}: {e}"))?;
            if den.is_zero() {
                return Err(format!("zero denominator in {s:?}"));
            }
            Ok(Q::new(num, den))
        }
    }
}

/// Prints as `num/den`, or plain `num` for integers (matching [`parse_q`]).
pub fn fmt_q(x: &Q) -> String {
    x.to_string()
}

/// Least common multiple of the denominators of `values` (at least 1).
pub fn common_denominator<'a>(values: impl IntoIterator<Item = &'a Q>) -> BigInt {
    let mut l = BigInt::one();
    for v in values {
        l = l.lcm(v.denom());
    }
    l.abs()
}

/// Positive part `max(x - y, 0)`.
pub fn monus(x: &Q, y: &Q) -> Q {
    if x > y {
        x - y
    } else {
        Q::zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_print_round_trip() {
        for s in ["0", "1", "-3", "2/3", "-7/12", "10/4"] {
            let v = parse_q(s).unwrap();
            assert_eq!(parse_q(&fmt_q(&v)).unwrap(), v);
        }
        assert_eq!(parse_q("10/4").unwrap(), q(5, 2));
        assert_eq!(fmt_q(&q(5, 1)), "5");
        assert_eq!(fmt_q(&q(1, 12)), "1/12");
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(parse_q("").is_err());
        assert!(parse_q("1/0").is_err());
        assert!(parse_q("a/b").is_err());
    }

    #[test]
    fn denominator_lcm() {
        let vs = [q(1, 4), q(1, 6), q(2, 1)];
        assert_eq!(common_denominator(vs.iter()), BigInt::from(12));
    }
}

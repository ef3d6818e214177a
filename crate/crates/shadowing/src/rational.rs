//! Exact rational arithmetic helpers.
//!
//! All distances, moduli and thresholds in this crate are arbitrary-precision
//! rationals. Every property decided here ultimately hinges on a strict
//! inequality at a threshold value, so floats are never used: the δ-graph of a
//! system flips its edge set exactly at the values `d(f(x), y)`, and exact
//! arithmetic is what lets a verdict be reported as a half-open threshold
//! instead of "true up to tolerance".

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Exact rational scalar used throughout the crate.
pub type Rat = BigRational;

/// Shorthand for `n/d` as a [`Rat`].
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// Shorthand for the integer `n` as a [`Rat`].
pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Parses a rational from a `"p/q"` or `"p"` string.
pub fn parse_rat(s: &str) -> Result<Rat, String> {
    let s = s.trim();
    match s.split_once('/') {
        Some((num, den)) => {
            let num: BigInt = num
                .trim()
                .parse()
                .map_err(|_| format!("invalid numerator in {s:?}"))?;
            let den: BigInt = den
                .trim()
                .parse()
                .map_err(|_| format!("invalid denominator in {s:?}"))?;
            if den.is_zero() {
                return Err(format!("zero denominator in {s:?}"));
            }
            Ok(Rat::new(num, den))
        }
        None => {
            let num: BigInt = s.parse().map_err(|_| format!("invalid rational {s:?}"))?;
            Ok(Rat::from_integer(num))
        }
    }
}

/// Canonical `"p/q"` (or `"p"` for integers) rendering, bit-exact under round trip.
pub fn format_rat(r: &Rat) -> String {
    r.to_string()
}

/// Sorts, dedups, and returns the distinct values of `values`.
pub fn distinct_sorted(mut values: Vec<Rat>) -> Vec<Rat> {
    values.sort();
    values.dedup();
    values
}

/// The midpoints between consecutive entries of an already sorted slice.
pub fn midpoints(sorted: &[Rat]) -> Vec<Rat> {
    sorted
        .windows(2)
        .map(|w| (&w[0] + &w[1]) / rat_int(2))
        .collect()
}

/// Merges a sorted value grid with its midpoints: the standard probe grid for
/// threshold searches. Verdicts that only depend on sets of the form
/// `{d : d < t}` are constant between consecutive values, so this grid meets
/// every realizable configuration.
pub fn probe_grid(sorted_values: &[Rat]) -> Vec<Rat> {
    let mut grid = sorted_values.to_vec();
    grid.extend(midpoints(sorted_values));
    distinct_sorted(grid)
}

/// Exact square root of a nonnegative rational, if it is rational.
pub fn exact_sqrt(r: &Rat) -> Option<Rat> {
    if r.is_negative() {
        return None;
    }
    if r.is_zero() {
        return Some(Rat::zero());
    }
    let num = r.numer().sqrt();
    let den = r.denom().sqrt();
    if &(&num * &num) == r.numer() && &(&den * &den) == r.denom() {
        Some(Rat::new(num, den))
    } else {
        None
    }
}

/// `true` if `r` is a positive rational.
pub fn is_positive(r: &Rat) -> bool {
    r > &Rat::zero()
}

/// One, as a rational.
pub fn rat_one() -> Rat {
    Rat::one()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format_round_trip() {
        for s in ["3/10", "-7/2", "4", "0", "12/8"] {
            let r = parse_rat(s).unwrap();
            let back = parse_rat(&format_rat(&r)).unwrap();
            assert_eq!(r, back);
        }
        assert_eq!(format_rat(&parse_rat("12/8").unwrap()), "3/2");
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("x").is_err());
    }

    #[test]
    fn sqrt_exact_cases() {
        assert_eq!(exact_sqrt(&rat(9, 4)), Some(rat(3, 2)));
        assert_eq!(exact_sqrt(&rat_int(0)), Some(rat_int(0)));
        assert_eq!(exact_sqrt(&rat_int(2)), None);
        assert_eq!(exact_sqrt(&rat(-1, 4)), None);
    }

    #[test]
    fn probe_grid_contains_values_and_midpoints() {
        let vals = vec![rat(1, 4), rat(1, 2), rat_int(1)];
        let grid = probe_grid(&vals);
        assert_eq!(
            grid,
            vec![rat(1, 4), rat(3, 8), rat(1, 2), rat(3, 4), rat_int(1)]
        );
    }
}

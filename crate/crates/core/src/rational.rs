//! Exact rational arithmetic helpers.
//!
//! All 1D geometry runs on `BigRational`. IEEE doubles embed exactly
//! (every finite f64 is a dyadic rational), so float-configured systems
//! share the same code path as declared-exact ones.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Parses "p/q" or a plain integer "p".
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let parse_int = |part: &str| -> Result<BigInt> {
        part.trim()
            .parse::<BigInt>()
            .map_err(|e| Error::Parse(format!("bad integer {part:?}: {e}")))
    };
    match s.split_once('/') {
        Some((p, q)) => {
            let p = parse_int(p)?;
            let q = parse_int(q)?;
            if q.is_zero() {
                return Err(Error::Parse(format!("zero denominator in {s:?}")));
            }
            Ok(Rational::new(p, q))
        }
        None => Ok(Rational::from_integer(parse_int(s)?)),
    }
}

/// Exact embedding of a finite f64.
pub fn rational_from_f64(x: f64) -> Result<Rational> {
    Rational::from_float(x).ok_or_else(|| Error::Parse(format!("non-finite value {x}")))
}

pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// "p/q", or "p" when the denominator is 1.
pub fn format_rational(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn rational(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

/// q^k for signed k (q must be nonzero when k < 0).
pub fn pow_i(q: &Rational, k: i64) -> Rational {
    if k >= 0 {
        num_traits::pow::pow(q.clone(), k as usize)
    } else {
        num_traits::pow::pow(q.clone(), (-k) as usize)
            .recip()
    }
}

/// Exact k-th root when both numerator and denominator are perfect k-th
/// powers; `None` otherwise. Requires a positive argument.
pub fn rational_nth_root(x: &Rational, k: u32) -> Option<Rational> {
    if !x.is_positive() || k == 0 {
        return None;
    }
    let root = |n: &BigInt| -> Option<BigInt> {
        let r = n.nth_root(k);
        if num_traits::pow::pow(r.clone(), k as usize) == *n {
            Some(r)
        } else {
            None
        }
    };
    let p = root(x.numer())?;
    let q = root(x.denom())?;
    Some(Rational::new(p, q))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format() {
        assert_eq!(parse_rational("1/4").unwrap(), rational(1, 4));
        assert_eq!(parse_rational("0").unwrap(), Rational::zero());
        assert_eq!(parse_rational("-3/6").unwrap(), rational(-1, 2));
        assert_eq!(format_rational(&rational(3, 6)), "1/2");
        assert_eq!(format_rational(&rational(5, 1)), "5");
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("a/b").is_err());
    }

    #[test]
    fn f64_embedding_is_exact() {
        assert_eq!(rational_from_f64(0.25).unwrap(), rational(1, 4));
        assert_eq!(rational_from_f64(0.5).unwrap(), rational(1, 2));
        let x = 0.1;
        let q = rational_from_f64(x).unwrap();
        assert_eq!(to_f64(&q), x);
        assert!(rational_from_f64(f64::INFINITY).is_err());
    }

    #[test]
    fn powers_and_roots() {
        assert_eq!(pow_i(&rational(1, 2), 3), rational(1, 8));
        assert_eq!(pow_i(&rational(1, 2), -2), rational(4, 1));
        assert_eq!(pow_i(&rational(7, 3), 0), Rational::one());
        assert_eq!(rational_nth_root(&rational(1, 4), 2), Some(rational(1, 2)));
        assert_eq!(rational_nth_root(&rational(8, 27), 3), Some(rational(2, 3)));
        assert_eq!(rational_nth_root(&rational(1, 3), 2), None);
    }
}

//! Exact rational arithmetic: pole bookkeeping and the test oracle.
//!
//! Every prior and posterior in this crate has poles and roots that are
//! rational in the inputs (a, c, counts, and dyadic f64 values), so pole
//! collision checks run in exact arithmetic and the residue formulas admit
//! an exact rational oracle.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = num_rational::BigRational;

/// Exact rational from an f64 (every finite f64 is a dyadic rational).
pub fn rational_from_f64(x: f64) -> Result<Rational> {
    Rational::from_float(x).ok_or_else(|| Error::Domain(format!("{x} is not finite")))
}

/// Parse "3/2", "1.5", or "2" into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad rational numerator in {s:?}")))?;
        let d: BigInt = d
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad rational denominator in {s:?}")))?;
        if d.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(Rational::new(n, d));
    }
    if let Ok(n) = s.parse::<BigInt>() {
        return Ok(Rational::from_integer(n));
    }
    let x: f64 = s
        .parse()
        .map_err(|_| Error::Parse(format!("cannot parse {s:?} as a rational or decimal")))?;
    rational_from_f64(x)
}

fn ln_abs_bigint(x: &BigInt) -> f64 {
    debug_assert!(!x.is_zero());
    if let Some(v) = x.to_f64() {
        if v.is_finite() && v != 0.0 {
            return v.abs().ln();
        }
    }
    // Too large for f64: peel the leading 64 bits.
    let bits = x.bits();
    let shifted = (x.abs() >> (bits - 64)).to_f64().unwrap_or(f64::MAX);
    shifted.ln() + (bits - 64) as f64 * std::f64::consts::LN_2
}

/// Natural log of |r|, robust to magnitudes outside the f64 range.
pub fn ln_abs(r: &Rational) -> f64 {
    if r.is_zero() {
        return f64::NEG_INFINITY;
    }
    ln_abs_bigint(r.numer()) - ln_abs_bigint(r.denom())
}

/// Best-effort f64 value of `r`, via logs when the parts overflow.
pub fn to_f64(r: &Rational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    let sign = if r.is_negative() { -1.0 } else { 1.0 };
    sign * ln_abs(r).exp()
}

/// Display as "n/d" (or "n" for integers): used for config echoes.
pub fn to_string(r: &Rational) -> String {
    if r.denom() == &BigInt::from(1) {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_traits::One;

    #[test]
    fn parse_forms() {
        assert_eq!(parse_rational("3/2").unwrap(), Rational::new(3.into(), 2.into()));
        assert_eq!(parse_rational(" 2 ").unwrap(), Rational::from_integer(2.into()));
        assert_eq!(parse_rational("1.5").unwrap(), Rational::new(3.into(), 2.into()));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
    }

    #[test]
    fn ln_abs_handles_huge_values() {
        let big = Rational::from_integer(BigInt::from(10u32).pow(400));
        assert_relative_eq!(ln_abs(&big), 400.0 * 10f64.ln(), max_relative = 1e-12);
        let tiny = Rational::one() / big;
        assert_relative_eq!(ln_abs(&tiny), -400.0 * 10f64.ln(), max_relative = 1e-12);
    }

    #[test]
    fn f64_projection() {
        let r = Rational::new(7.into(), 8.into());
        assert_eq!(to_f64(&r), 0.875);
    }
}

//! Thin wrapper over `astro-float` used for the Extended precision path.
//!
//! Residue coefficients are products of exactly representable rationals, so
//! the extended path only needs multiply/divide/add plus `ln` and `exp` at a
//! fixed mantissa width. A per-thread constants cache keeps repeated `ln`
//! calls cheap.

use std::cell::RefCell;

use astro_float::{BigFloat, Consts, RoundingMode, Sign};
use num_bigint::BigInt;
use num_traits::Signed as _;

use crate::numeric::exact::Rational;
use crate::numeric::signed::SignedLogReal;

thread_local! {
    static CONSTS: RefCell<Consts> =
        RefCell::new(Consts::new().expect("allocate astro-float constants cache"));
}

const RM: RoundingMode = RoundingMode::ToEven;

/// Arithmetic context pinning the mantissa width.
pub struct XCtx {
    p: usize,
}

/// Run `f` with an extended-precision context of `bits` mantissa bits.
pub fn with_ctx<T>(bits: u32, f: impl FnOnce(&mut XCtx) -> T) -> T {
    let mut ctx = XCtx { p: bits as usize };
    f(&mut ctx)
}

impl XCtx {
    pub fn bits(&self) -> u32 {
        self.p as u32
    }

    pub fn zero(&self) -> BigFloat {
        BigFloat::from_f64(0.0, self.p)
    }

    pub fn one(&self) -> BigFloat {
        BigFloat::from_f64(1.0, self.p)
    }

    pub fn from_f64(&self, x: f64) -> BigFloat {
        BigFloat::from_f64(x, self.p)
    }

    pub fn from_i64(&self, x: i64) -> BigFloat {
        BigFloat::from_i64(x, self.p)
    }

    fn from_bigint(&self, x: &BigInt) -> BigFloat {
        // Exact: feed the magnitude 32 bits at a time, then apply the sign.
        let (sign, digits) = x.to_u32_digits();
        let mut acc = self.zero();
        let shift = BigFloat::from_u64(1u64 << 32, self.p);
        for d in digits.iter().rev() {
            acc = acc.mul(&shift, self.p, RM);
            acc = acc.add(&BigFloat::from_u32(*d, self.p), self.p, RM);
        }
        if sign == num_bigint::Sign::Minus {
            acc.inv_sign();
        }
        acc
    }

    /// Exact conversion of a rational followed by one rounded division.
    pub fn from_rational(&self, r: &Rational) -> BigFloat {
        let n = self.from_bigint(r.numer());
        let d = self.from_bigint(r.denom());
        n.div(&d, self.p, RM)
    }

    pub fn add(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.add(b, self.p, RM)
    }

    pub fn sub(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.sub(b, self.p, RM)
    }

    pub fn mul(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.mul(b, self.p, RM)
    }

    pub fn div(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.div(b, self.p, RM)
    }

    pub fn neg(&self, a: &BigFloat) -> BigFloat {
        a.neg()
    }

    pub fn ln(&self, a: &BigFloat) -> BigFloat {
        CONSTS.with(|cc| a.ln(self.p, RM, &mut cc.borrow_mut()))
    }

    pub fn exp(&self, a: &BigFloat) -> BigFloat {
        CONSTS.with(|cc| a.exp(self.p, RM, &mut cc.borrow_mut()))
    }

    /// ln of a positive rational, exact up to the final rounding.
    pub fn ln_rational(&self, r: &Rational) -> BigFloat {
        debug_assert!(r.is_positive());
        let ln_n = self.ln(&self.from_bigint(r.numer()));
        let ln_d = self.ln(&self.from_bigint(r.denom()));
        self.sub(&ln_n, &ln_d)
    }

    pub fn to_f64(&self, a: &BigFloat) -> f64 {
        to_f64(a)
    }

    /// Collapse to a sign plus f64 log-magnitude.
    pub fn to_signed_log(&self, a: &BigFloat) -> SignedLogReal {
        if a.is_zero() {
            return SignedLogReal::zero();
        }
        let sign = match a.sign() {
            Some(Sign::Neg) => -1,
            _ => 1,
        };
        let mut abs = a.clone();
        abs.set_sign(Sign::Pos);
        let lm = to_f64(&self.ln(&abs));
        SignedLogReal::from_parts(sign, lm)
    }
}

/// Lossy conversion to f64 (astro-float exposes no public one).
pub fn to_f64(a: &BigFloat) -> f64 {
    if a.is_zero() {
        return 0.0;
    }
    if a.is_inf_pos() {
        return f64::INFINITY;
    }
    if a.is_inf_neg() {
        return f64::NEG_INFINITY;
    }
    if a.is_nan() {
        return f64::NAN;
    }
    let Some((words, _n, sign, e, _)) = a.as_raw_parts() else {
        return f64::NAN;
    };
    // Words are little-endian; value = frac * 2^e with frac in [0.5, 1).
    let len = words.len();
    let mut frac = words[len - 1] as f64 * 2f64.powi(-64);
    if len >= 2 {
        frac += words[len - 2] as f64 * 2f64.powi(-128);
    }
    // Split the exponent so subnormal-range results survive the scaling.
    let e = e as i32;
    let h1 = e / 2;
    let h2 = e - h1;
    let v = frac * 2f64.powi(h1) * 2f64.powi(h2);
    if sign == Sign::Neg {
        -v
    } else {
        v
    }
}

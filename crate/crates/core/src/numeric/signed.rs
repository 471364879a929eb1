//! Signed log-space reals and cancellation-aware summation.
//!
//! Residue coefficients alternate in sign and span hundreds of orders of
//! magnitude, so every cancellation-prone sum in this crate runs through
//! [`SignedLogReal`] terms and [`signed_log_sum`]. The sum reports a
//! cancellation diagnostic (nats lost between the largest term and the
//! result) which drives the Double -> Extended -> quadrature escalation
//! policy.

use crate::error::{Error, Result};
use crate::numeric::xfloat::{self, XCtx};

/// A real number stored as a sign and the natural log of its magnitude.
///
/// `sign == 0` represents exact zero; `logmag` is ignored in that case.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignedLogReal {
    sign: i8,
    logmag: f64,
}

impl SignedLogReal {
    pub const fn zero() -> Self {
        SignedLogReal {
            sign: 0,
            logmag: f64::NEG_INFINITY,
        }
    }

    /// Build from an explicit sign and log-magnitude. Panics on a sign
    /// outside {-1, 0, 1}.
    pub fn from_parts(sign: i8, logmag: f64) -> Self {
        assert!(
            sign == -1 || sign == 0 || sign == 1,
            "sign must be -1, 0 or 1"
        );
        if sign == 0 || logmag == f64::NEG_INFINITY {
            Self::zero()
        } else {
            SignedLogReal { sign, logmag }
        }
    }

    pub fn from_real(x: f64) -> Self {
        if x == 0.0 {
            Self::zero()
        } else {
            SignedLogReal {
                sign: if x > 0.0 { 1 } else { -1 },
                logmag: x.abs().ln(),
            }
        }
    }

    /// Exponentiate back to a plain f64; overflows to +/-inf.
    pub fn to_real(self) -> f64 {
        match self.sign {
            0 => 0.0,
            s => f64::from(s) * self.logmag.exp(),
        }
    }

    pub fn sign(self) -> i8 {
        self.sign
    }

    /// Natural log of |x|; `-inf` for zero.
    pub fn logmag(self) -> f64 {
        if self.sign == 0 {
            f64::NEG_INFINITY
        } else {
            self.logmag
        }
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    pub fn abs(self) -> Self {
        SignedLogReal {
            sign: self.sign.abs(),
            logmag: self.logmag,
        }
    }

    pub fn recip(self) -> Self {
        SignedLogReal {
            sign: self.sign,
            logmag: -self.logmag,
        }
    }
}

impl std::ops::Neg for SignedLogReal {
    type Output = Self;
    fn neg(self) -> Self {
        SignedLogReal {
            sign: -self.sign,
            logmag: self.logmag,
        }
    }
}

impl std::ops::Mul for SignedLogReal {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        if self.sign == 0 || rhs.sign == 0 {
            Self::zero()
        } else {
            SignedLogReal {
                sign: self.sign * rhs.sign,
                logmag: self.logmag + rhs.logmag,
            }
        }
    }
}

impl std::ops::Div for SignedLogReal {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        if self.sign == 0 {
            Self::zero()
        } else {
            SignedLogReal {
                sign: self.sign * rhs.sign,
                logmag: self.logmag - rhs.logmag,
            }
        }
    }
}

/// Working precision for residue computations and signed-log sums.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Precision {
    Double,
    /// Software floating point with the given mantissa width in bits.
    Extended(u32),
}

impl Precision {
    pub fn validate(self) -> Result<Self> {
        match self {
            Precision::Extended(bits) if bits < 128 => Err(Error::Domain(format!(
                "extended precision requires at least 128 bits, got {bits}"
            ))),
            p => Ok(p),
        }
    }

    /// Mantissa width expressed in nats.
    pub fn nats(self) -> f64 {
        let bits = match self {
            Precision::Double => 53,
            Precision::Extended(b) => b,
        };
        f64::from(bits) * std::f64::consts::LN_2
    }

    /// Default cancellation threshold: 30 nats in Double, scaled up with
    /// the mantissa width so the reserve of usable digits stays the same.
    pub fn cancellation_threshold(self) -> f64 {
        30.0 + (self.nats() - Precision::Double.nats())
    }
}

impl Default for Precision {
    fn default() -> Self {
        Precision::Double
    }
}

/// Result of a signed-log sum: the value plus a cancellation diagnostic
/// `log(max |term|) - log |result|` in nats. Exact zero reports +inf.
#[derive(Clone, Copy, Debug)]
pub struct LogSum {
    pub value: SignedLogReal,
    pub cancellation_nats: f64,
}

impl LogSum {
    /// True when the diagnostic stays below the threshold for `precision`.
    pub fn within(&self, precision: Precision) -> bool {
        self.cancellation_nats <= precision.cancellation_threshold()
    }
}

fn log_sum_exp(logs: &[f64]) -> f64 {
    let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let s: f64 = logs.iter().map(|&l| (l - m).exp()).sum();
    m + s.ln()
}

/// Sum signed log-space terms in double precision.
pub fn signed_log_sum(terms: &[SignedLogReal]) -> LogSum {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    let mut max_term = f64::NEG_INFINITY;
    for t in terms {
        match t.sign() {
            0 => {}
            1 => pos.push(t.logmag()),
            _ => neg.push(t.logmag()),
        }
        max_term = max_term.max(t.logmag());
    }
    if pos.is_empty() && neg.is_empty() {
        return LogSum {
            value: SignedLogReal::zero(),
            cancellation_nats: 0.0,
        };
    }
    let lp = log_sum_exp(&pos);
    let ln = log_sum_exp(&neg);
    let value = if ln == f64::NEG_INFINITY {
        SignedLogReal::from_parts(1, lp)
    } else if lp == f64::NEG_INFINITY {
        SignedLogReal::from_parts(-1, ln)
    } else if lp == ln {
        SignedLogReal::zero()
    } else {
        let (sign, hi, lo) = if lp > ln { (1, lp, ln) } else { (-1, ln, lp) };
        // log(e^hi - e^lo) = hi + log(1 - e^(lo-hi))
        SignedLogReal::from_parts(sign, hi + (-((lo - hi).exp())).ln_1p())
    };
    let cancellation = if value.is_zero() {
        f64::INFINITY
    } else {
        max_term - value.logmag()
    };
    LogSum {
        value,
        cancellation_nats: cancellation.max(0.0),
    }
}

/// Sum signed log-space terms at the requested precision.
///
/// Extended mode treats each `logmag` as an exact input, exponentiates at
/// the full mantissa width, and sums without intermediate rounding loss.
pub fn signed_log_sum_in(terms: &[SignedLogReal], precision: Precision) -> LogSum {
    match precision {
        Precision::Double => signed_log_sum(terms),
        Precision::Extended(bits) => xfloat::with_ctx(bits, |ctx| signed_log_sum_x(terms, ctx)),
    }
}

fn signed_log_sum_x(terms: &[SignedLogReal], ctx: &mut XCtx) -> LogSum {
    let mut acc = ctx.zero();
    let mut max_term = f64::NEG_INFINITY;
    let mut any = false;
    for t in terms {
        if t.sign() == 0 {
            continue;
        }
        any = true;
        max_term = max_term.max(t.logmag());
        let mut e = ctx.exp(&ctx.from_f64(t.logmag()));
        if t.sign() < 0 {
            e = ctx.neg(&e);
        }
        acc = ctx.add(&acc, &e);
    }
    if !any {
        return LogSum {
            value: SignedLogReal::zero(),
            cancellation_nats: 0.0,
        };
    }
    let value = ctx.to_signed_log(&acc);
    let cancellation = if value.is_zero() {
        f64::INFINITY
    } else {
        (max_term - value.logmag()).max(0.0)
    };
    LogSum {
        value,
        cancellation_nats: cancellation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn round_trip_preserves_value() {
        for &x in &[1.0, -2.5, 1e-30, -3.7e40, 0.0, 6.02e23] {
            let s = SignedLogReal::from_real(x);
            if x == 0.0 {
                assert!(s.is_zero());
                assert_eq!(s.to_real(), 0.0);
            } else {
                assert_relative_eq!(s.to_real(), x, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn simple_sum() {
        // 3 - 1 = 2
        let terms = [
            SignedLogReal::from_real(3.0),
            SignedLogReal::from_real(-1.0),
        ];
        let s = signed_log_sum(&terms);
        assert_relative_eq!(s.value.to_real(), 2.0, max_relative = 1e-14);
    }

    #[test]
    fn perfect_cancellation_is_exact_zero() {
        let x = SignedLogReal::from_parts(1, 1.2345);
        let s = signed_log_sum(&[x, -x]);
        assert!(s.value.is_zero());
        assert!(s.cancellation_nats.is_infinite());
    }

    #[test]
    fn extended_matches_double_on_benign_sums() {
        let terms: Vec<_> = [1.5, -0.25, 3.0, -1.0, 0.125]
            .iter()
            .map(|&x| SignedLogReal::from_real(x))
            .collect();
        let d = signed_log_sum(&terms);
        let e = signed_log_sum_in(&terms, Precision::Extended(256));
        assert_relative_eq!(d.value.to_real(), e.value.to_real(), max_relative = 1e-13);
        assert_relative_eq!(d.value.to_real(), 3.375, max_relative = 1e-13);
    }

    #[test]
    fn threshold_scales_with_precision() {
        assert_relative_eq!(Precision::Double.cancellation_threshold(), 30.0);
        let ext = Precision::Extended(256).cancellation_threshold();
        assert!(ext > 160.0 && ext < 180.0);
    }

    #[test]
    fn precision_validation() {
        assert!(Precision::Extended(64).validate().is_err());
        assert!(Precision::Extended(256).validate().is_ok());
    }
}

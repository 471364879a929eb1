//! Rising factorial [x]^n = x(x+1)...(x+n-1) in log space.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::numeric::signed::SignedLogReal;

/// ln [x]^n for x > 0, via the log-gamma difference lnG(x+n) - lnG(x).
///
/// Small n is summed directly (the gamma difference would cancel), and very
/// large x switches to a `ln_1p` form for the same reason.
pub fn log_rising(x: f64, n: u64) -> Result<f64> {
    if n == 0 {
        return Ok(0.0);
    }
    if !(x > 0.0) {
        return Err(Error::Domain(format!(
            "log_rising requires x > 0 when n >= 1, got x = {x}"
        )));
    }
    if x > 1e6 {
        // x dwarfs the increments; lnG(x+n) - lnG(x) would lose digits.
        let mut s = n as f64 * x.ln();
        for i in 1..n {
            s += (i as f64 / x).ln_1p();
        }
        return Ok(s);
    }
    if n <= 12 {
        let mut s = 0.0;
        for i in 0..n {
            s += (x + i as f64).ln();
        }
        return Ok(s);
    }
    Ok(ln_gamma(x + n as f64) - ln_gamma(x))
}

/// The product x(x+1)...(x+n-1) for any real x, as a signed log value.
/// Exact zero whenever some factor vanishes.
pub fn signed_rising(x: f64, n: u64) -> SignedLogReal {
    let mut sign: i8 = 1;
    let mut logmag = 0.0;
    for i in 0..n {
        let f = x + i as f64;
        if f == 0.0 {
            return SignedLogReal::zero();
        }
        if f < 0.0 {
            sign = -sign;
        }
        logmag += f.abs().ln();
    }
    SignedLogReal::from_parts(sign, logmag)
}

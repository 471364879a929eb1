//! Scalar root bracketing for monotone CDFs.

use crate::error::{Error, Result};

/// Invert a non-decreasing function on [0, inf): find x with
/// |f(x) - u| <= f_tol (or the bisection limit of the bracket).
pub fn increasing_quantile(
    f: impl Fn(f64) -> Result<f64>,
    u: f64,
    f_tol: f64,
) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Domain(format!("quantile needs u in (0,1), got {u}")));
    }
    let mut hi = 1.0;
    let mut fhi = f(hi)?;
    let mut guard = 0;
    while fhi < u {
        hi *= 2.0;
        fhi = f(hi)?;
        guard += 1;
        if guard > 1100 {
            return Err(Error::Domain(format!("quantile bracket failed for u = {u}")));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let fm = f(mid)?;
        if (fm - u).abs() <= f_tol {
            return Ok(mid);
        }
        if fm < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

//! Adaptive Gauss-Kronrod quadrature on (0, inf) for log-integrands.
//!
//! This is the independent oracle for every closed-form normalizer in the
//! crate. The half line is mapped to (0, 1) by alpha = t/(1-t); the
//! integrand is supplied in log form and shifted by its approximate maximum
//! so that polynomially decaying densities with tiny normalizers neither
//! overflow nor underflow.

use crate::error::{Error, Result};

// 15-point Kronrod rule with embedded 7-point Gauss rule (QUADPACK dqk15).
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Tuning knobs for the adaptive integrator.
#[derive(Clone, Copy, Debug)]
pub struct QuadConfig {
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            rel_tol: 1e-10,
            max_panels: 4000,
        }
    }
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        kronrod += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    (value, error)
}

/// ln of the integral of exp(log_f) over (0, 1), adaptively refined until
/// the error estimate drops below `rel_tol` times the running value.
fn integrate_unit_log(log_f: &dyn Fn(f64) -> f64, rel_tol: f64, config: QuadConfig) -> Result<f64> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::Domain(format!(
            "quadrature tolerance must lie in (0, 1), got {rel_tol}"
        )));
    }
    let scan = 512;
    let mut offset = f64::NEG_INFINITY;
    for i in 1..scan {
        let t = i as f64 / scan as f64;
        let v = log_f(t);
        if v.is_nan() {
            return Err(Error::Domain(format!("integrand is NaN at t = {t}")));
        }
        offset = offset.max(v);
    }
    if offset == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let h = move |t: f64| {
        let v = log_f(t) - offset;
        if v == f64::NEG_INFINITY {
            0.0
        } else {
            v.exp()
        }
    };

    let mut panels: Vec<Panel> = Vec::new();
    let seeds = 16;
    for i in 0..seeds {
        let a = i as f64 / seeds as f64;
        let b = (i + 1) as f64 / seeds as f64;
        let (value, error) = gk15(&h, a, b);
        panels.push(Panel { a, b, value, error });
    }

    loop {
        let total: f64 = panels.iter().map(|p| p.value).sum();
        let err: f64 = panels.iter().map(|p| p.error).sum();
        if total > 0.0 && err <= rel_tol * total.abs() {
            return Ok(total.ln() + offset);
        }
        if panels.len() >= config.max_panels {
            return Err(Error::QuadratureBudget {
                tol: rel_tol,
                panels: panels.len(),
            });
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .expect("panel list is non-empty");
        let Panel { a, b, .. } = panels.swap_remove(worst);
        let mid = 0.5 * (a + b);
        for (lo, hi) in [(a, mid), (mid, b)] {
            let (value, error) = gk15(&h, lo, hi);
            panels.push(Panel {
                a: lo,
                b: hi,
                value,
                error,
            });
        }
    }
}

/// ln of the integral of exp(log_f) over (0, inf), with estimated relative
/// error at most `rel_tol`.
pub fn integrate_halfline_log(
    log_f: impl Fn(f64) -> f64,
    rel_tol: f64,
    config: QuadConfig,
) -> Result<f64> {
    let g = |t: f64| {
        let alpha = t / (1.0 - t);
        log_f(alpha) - 2.0 * (1.0 - t).ln()
    };
    integrate_unit_log(&g, rel_tol, config)
}

/// Integral of exp(log_f) over (0, inf). Overflows to +inf if the value
/// exceeds the f64 range; use [`integrate_halfline_log`] for normalizers.
pub fn integrate_halfline(log_f: impl Fn(f64) -> f64, rel_tol: f64) -> Result<f64> {
    integrate_halfline_log(log_f, rel_tol, QuadConfig::default()).map(f64::exp)
}

/// ln of the integral of exp(log_f) over the finite prefix (0, x).
///
/// Uses the same alpha = t/(1-t) transform truncated at t = x/(1+x), so a
/// density concentrated near the origin stays resolvable even when `x` is
/// many orders of magnitude past the mass.
pub fn integrate_prefix_log(
    log_f: impl Fn(f64) -> f64,
    x: f64,
    rel_tol: f64,
    config: QuadConfig,
) -> Result<f64> {
    if x <= 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let t_max = x / (1.0 + x);
    let g = |t: f64| {
        let tt = t * t_max;
        let alpha = tt / (1.0 - tt);
        log_f(alpha) - 2.0 * (1.0 - tt).ln() + t_max.ln()
    };
    integrate_unit_log(&g, rel_tol, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exponential_integral() {
        let v = integrate_halfline(|a| -a, 1e-10).unwrap();
        assert_relative_eq!(v, 1.0, max_relative = 1e-9);
    }

    #[test]
    fn two_pole_rational() {
        // int 1/((a+1)(a+2)) = ln 2
        let v = integrate_halfline(|a| -((a + 1.0) * (a + 2.0)).ln(), 1e-10).unwrap();
        assert_relative_eq!(v, std::f64::consts::LN_2, max_relative = 1e-9);
    }

    #[test]
    fn three_pole_rational() {
        // Partial fractions (1/2)/(a+1) - 1/(a+2) + (1/2)/(a+3):
        // integral = ln 2 - (ln 3)/2
        let v = integrate_halfline(|a| -((a + 1.0) * (a + 2.0) * (a + 3.0)).ln(), 1e-10).unwrap();
        assert_relative_eq!(v, 2f64.ln() - 3f64.ln() / 2.0, max_relative = 1e-9);
    }

    #[test]
    fn log_form_handles_tiny_normalizers() {
        // int exp(-1000) e^{-a} da = e^{-1000}: underflows in linear space.
        let v = integrate_halfline_log(|a| -a - 1000.0, 1e-10, QuadConfig::default()).unwrap();
        assert_relative_eq!(v, -1000.0, max_relative = 1e-12);
    }

    #[test]
    fn prefix_integral() {
        // int_0^2 e^{-a} da = 1 - e^{-2}
        let v = integrate_prefix_log(|a| -a, 2.0, 1e-10, QuadConfig::default()).unwrap();
        assert_relative_eq!(v.exp(), 1.0 - (-2f64).exp(), max_relative = 1e-9);
    }

    #[test]
    fn budget_error_on_impossible_tolerance() {
        let cfg = QuadConfig {
            rel_tol: 1e-10,
            max_panels: 4,
        };
        // Needle integrand needs more than 4 panels.
        let r = integrate_halfline_log(|a| -(a - 3.0).powi(2) * 1e8, 1e-12, cfg);
        assert!(matches!(r, Err(Error::QuadratureBudget { .. })));
    }

    #[test]
    fn rejects_bad_tolerance() {
        assert!(integrate_halfline(|a| -a, 0.0).is_err());
        assert!(integrate_halfline(|a| -a, 1.5).is_err());
    }
}

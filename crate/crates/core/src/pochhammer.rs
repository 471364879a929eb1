//! The Pochhammer (PH) and Power Pochhammer (PPH) distribution family.
//!
//! `PPH(m, a, b, c, d)` has density proportional to
//! `alpha^d [alpha]^m / [c alpha + a]^b` on the half line; `PH` is the
//! `d = 0` case. The family is integrable when `b >= m + d + 2` and has
//! exactly `b - (m + d + 2)` finite moments. With `m = 0, b = 2` the
//! density keeps a finite positive mass at zero and a polynomial right
//! tail, the "half-horseshoe" shape used as the default shrinkage prior.
//!
//! Densities and CDFs are evaluated through log-gamma forms; the residue
//! expansion is reserved for normalizers, the closed-form CDF, and moments,
//! where its coefficients are exact rational products.

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::exact::{self, Rational};
use crate::numeric::quad::{self, QuadConfig};
use crate::numeric::rising::log_rising;
use crate::numeric::rng::{RngSuite, Seed};
use crate::residue::{ExpandPolicy, RationalForm, ResidueExpansion};

/// The tuple (m, a, b, c, d) defining a PH/PPH distribution.
///
/// `a` and `c` are carried as exact rationals (every f64 is a dyadic
/// rational) so pole collisions downstream are decided exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct PochhammerParams {
    m: u32,
    b: u32,
    d: u32,
    a: Rational,
    c: Rational,
    af: f64,
    cf: f64,
}

impl PochhammerParams {
    /// Plain PH prior (d = 0).
    pub fn new(m: u32, a: f64, b: u32, c: f64) -> Result<Self> {
        Self::pph(m, a, b, c, 0)
    }

    /// Power-Pochhammer with tilt `d`.
    pub fn pph(m: u32, a: f64, b: u32, c: f64, d: u32) -> Result<Self> {
        let a = exact::rational_from_f64(a)?;
        let c = exact::rational_from_f64(c)?;
        Self::from_rational(m, a, b, c, d)
    }

    /// Construct from exact rational `a`, `c` (the CLI accepts "3/2" forms).
    pub fn from_rational(m: u32, a: Rational, b: u32, c: Rational, d: u32) -> Result<Self> {
        if !c.is_positive() {
            return Err(Error::Domain("c must be positive".into()));
        }
        if a.is_negative() {
            return Err(Error::Domain("a must be non-negative".into()));
        }
        // a = 0 puts a pole at the origin; the numerator zero from [alpha]^m
        // cancels it only when m >= 1 (the double-root prior family).
        if a.is_zero() && m == 0 {
            return Err(Error::NotIntegrable(
                "a = 0 requires m >= 1 for integrability at the origin".into(),
            ));
        }
        if b < m + d + 2 {
            return Err(Error::NotIntegrable(format!(
                "integrability needs b >= m + d + 2, got b = {b}, m = {m}, d = {d}"
            )));
        }
        let af = exact::to_f64(&a);
        let cf = exact::to_f64(&c);
        Ok(PochhammerParams {
            m,
            b,
            d,
            a,
            c,
            af,
            cf,
        })
    }

    /// The recommended default prior: PH(m=0, a=1, b=2, c=1), the
    /// half-horseshoe with the strongest shrinkage.
    pub fn half_horseshoe() -> Self {
        Self::new(0, 1.0, 2, 1.0).expect("default prior parameters are valid")
    }

    pub fn m(&self) -> u32 {
        self.m
    }
    pub fn b(&self) -> u32 {
        self.b
    }
    pub fn d(&self) -> u32 {
        self.d
    }
    pub fn a(&self) -> f64 {
        self.af
    }
    pub fn c(&self) -> f64 {
        self.cf
    }
    pub fn a_exact(&self) -> &Rational {
        &self.a
    }
    pub fn c_exact(&self) -> &Rational {
        &self.c
    }

    /// Number of finite moments: b - (m + d + 2).
    pub fn available_moments(&self) -> i64 {
        i64::from(self.b) - i64::from(self.m + self.d + 2)
    }

    /// Unnormalized density as an exactly factored rational form.
    pub fn unnormalized_form(&self) -> RationalForm {
        let mut f = RationalForm::new();
        f.mul_power_num(u64::from(self.d));
        f.mul_rising_num(&Rational::zero(), u64::from(self.m));
        f.mul_scaled_rising_den(&self.a, &self.c, u64::from(self.b));
        f.reduce();
        f
    }

    /// A copy tilted by `alpha^k` (used for moments).
    pub fn tilt(&self, k: u32) -> Result<Self> {
        Self::from_rational(self.m, self.a.clone(), self.b, self.c.clone(), self.d + k)
    }
}

// Serialized as {m, a, b, c, d} with a and c as exact rational strings.
#[derive(Serialize, Deserialize)]
struct ParamsWire {
    m: u32,
    a: String,
    b: u32,
    c: String,
    #[serde(default)]
    d: u32,
}

impl Serialize for PochhammerParams {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ParamsWire {
            m: self.m,
            a: exact::to_string(&self.a),
            b: self.b,
            c: exact::to_string(&self.c),
            d: self.d,
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for PochhammerParams {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let w = ParamsWire::deserialize(de)?;
        let a = exact::parse_rational(&w.a).map_err(serde::de::Error::custom)?;
        let c = exact::parse_rational(&w.c).map_err(serde::de::Error::custom)?;
        PochhammerParams::from_rational(w.m, a, w.b, c, w.d).map_err(serde::de::Error::custom)
    }
}

impl std::fmt::Display for PochhammerParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.d == 0 {
            write!(
                f,
                "PH(m={}, a={}, b={}, c={})",
                self.m,
                exact::to_string(&self.a),
                self.b,
                exact::to_string(&self.c)
            )
        } else {
            write!(
                f,
                "PPH(m={}, a={}, b={}, c={}, d={})",
                self.m,
                exact::to_string(&self.a),
                self.b,
                exact::to_string(&self.c),
                self.d
            )
        }
    }
}

/// Residue expansion of a PH prior (d = 0). Coefficients are monic
/// (multiply by `c` to recover the textbook gamma_i over `(c alpha+a+i-1)`).
pub fn ph_residues(p: &PochhammerParams) -> Result<ResidueExpansion> {
    if p.d != 0 {
        return Err(Error::Domain(
            "ph_residues requires d = 0; use pph_residues for tilted priors".into(),
        ));
    }
    pph_residues(p)
}

/// Residue expansion of a PPH prior; reduces exactly to [`ph_residues`]
/// when d = 0 (same code path).
pub fn pph_residues(p: &PochhammerParams) -> Result<ResidueExpansion> {
    pph_residues_with(p, &ExpandPolicy::default())
}

pub fn pph_residues_with(p: &PochhammerParams, policy: &ExpandPolicy) -> Result<ResidueExpansion> {
    p.unnormalized_form().expand(policy)
}

/// Knobs shared by distribution-level evaluators.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Per-evaluation cancellation (nats) above which CDF evaluations leave
    /// the residue form for quadrature.
    pub cdf_cancellation_nats: f64,
    /// Quadrature tolerance for fallback evaluations.
    pub quad_tol: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            cdf_cancellation_nats: 16.0,
            quad_tol: 1e-11,
        }
    }
}

/// A PH/PPH distribution with its normalizer resolved, ready for density,
/// CDF, quantile, moment, and sampling queries.
#[derive(Clone, Debug)]
pub struct Pochhammer {
    params: PochhammerParams,
    form: RationalForm,
    expansion: Option<ResidueExpansion>,
    log_norm: f64,
}

impl Pochhammer {
    pub fn new(params: PochhammerParams) -> Result<Self> {
        Self::with_policy(params, &ExpandPolicy::default())
    }

    pub fn with_policy(params: PochhammerParams, policy: &ExpandPolicy) -> Result<Self> {
        let form = params.unnormalized_form();
        match form.expand(policy) {
            Ok(expansion) => {
                let log_norm = expansion.log_norm_const;
                Ok(Pochhammer {
                    params,
                    form,
                    expansion: Some(expansion),
                    log_norm,
                })
            }
            // Very large b (density curves for the Gamma-limit comparison)
            // skips residues entirely.
            Err(Error::SizeBudget { .. }) => {
                let log_norm = form.integrate_log(policy.quad_tol)?;
                Ok(Pochhammer {
                    params,
                    form,
                    expansion: None,
                    log_norm,
                })
            }
            Err(e) => Err(e),
        }
    }

    pub fn params(&self) -> &PochhammerParams {
        &self.params
    }

    pub fn expansion(&self) -> Option<&ResidueExpansion> {
        self.expansion.as_ref()
    }

    /// ln of the normalizing constant C.
    pub fn log_norm_const(&self) -> f64 {
        self.log_norm
    }

    /// ln p(alpha), via log-gamma forms (stable at large alpha).
    pub fn log_density(&self, alpha: f64) -> Result<f64> {
        if alpha < 0.0 || !alpha.is_finite() {
            return Err(Error::Domain(format!("alpha must be >= 0, got {alpha}")));
        }
        let p = &self.params;
        if alpha == 0.0 {
            if p.d > 0 || (p.m >= 1 && !p.a.is_zero()) {
                return Ok(f64::NEG_INFINITY);
            }
            // m = d = 0 (finite spike), or the a = 0 family where the
            // origin zero and pole cancel: the reduced form is finite.
            return Ok(self.form.log_density_at(0.0) - self.log_norm);
        }
        let num = f64::from(p.d) * alpha.ln() + log_rising(alpha, u64::from(p.m))?;
        let den = log_rising(p.cf * alpha + p.af, u64::from(p.b))?;
        Ok(num - den - self.log_norm)
    }

    pub fn density(&self, alpha: f64) -> Result<f64> {
        Ok(self.log_density(alpha)?.exp())
    }

    /// F(x) by term-by-term integration of the residue form, falling back
    /// to quadrature of the stable log-density when the evaluation cancels
    /// too hard (or when no expansion exists).
    pub fn cdf(&self, x: f64) -> Result<f64> {
        self.cdf_with(x, &EvalConfig::default())
    }

    pub fn cdf_with(&self, x: f64, cfg: &EvalConfig) -> Result<f64> {
        if x <= 0.0 {
            return Ok(0.0);
        }
        if let Some(exp) = &self.expansion {
            if !exp.numeric_fallback {
                let (f, cancel) = exp.cdf_checked(x);
                if cancel <= cfg.cdf_cancellation_nats {
                    return Ok(f);
                }
            }
        }
        let log_prefix = quad::integrate_prefix_log(
            |a| self.form.log_density_at(a),
            x,
            cfg.quad_tol,
            QuadConfig::default(),
        )?;
        Ok((log_prefix - self.log_norm).exp().clamp(0.0, 1.0))
    }

    /// 1 - F(x), stable for large x.
    pub fn survival(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            return Ok(1.0);
        }
        if let Some(exp) = &self.expansion {
            if !exp.numeric_fallback {
                return Ok(exp.survival(x));
            }
        }
        Ok(1.0 - self.cdf(x)?)
    }

    /// Inverse CDF by bracketing plus bisection; |F(x) - u| <= 1e-11.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        self.quantile_with(u, &EvalConfig::default(), 1e-11)
    }

    /// Inverse CDF with caller-controlled evaluation strictness (bulk
    /// generation loosens the cancellation threshold to stay on the cheap
    /// residue path; Monte-Carlo noise dwarfs the inversion error).
    pub fn quantile_with(&self, u: f64, cfg: &EvalConfig, f_tol: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Domain(format!("quantile needs u in (0,1), got {u}")));
        }
        let f = |x: f64| self.cdf_with(x, cfg);
        let mut hi = 1.0;
        let mut fhi = f(hi)?;
        let mut guard = 0;
        while fhi < u {
            hi *= 2.0;
            fhi = f(hi)?;
            guard += 1;
            if guard > 1100 {
                return Err(Error::Domain(format!(
                    "quantile bracket failed for u = {u}"
                )));
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

    /// i.i.d. draws by inverse-CDF sampling; deterministic under the seed.
    pub fn sample(&self, n: usize, seed: Seed) -> Result<Vec<f64>> {
        let mut rng = RngSuite::new(seed);
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let mut u = rng.uniform();
            if u == 0.0 {
                u = f64::MIN_POSITIVE;
            }
            out.push(self.quantile(u)?);
        }
        Ok(out)
    }

    /// k-th moment E(alpha^k) as a ratio of tilted normalizers.
    pub fn moment(&self, k: u32) -> Result<f64> {
        let available = self.params.available_moments();
        if i64::from(k) > available {
            return Err(Error::MomentDoesNotExist {
                k,
                available: available.max(0),
            });
        }
        if k == 0 {
            return Ok(1.0);
        }
        let tilted = Pochhammer::new(self.params.tilt(k)?)?;
        Ok((tilted.log_norm - self.log_norm).exp())
    }

    pub fn mean(&self) -> Result<f64> {
        self.moment(1)
    }

    /// Prior mass within sqrt(eps) of the origin: F(sqrt(eps)).
    pub fn mass_near_zero(&self, eps: f64) -> Result<f64> {
        if eps < 0.0 {
            return Err(Error::Domain("eps must be >= 0".into()));
        }
        self.cdf(eps.sqrt())
    }
}

/// e^{t x} (1 - F(x)) on a grid; diverges for every t > 0 (the heavy-tail
/// certificate), so the trailing values must increase.
pub fn heavy_tail_check(ph: &Pochhammer, t: f64, grid: &[f64]) -> Result<Vec<f64>> {
    heavy_tail_check_log(ph, t, grid).map(|v| v.into_iter().map(f64::exp).collect())
}

/// Log-scale variant: t x + ln(1 - F(x)), guarding overflow.
pub fn heavy_tail_check_log(ph: &Pochhammer, t: f64, grid: &[f64]) -> Result<Vec<f64>> {
    if t < 0.0 {
        return Err(Error::Domain("t must be >= 0".into()));
    }
    grid.iter()
        .map(|&x| Ok(t * x + ph.survival(x)?.ln()))
        .collect()
}

/// Exact sampler for PH(0, 1, b, 1) via the Beta-mixture representation
/// `1/[alpha+1]^b = B(alpha+1, b)/Gamma(b)`: the latent t has density
/// proportional to `(1-t)^{b-1}/ln(1/t)` on (0,1), sampled by rejection
/// from Beta(1, b-1) with acceptance `(1-t)/ln(1/t)`, and
/// `alpha | t ~ Exp(ln(1/t))`. Inverse-CDF sampling would cost O(b) per
/// evaluation, which is hopeless at b = 1000.
pub fn sample_unit_scale_half_horseshoe(b: u32, n: usize, rng: &mut RngSuite) -> Result<Vec<f64>> {
    if b < 3 {
        return Err(Error::Domain(
            "the mixture sampler needs b >= 3 (Beta(1, b-1) envelope)".into(),
        ));
    }
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        // t ~ Beta(1, b-1) by inversion: 1 - u^{1/(b-1)}
        let u = rng.uniform().max(f64::MIN_POSITIVE);
        let t = 1.0 - u.powf(1.0 / f64::from(b - 1));
        let neg_ln_t = -t.ln();
        if !(neg_ln_t > 0.0) {
            continue;
        }
        let accept = (1.0 - t) / neg_ln_t;
        if rng.uniform() < accept {
            let e = -rng.uniform().max(f64::MIN_POSITIVE).ln();
            out.push(e / neg_ln_t);
        }
    }
    Ok(out)
}

/// Kolmogorov-Smirnov distance between a sample and a CDF (sorts in place).
pub fn ks_distance(sample: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sample.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max((f - (i as f64 + 1.0) / n).abs());
    }
    d
}

/// One point of the Gamma-limit experiment.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GammaLimitPoint {
    pub b: u32,
    pub ks_to_exp1: f64,
}

/// Draw alpha from PH(0,1,b,1), rescale by ln b, and measure the KS
/// distance to the unit-rate exponential. The distances shrink as b grows
/// (the limit law `alpha ln b -> Exp(1)`).
pub fn stirling_gamma_limit_experiment(
    b_grid: &[u32],
    n: usize,
    seed: Seed,
) -> Result<Vec<GammaLimitPoint>> {
    let mut out = Vec::with_capacity(b_grid.len());
    for (i, &b) in b_grid.iter().enumerate() {
        if b < 3 {
            return Err(Error::Domain("b grid values must be >= 3".into()));
        }
        let mut rng = RngSuite::substream(seed, i as u64);
        let mut draws = sample_unit_scale_half_horseshoe(b, n, &mut rng)?;
        let scale = f64::from(b).ln();
        for x in &mut draws {
            *x *= scale;
        }
        let ks = ks_distance(&mut draws, |x| -(-x).exp_m1());
        out.push(GammaLimitPoint { b, ks_to_exp1: ks });
    }
    Ok(out)
}

/// A labelled density/CDF curve (the CLI writes these as CSV).
#[derive(Clone, Debug)]
pub struct Curve {
    pub label: String,
    /// (alpha, density, cdf) triples.
    pub points: Vec<(f64, f64, f64)>,
}

/// Log-spaced grid from 10^lo to 10^hi.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (n - 1) as f64))
        .collect()
}

fn curve_for(params: PochhammerParams, grid: &[f64]) -> Result<Curve> {
    let label = params.to_string();
    let ph = Pochhammer::new(params)?;
    let points = grid
        .iter()
        .map(|&x| Ok((x, ph.density(x)?, ph.cdf(x)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Curve { label, points })
}

/// Shape-sensitivity curves: the baseline PH(0, 1.1, 2, 5) plus one-at-a-
/// time perturbations of m, a, b, c on alpha in logspace(-3, 3, 400).
/// Raising m forces b = m + 2 alongside to keep the density integrable.
pub fn shape_sensitivity_curves() -> Result<Vec<Curve>> {
    let grid = log_grid(-3.0, 3.0, 400);
    let presets = [
        PochhammerParams::new(0, 1.1, 2, 5.0)?, // baseline
        PochhammerParams::new(1, 1.1, 3, 5.0)?, // m = 1
        PochhammerParams::new(2, 1.1, 4, 5.0)?, // m = 2
        PochhammerParams::new(0, 0.1, 2, 5.0)?, // smaller a
        PochhammerParams::new(0, 5.0, 2, 5.0)?, // larger a
        PochhammerParams::new(0, 1.1, 5, 5.0)?, // larger b
        PochhammerParams::new(0, 1.1, 2, 1.0)?, // smaller c
    ];
    presets.into_iter().map(|p| curve_for(p, &grid)).collect()
}

/// PH(0,1,b,1) against Gamma(1, ln b) for b in {5, 50, 500}: the density
/// comparison behind the Exp(1) limit.
pub fn gamma_limit_curves() -> Result<Vec<Curve>> {
    let grid = log_grid(-3.0, 1.5, 400);
    let mut out = Vec::new();
    for b in [5u32, 50, 500] {
        let params = PochhammerParams::new(0, 1.0, b, 1.0)?;
        out.push(curve_for(params, &grid)?);
        let rate = f64::from(b).ln();
        let points = grid
            .iter()
            .map(|&x| {
                let dens = rate * (-rate * x).exp();
                let cdf = -(-rate * x).exp_m1();
                (x, dens, cdf)
            })
            .collect();
        out.push(Curve {
            label: format!("Gamma(1, ln {b})"),
            points,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::LN_2;

    fn ph(m: u32, a: f64, b: u32, c: f64) -> Pochhammer {
        Pochhammer::new(PochhammerParams::new(m, a, b, c).unwrap()).unwrap()
    }

    #[test]
    fn default_prior_normalizer_is_ln2() {
        let p = ph(0, 1.0, 2, 1.0);
        assert!((p.log_norm_const() - LN_2.ln()).abs() < 1e-15);
        let e = p.expansion().unwrap();
        assert_eq!(e.poles[0].coef1.to_real(), 1.0);
        assert_eq!(e.poles[1].coef1.to_real(), -1.0);
    }

    #[test]
    fn residue_examples_from_formulas() {
        // PH(0,1,3,1): monic gammas (1/2, -1, 1/2), C = ln 2 - ln(3)/2
        let e = ph_residues(&PochhammerParams::new(0, 1.0, 3, 1.0).unwrap()).unwrap();
        let g: Vec<f64> = e.poles.iter().map(|p| p.coef1.to_real()).collect();
        assert_relative_eq!(g[0], 0.5, epsilon = 1e-14);
        assert_relative_eq!(g[1], -1.0, epsilon = 1e-14);
        assert_relative_eq!(g[2], 0.5, epsilon = 1e-14);
        assert_relative_eq!(
            e.log_norm_const.exp(),
            2f64.ln() - 3f64.ln() / 2.0,
            max_relative = 1e-12
        );

        // PH(1,1,3,1): gammas (-1/2, 2, -3/2), C = 1.5 ln 3 - 2 ln 2
        let e = ph_residues(&PochhammerParams::new(1, 1.0, 3, 1.0).unwrap()).unwrap();
        let g: Vec<f64> = e.poles.iter().map(|p| p.coef1.to_real()).collect();
        assert_relative_eq!(g[0], -0.5, epsilon = 1e-13);
        assert_relative_eq!(g[1], 2.0, epsilon = 1e-13);
        assert_relative_eq!(g[2], -1.5, epsilon = 1e-13);
        assert_relative_eq!(
            e.log_norm_const.exp(),
            1.5 * 3f64.ln() - 2.0 * LN_2,
            max_relative = 1e-12
        );
    }

    #[test]
    fn pph_tilt_examples() {
        // PPH(0,1,4,1,d=1): gammas (-1/6, 1, -3/2, 2/3), C ~ 0.030575
        let p = PochhammerParams::pph(0, 1.0, 4, 1.0, 1).unwrap();
        let e = pph_residues(&p).unwrap();
        let g: Vec<f64> = e.poles.iter().map(|p| p.coef1.to_real()).collect();
        assert_relative_eq!(g[0], -1.0 / 6.0, epsilon = 1e-14);
        assert_relative_eq!(g[1], 1.0, epsilon = 1e-14);
        assert_relative_eq!(g[2], -1.5, epsilon = 1e-14);
        assert_relative_eq!(g[3], 2.0 / 3.0, epsilon = 1e-14);
        let c_tilt = e.log_norm_const.exp();
        let oracle = quad::integrate_halfline(
            |x| x.ln() - ((x + 1.0) * (x + 2.0) * (x + 3.0) * (x + 4.0)).ln(),
            1e-10,
        )
        .unwrap();
        assert_relative_eq!(c_tilt, oracle, max_relative = 1e-8);

        // untilted PH(0,1,4,1): C ~ 0.028317
        let e0 = ph_residues(&PochhammerParams::new(0, 1.0, 4, 1.0).unwrap()).unwrap();
        let oracle0 = quad::integrate_halfline(
            |x| -((x + 1.0) * (x + 2.0) * (x + 3.0) * (x + 4.0)).ln(),
            1e-10,
        )
        .unwrap();
        assert_relative_eq!(e0.log_norm_const.exp(), oracle0, max_relative = 1e-8);

        // d = 0 path is byte-identical between the two entry points
        let p0 = PochhammerParams::new(0, 1.0, 4, 1.0).unwrap();
        let via_ph = ph_residues(&p0).unwrap();
        let via_pph = pph_residues(&p0).unwrap();
        assert_eq!(
            via_ph.log_norm_const.to_bits(),
            via_pph.log_norm_const.to_bits()
        );
        for (x, y) in via_ph.poles.iter().zip(&via_pph.poles) {
            assert_eq!(x.coef1, y.coef1);
        }
    }

    #[test]
    fn moments_match_quadrature() {
        let p = ph(0, 1.0, 4, 1.0);
        let mean = p.mean().unwrap();
        assert_relative_eq!(mean, 0.030575 / 0.028317, max_relative = 1e-3);
        let oracle = {
            let num = quad::integrate_halfline(
                |x| x.ln() - ((x + 1.0) * (x + 2.0) * (x + 3.0) * (x + 4.0)).ln(),
                1e-10,
            )
            .unwrap();
            let den = quad::integrate_halfline(
                |x| -((x + 1.0) * (x + 2.0) * (x + 3.0) * (x + 4.0)).ln(),
                1e-10,
            )
            .unwrap();
            num / den
        };
        assert_relative_eq!(mean, oracle, max_relative = 1e-8);

        let p5 = ph(0, 1.0, 5, 1.0);
        let oracle5 = {
            let f = |x: f64| -((x + 1.0) * (x + 2.0) * (x + 3.0) * (x + 4.0) * (x + 5.0)).ln();
            let num = quad::integrate_halfline(|x| x.ln() + f(x), 1e-10).unwrap();
            let den = quad::integrate_halfline(f, 1e-10).unwrap();
            num / den
        };
        assert_relative_eq!(p5.mean().unwrap(), oracle5, max_relative = 1e-8);
    }

    #[test]
    fn moment_existence_boundary() {
        let p = ph(0, 1.0, 2, 1.0);
        assert!(matches!(
            p.moment(1),
            Err(Error::MomentDoesNotExist { k: 1, available: 0 })
        ));
    }

    #[test]
    fn log_density_values() {
        let p = ph(0, 1.0, 2, 1.0);
        // p(0) = 1/((1)(2) ln 2)
        assert_relative_eq!(
            p.log_density(0.0).unwrap(),
            (1.0 / (2.0 * LN_2)).ln(),
            epsilon = 1e-13
        );
        // p(1) = 1/(6 ln 2)
        assert_relative_eq!(
            p.log_density(1.0).unwrap(),
            (1.0 / (6.0 * LN_2)).ln(),
            epsilon = 1e-13
        );
        // m >= 1 kills the density at zero
        let p1 = ph(1, 1.0, 3, 1.0);
        assert_eq!(p1.log_density(0.0).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn density_matches_residue_form_on_grid() {
        for (m, b) in [(0u32, 2u32), (0, 5), (1, 3), (2, 6)] {
            let p = ph(m, 1.0, b, 1.0);
            let e = p.expansion().unwrap();
            for &x in &[0.01, 0.1, 1.0, 10.0, 100.0] {
                let direct = p.density(x).unwrap();
                let via_residues = e.density(x);
                assert_relative_eq!(direct, via_residues, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn cdf_closed_form() {
        let p = ph(0, 1.0, 2, 1.0);
        // F(x) = ln(2(x+1)/(x+2))/ln 2
        assert_relative_eq!(p.cdf(2.0).unwrap(), 1.5f64.ln() / LN_2, epsilon = 1e-12);
        assert_eq!(p.cdf(0.0).unwrap(), 0.0);
        assert_relative_eq!(p.quantile(0.5).unwrap(), 2f64.sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn quantile_round_trip() {
        let p = ph(0, 1.0, 5, 1.0);
        for &u in &[0.01, 0.5, 0.99] {
            let x = p.quantile(u).unwrap();
            assert!((p.cdf(x).unwrap() - u).abs() <= 1e-9);
        }
        // u -> 0 pushes x -> 0
        assert!(p.quantile(1e-9).unwrap() < 1e-6);
    }

    #[test]
    fn sampling_ks_and_mean() {
        let p = ph(0, 1.0, 2, 1.0);
        assert!(p.sample(0, Seed(1)).unwrap().is_empty());
        let mut draws = p.sample(20_000, Seed(7)).unwrap();
        let ks = ks_distance(&mut draws, |x| p.cdf(x).unwrap());
        // KS 1% critical value at n = 20000 is ~0.0115
        assert!(ks < 0.0115, "KS distance {ks}");
    }

    #[test]
    fn mass_near_zero_closed_form() {
        let p = ph(0, 1.0, 2, 1.0);
        // (1/ln 2) ln(1 + sqrt(eps)/(2+sqrt(eps)))
        assert_relative_eq!(
            p.mass_near_zero(1.0).unwrap(),
            (4f64 / 3.0).ln() / LN_2,
            epsilon = 1e-13
        );
        assert_relative_eq!(
            p.mass_near_zero(0.01).unwrap(),
            (1.0 + 0.1 / 2.1f64).ln() / LN_2,
            epsilon = 1e-12
        );
        assert_eq!(p.mass_near_zero(0.0).unwrap(), 0.0);
    }

    #[test]
    fn heavy_tail_diverges_polynomial_vs_exponential() {
        let p = ph(0, 1.0, 2, 1.0);
        let vals = heavy_tail_check(&p, 0.1, &[10.0, 20.0, 40.0]).unwrap();
        assert!(vals[0] < vals[1] && vals[1] < vals[2], "{vals:?}");
        // t = 0 reduces to the survival function, decreasing
        let surv = heavy_tail_check(&p, 0.0, &[1.0, 2.0, 4.0]).unwrap();
        assert!(surv[0] > surv[1] && surv[1] > surv[2]);
        // an exponential survival with matching rate gives a flat sequence
        let flat: Vec<f64> = [10.0f64, 20.0, 40.0]
            .iter()
            .map(|&x| (0.1 * x).exp() * (-(0.1 * x)).exp())
            .collect();
        assert!(flat.iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn half_horseshoe_is_decreasing_with_finite_origin() {
        let p = ph(0, 0.5, 2, 3.0);
        let d0 = p.density(0.0).unwrap();
        assert!(d0.is_finite() && d0 > 0.0);
        let mut prev = d0;
        for i in 1..200 {
            let x = i as f64 * 0.05;
            let d = p.density(x).unwrap();
            assert!(d <= prev);
            prev = d;
        }
    }

    #[test]
    fn mixture_sampler_matches_cdf() {
        let b = 6u32;
        let p = ph(0, 1.0, b, 1.0);
        let mut rng = RngSuite::new(Seed(42));
        let mut draws = sample_unit_scale_half_horseshoe(b, 20_000, &mut rng).unwrap();
        let ks = ks_distance(&mut draws, |x| p.cdf(x).unwrap());
        assert!(ks < 0.0115, "KS distance {ks}");
    }

    #[test]
    fn gamma_limit_shrinks_from_small_b() {
        // True distances (quadrature): 0.0276 (b=10), 0.0158 (b=100),
        // 0.0156 (b=1000). The 100 -> 1000 gap sits below Monte-Carlo
        // resolution at this n, so assert against the well separated b=10.
        let pts = stirling_gamma_limit_experiment(&[10, 100, 1000], 20_000, Seed(5)).unwrap();
        assert!(pts[0].ks_to_exp1 > pts[1].ks_to_exp1 + 0.005);
        assert!(pts[0].ks_to_exp1 > pts[2].ks_to_exp1 + 0.005);
        // determinism
        let again = stirling_gamma_limit_experiment(&[10], 20_000, Seed(5)).unwrap();
        assert_eq!(pts[0].ks_to_exp1, again[0].ks_to_exp1);
    }

    #[test]
    fn parameter_validation() {
        assert!(PochhammerParams::new(0, 1.0, 1, 1.0).is_err());
        assert!(PochhammerParams::new(1, 1.0, 2, 1.0).is_err());
        assert!(PochhammerParams::new(0, 0.0, 2, 1.0).is_err());
        assert!(PochhammerParams::new(0, 1.0, 2, 0.0).is_err());
        assert!(PochhammerParams::new(1, 0.0, 3, 2.0).is_ok());
        assert!(PochhammerParams::pph(0, 1.0, 2, 1.0, 1).is_err());
        assert!(PochhammerParams::pph(0, 1.0, 3, 1.0, 1).is_ok());
    }

    #[test]
    fn zero_offset_prior_family() {
        // PH(1, a=0, b=3, c=2): finite positive density at the origin.
        let p = ph(1, 0.0, 3, 2.0);
        let d0 = p.density(0.0).unwrap();
        assert!(d0.is_finite() && d0 > 0.0);
        let q = p
            .params()
            .unnormalized_form()
            .integrate_log(1e-10)
            .unwrap();
        assert_relative_eq!(p.log_norm_const(), q, max_relative = 1e-8);
    }

    #[test]
    fn shape_curves_emit_seven() {
        let curves = shape_sensitivity_curves().unwrap();
        assert_eq!(curves.len(), 7);
        for c in &curves {
            assert_eq!(c.points.len(), 400);
            assert!(c
                .points
                .iter()
                .all(|&(_, d, f)| d >= 0.0 && (0.0..=1.0).contains(&f)));
        }
    }
}

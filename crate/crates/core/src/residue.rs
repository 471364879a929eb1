//! Partial-fraction engine for Pochhammer-rational densities.
//!
//! Every prior and posterior in this crate is, up to a positive constant, a
//! ratio of products of linear factors
//!
//! ```text
//! h(alpha) = scale * prod_j (alpha + u_j)^{p_j} / prod_l (alpha + v_l)^{q_l}
//! ```
//!
//! with rational roots `u_j >= 0`, rational pole offsets `v_l >= 0`, and pole
//! orders `q_l <= 2` after cancellation. Writing the monic residue
//! decomposition `h = sum_l [ A_l/(alpha+v_l) + B_l/(alpha+v_l)^2 ]`, the
//! normalizing constant on (0, inf) is
//!
//! ```text
//! C = sum_l [ -A_l ln v_l + B_l / v_l ]
//! ```
//!
//! which converges because `sum_l A_l = 0` whenever the degree gap is at
//! least two. Coefficients are plain products of exactly representable
//! rational factors and carry no cancellation; the normalizer sum is the
//! cancellation-prone step and is summed through [`signed_log_sum`] with an
//! escalation ladder: double precision, then extended software floats, then
//! quadrature of the stable factored log-density.
//!
//! Coefficients here are *monic* (they multiply `1/(alpha + v)`); textbook
//! forms over `(c alpha + a + i - 1)` are recovered by scaling with the
//! family constant `c`.

use std::collections::BTreeMap;

use astro_float::BigFloat;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::numeric::exact::{self, Rational};
use crate::numeric::quad::{self, QuadConfig};
use crate::numeric::signed::{signed_log_sum, LogSum, Precision, SignedLogReal};
use crate::numeric::xfloat::{self, XCtx};

/// Relative distance below which two mathematically distinct poles are
/// treated as colliding (the expansion would be numerically meaningless).
const NEAR_COLLISION_REL: f64 = 1e-12;

/// Escalation policy for [`RationalForm::expand`].
#[derive(Clone, Copy, Debug)]
pub struct ExpandPolicy {
    /// Precision to try first.
    pub start: Precision,
    /// Extended mantissa width to escalate to, if any.
    pub extended_bits: Option<u32>,
    /// Whether to fall back to quadrature for the normalizer.
    pub quadrature_fallback: bool,
    /// Maximum pole count (denominator degree) for the exact path.
    pub size_budget: usize,
    /// Relative tolerance for the quadrature fallback.
    pub quad_tol: f64,
}

impl Default for ExpandPolicy {
    fn default() -> Self {
        ExpandPolicy {
            start: Precision::Double,
            extended_bits: Some(256),
            quadrature_fallback: true,
            size_budget: 256,
            quad_tol: 1e-10,
        }
    }
}

impl ExpandPolicy {
    /// Exact path only at the given precision: no escalation, no fallback.
    pub fn only(precision: Precision) -> Self {
        ExpandPolicy {
            start: precision,
            extended_bits: None,
            quadrature_fallback: false,
            ..ExpandPolicy::default()
        }
    }
}

/// One pole of a residue expansion.
#[derive(Clone, Debug)]
pub struct PoleTerm {
    /// Pole at `alpha = -location`; `location >= 0`.
    pub location: f64,
    pub location_exact: Rational,
    pub order: u8,
    /// Monic coefficient of `1/(alpha + location)`.
    pub coef1: SignedLogReal,
    /// Monic coefficient of `1/(alpha + location)^2` for order-2 poles.
    pub coef2: Option<SignedLogReal>,
}

/// Poles, signed-log coefficients, and the normalizing constant of a
/// Pochhammer-rational density.
#[derive(Clone, Debug)]
pub struct ResidueExpansion {
    pub poles: Vec<PoleTerm>,
    /// ln of the normalizing constant C.
    pub log_norm_const: f64,
    pub precision_used: Precision,
    /// True when the normalizer came from quadrature instead of the
    /// closed-form sum.
    pub numeric_fallback: bool,
    /// Cancellation diagnostic of the normalizer sum, in nats.
    pub cancellation_nats: f64,
    /// Denominator-minus-numerator degree of the source form (the density
    /// decays like alpha^-gap; used by the far-tail evaluator).
    pub degree_gap: u32,
}

impl ResidueExpansion {
    /// Sum of the order-1 coefficients; zero (up to rounding) for every
    /// integrable expansion.
    pub fn coef1_sum(&self) -> LogSum {
        let terms: Vec<SignedLogReal> = self.poles.iter().map(|p| p.coef1).collect();
        signed_log_sum(&terms)
    }

    /// Largest order-1 coefficient magnitude in log space.
    pub fn max_coef1_logmag(&self) -> f64 {
        self.poles
            .iter()
            .map(|p| p.coef1.logmag())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Normalized density via the residue form.
    ///
    /// The plain sum `sum coef/(alpha+v)` loses one order of accuracy per
    /// power of alpha beyond the pole scale (the leading `1/alpha` parts
    /// cancel through the moment identities `sum coef1 v^j = 0`,
    /// j < gap-1). For simple-pole expansions a telescoped form pushes the
    /// cancelled powers out analytically:
    ///
    /// ```text
    /// sum r_i/(x+v_i) = x^{1-gap} sum r_i (-v_i)^{gap-1}/(x+v_i)
    /// ```
    ///
    /// Both are evaluated and the one with the smaller cancellation
    /// diagnostic wins.
    pub fn density(&self, alpha: f64) -> f64 {
        let mut terms = Vec::with_capacity(2 * self.poles.len());
        let mut order2 = false;
        for p in &self.poles {
            let d = alpha + p.location;
            terms.push(p.coef1 * SignedLogReal::from_real(1.0 / d));
            if let Some(b) = p.coef2 {
                order2 = true;
                terms.push(b * SignedLogReal::from_real(1.0 / (d * d)));
            }
        }
        let plain = signed_log_sum(&terms);
        let mut best = plain;
        let mut shift = 0.0;
        if !order2 && alpha > 0.0 && self.degree_gap >= 2 {
            let j = self.degree_gap - 1;
            let tel: Vec<SignedLogReal> = self
                .poles
                .iter()
                .map(|p| {
                    let sign = if j % 2 == 1 { -1.0 } else { 1.0 };
                    let w = SignedLogReal::from_parts(
                        if sign < 0.0 { -1 } else { 1 },
                        f64::from(j) * p.location.ln(),
                    );
                    p.coef1 * w * SignedLogReal::from_real(1.0 / (alpha + p.location))
                })
                .collect();
            let t = signed_log_sum(&tel);
            if t.cancellation_nats < plain.cancellation_nats {
                best = t;
                shift = -f64::from(j) * alpha.ln();
            }
        }
        if best.value.sign() <= 0 {
            0.0
        } else {
            (best.value.logmag() + shift - self.log_norm_const).exp()
        }
    }

    /// CDF at `x` by term-by-term integration of the residue form, plus the
    /// cancellation diagnostic of the evaluation.
    pub fn cdf_checked(&self, x: f64) -> (f64, f64) {
        if x <= 0.0 {
            return (0.0, 0.0);
        }
        let mut terms = Vec::with_capacity(2 * self.poles.len());
        for p in &self.poles {
            let v = p.location;
            // int_0^x dt/(t+v) = ln(1 + x/v)
            terms.push(p.coef1 * SignedLogReal::from_real((x / v).ln_1p()));
            if let Some(b) = p.coef2 {
                // int_0^x dt/(t+v)^2 = 1/v - 1/(x+v)
                terms.push(b * SignedLogReal::from_real(1.0 / v - 1.0 / (x + v)));
            }
        }
        let s = signed_log_sum(&terms);
        let f = if s.value.sign() <= 0 {
            0.0
        } else {
            (s.value.logmag() - self.log_norm_const).exp()
        };
        (f.clamp(0.0, 1.0), s.cancellation_nats)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.cdf_checked(x).0
    }

    /// Survival function 1 - F(x) in a form stable for large `x` (the
    /// `ln x` parts cancel through the coefficient sum-zero identity).
    pub fn survival(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        let mut terms = Vec::with_capacity(2 * self.poles.len());
        for p in &self.poles {
            // int_x^inf dt/(t+v): the divergent ln parts cancel jointly,
            // leaving -ln(x+v) = -(ln x + ln1p(v/x)) and sum coef1 = 0.
            terms.push(-p.coef1 * SignedLogReal::from_real((p.location / x).ln_1p()));
            if let Some(b) = p.coef2 {
                terms.push(b * SignedLogReal::from_real(1.0 / (x + p.location)));
            }
        }
        let s = signed_log_sum(&terms);
        if s.value.sign() <= 0 {
            0.0
        } else {
            (s.value.logmag() - self.log_norm_const).exp().min(1.0)
        }
    }
}

/// A density `scale * prod (alpha+u)^p / prod (alpha+v)^q` in exactly
/// represented factored form.
#[derive(Clone, Debug, Default)]
pub struct RationalForm {
    num: BTreeMap<Rational, u32>,
    den: BTreeMap<Rational, u32>,
    /// Positive multiplicative constant of the monic form.
    scale: Rational,
}

fn rat_u64(n: u64) -> Rational {
    Rational::from_integer(n.into())
}

impl RationalForm {
    pub fn new() -> Self {
        RationalForm {
            num: BTreeMap::new(),
            den: BTreeMap::new(),
            scale: Rational::from_integer(1.into()),
        }
    }

    fn push(map: &mut BTreeMap<Rational, u32>, root: Rational, mult: u32) {
        if mult > 0 {
            *map.entry(root).or_insert(0) += mult;
        }
    }

    /// Multiply by the rising factorial `[alpha + first]^n` in the numerator.
    pub fn mul_rising_num(&mut self, first: &Rational, n: u64) -> &mut Self {
        for s in 0..n {
            Self::push(&mut self.num, first + rat_u64(s), 1);
        }
        self
    }

    /// Multiply by `[alpha + first]^n` in the denominator.
    pub fn mul_rising_den(&mut self, first: &Rational, n: u64) -> &mut Self {
        for s in 0..n {
            Self::push(&mut self.den, first + rat_u64(s), 1);
        }
        self
    }

    /// Multiply by `[c alpha + a]^n` in the denominator: poles at
    /// `(a + i - 1)/c` and a `c^n` constant absorbed into the scale.
    pub fn mul_scaled_rising_den(&mut self, a: &Rational, c: &Rational, n: u64) -> &mut Self {
        for i in 0..n {
            Self::push(&mut self.den, (a + rat_u64(i)) / c, 1);
        }
        for _ in 0..n {
            self.scale /= c;
        }
        self
    }

    /// Multiply by `alpha^d` in the numerator.
    pub fn mul_power_num(&mut self, d: u64) -> &mut Self {
        Self::push(&mut self.num, Rational::zero(), d as u32);
        self
    }

    /// Multiply the scale by a positive rational constant.
    pub fn mul_scalar(&mut self, s: &Rational) -> &mut Self {
        assert!(s.is_positive(), "scale factors must be positive");
        self.scale *= s;
        self
    }

    /// Cancel numerator roots against identical denominator poles.
    pub fn reduce(&mut self) -> &mut Self {
        let keys: Vec<Rational> = self.num.keys().cloned().collect();
        for k in keys {
            let p = self.num.get(&k).copied().unwrap_or(0);
            let q = self.den.get(&k).copied().unwrap_or(0);
            let cancel = p.min(q);
            if cancel > 0 {
                match p - cancel {
                    0 => {
                        self.num.remove(&k);
                    }
                    rest => {
                        self.num.insert(k.clone(), rest);
                    }
                }
                match q - cancel {
                    0 => {
                        self.den.remove(&k);
                    }
                    rest => {
                        self.den.insert(k, rest);
                    }
                }
            }
        }
        self
    }

    /// Denominator poles (location, order) of the current form.
    pub fn den_poles(&self) -> impl Iterator<Item = (Rational, u32)> + '_ {
        self.den.iter().map(|(v, &q)| (v.clone(), q))
    }

    pub fn num_degree(&self) -> u64 {
        self.num.values().map(|&p| u64::from(p)).sum()
    }

    pub fn den_degree(&self) -> u64 {
        self.den.values().map(|&q| u64::from(q)).sum()
    }

    /// Denominator degree minus numerator degree; integrability on the half
    /// line needs a gap of at least two.
    pub fn degree_gap(&self) -> i64 {
        self.den_degree() as i64 - self.num_degree() as i64
    }

    /// Unnormalized log-density at `alpha >= 0`, evaluated from the factored
    /// form (each factor is positive for alpha > 0, so nothing cancels).
    pub fn log_density_at(&self, alpha: f64) -> f64 {
        let mut s = exact::ln_abs(&self.scale);
        for (u, &p) in &self.num {
            let f = alpha + exact::to_f64(u);
            if f == 0.0 {
                return f64::NEG_INFINITY;
            }
            s += f64::from(p) * f.abs().ln();
        }
        for (v, &q) in &self.den {
            let f = alpha + exact::to_f64(v);
            s -= f64::from(q) * f.abs().ln();
        }
        s
    }

    /// ln of the integral over (0, inf) by adaptive quadrature.
    pub fn integrate_log(&self, rel_tol: f64) -> Result<f64> {
        quad::integrate_halfline_log(|a| self.log_density_at(a), rel_tol, QuadConfig::default())
    }

    /// A copy tilted by `alpha^d` (reduced against any pole at zero).
    pub fn tilted(&self, d: u64) -> Self {
        let mut t = self.clone();
        t.mul_power_num(d);
        t.reduce();
        t
    }

    fn validated_reduced(&self) -> Result<RationalForm> {
        let mut form = self.clone();
        form.reduce();
        if form.degree_gap() < 2 {
            return Err(Error::NotIntegrable(format!(
                "degree gap {} < 2 (numerator {}, denominator {})",
                form.degree_gap(),
                form.num_degree(),
                form.den_degree()
            )));
        }
        let mut prev: Option<(f64, &Rational)> = None;
        for (v, &q) in &form.den {
            if v.is_negative() {
                return Err(Error::Domain(format!(
                    "pole at positive alpha = {} lies inside the support",
                    -exact::to_f64(v)
                )));
            }
            if v.is_zero() && q > 0 {
                return Err(Error::NotIntegrable(
                    "non-cancelled pole at the origin".into(),
                ));
            }
            if q > 2 {
                return Err(Error::UnsupportedPoleOrder {
                    location: exact::to_f64(v),
                    order: q,
                });
            }
            let vf = exact::to_f64(v);
            if let Some((pf, _)) = prev {
                if (vf - pf).abs() <= NEAR_COLLISION_REL * vf.abs().max(1.0) {
                    return Err(Error::PoleCollision(pf, vf));
                }
            }
            prev = Some((vf, v));
        }
        Ok(form)
    }

    /// Exact rational residues (the test oracle): monic order-1 and order-2
    /// coefficients per pole. Only the normalizer requires logs; the
    /// coefficients themselves are rational functions of the inputs.
    pub fn exact_residues(&self) -> Result<Vec<(Rational, u32, Rational, Option<Rational>)>> {
        let form = self.validated_reduced()?;
        let poles: Vec<(Rational, u32)> = form.den.iter().map(|(v, &q)| (v.clone(), q)).collect();
        let mut out = Vec::with_capacity(poles.len());
        for (v, q) in &poles {
            let base = form.base_product_exact(v);
            match q {
                1 => out.push((v.clone(), 1, base, None)),
                2 => {
                    let s = form.log_derivative_sum(v);
                    out.push((v.clone(), 2, &base * &s, Some(base)));
                }
                _ => unreachable!("validated_reduced bounds pole orders"),
            }
        }
        Ok(out)
    }

    // scale * prod_u (u - v)^p / prod_{v' != v} (v' - v)^q, exactly.
    fn base_product_exact(&self, v: &Rational) -> Rational {
        let mut acc = self.scale.clone();
        for (u, &p) in &self.num {
            let f = u - v;
            for _ in 0..p {
                acc *= &f;
            }
        }
        for (w, &q) in &self.den {
            if w == v {
                continue;
            }
            let f = w - v;
            for _ in 0..q {
                acc /= &f;
            }
        }
        acc
    }

    // d/dalpha ln[(alpha+v)^2 h(alpha)] at alpha = -v:
    // sum_u p/(u - v) - sum_{v' != v} q/(v' - v).
    fn log_derivative_sum(&self, v: &Rational) -> Rational {
        let mut s = Rational::zero();
        for (u, &p) in &self.num {
            s += Rational::from_integer(p.into()) / (u - v);
        }
        for (w, &q) in &self.den {
            if w == v {
                continue;
            }
            s -= Rational::from_integer(q.into()) / (w - v);
        }
        s
    }

    /// Expand into poles, coefficients, and the normalizing constant, with
    /// the policy's precision escalation.
    pub fn expand(&self, policy: &ExpandPolicy) -> Result<ResidueExpansion> {
        let form = self.validated_reduced()?;
        let n_poles = form.den_degree() as usize;
        if n_poles > policy.size_budget {
            return Err(Error::SizeBudget {
                size: n_poles,
                budget: policy.size_budget,
            });
        }

        let mut attempt = Some(policy.start);
        let mut last: Option<ResidueExpansion> = None;
        while let Some(precision) = attempt {
            let exp = form.expand_at(precision)?;
            let healthy = !exp.log_norm_const.is_nan()
                && exp.cancellation_nats <= precision.cancellation_threshold();
            if healthy {
                return Ok(exp);
            }
            attempt = match precision {
                Precision::Double => policy.extended_bits.map(Precision::Extended),
                Precision::Extended(_) => None,
            };
            last = Some(exp);
        }

        let mut exp = last.expect("at least one expansion attempt ran");
        if !policy.quadrature_fallback {
            return Err(Error::PrecisionLoss {
                cancellation_nats: exp.cancellation_nats,
                threshold_nats: exp.precision_used.cancellation_threshold(),
            });
        }
        exp.log_norm_const = form.integrate_log(policy.quad_tol)?;
        exp.numeric_fallback = true;
        Ok(exp)
    }

    // One expansion attempt; `self` must already be validated + reduced.
    fn expand_at(&self, precision: Precision) -> Result<ResidueExpansion> {
        match precision {
            Precision::Double => self.expand_double(),
            Precision::Extended(bits) => {
                precision.validate()?;
                Ok(xfloat::with_ctx(bits, |ctx| self.expand_extended(ctx)))
            }
        }
    }

    fn expand_double(&self) -> Result<ResidueExpansion> {
        let mut poles = Vec::new();
        let mut norm_terms: Vec<SignedLogReal> = Vec::new();
        for (v, &q) in &self.den {
            let vf = exact::to_f64(v);
            // ln-space product of exactly known factors: no cancellation.
            let mut logmag = exact::ln_abs(&self.scale);
            let mut sign: i8 = 1;
            for (u, &p) in &self.num {
                let f = exact::to_f64(&(u - v));
                logmag += f64::from(p) * f.abs().ln();
                if f < 0.0 && p % 2 == 1 {
                    sign = -sign;
                }
            }
            for (w, &qq) in &self.den {
                if w == v {
                    continue;
                }
                let f = exact::to_f64(&(w - v));
                logmag -= f64::from(qq) * f.abs().ln();
                if f < 0.0 && qq % 2 == 1 {
                    sign = -sign;
                }
            }
            let base = SignedLogReal::from_parts(sign, logmag);
            let (coef1, coef2) = if q == 1 {
                (base, None)
            } else {
                let s = SignedLogReal::from_real(exact::to_f64(&self.log_derivative_sum(v)));
                (base * s, Some(base))
            };
            // Normalizer: -coef1 ln v + coef2 / v.
            norm_terms.push(-coef1 * SignedLogReal::from_real(vf.ln()));
            if let Some(b) = coef2 {
                norm_terms.push(b * SignedLogReal::from_real(1.0 / vf));
            }
            poles.push(PoleTerm {
                location: vf,
                location_exact: v.clone(),
                order: q as u8,
                coef1,
                coef2,
            });
        }
        let sum = signed_log_sum(&norm_terms);
        let log_norm_const = if sum.value.sign() > 0 {
            sum.value.logmag()
        } else {
            f64::NAN
        };
        Ok(ResidueExpansion {
            poles,
            log_norm_const,
            precision_used: Precision::Double,
            numeric_fallback: false,
            cancellation_nats: sum.cancellation_nats,
            degree_gap: self.degree_gap() as u32,
        })
    }

    fn expand_extended(&self, ctx: &XCtx) -> ResidueExpansion {
        let mut poles = Vec::new();
        let mut acc = ctx.zero();
        let mut max_term_log = f64::NEG_INFINITY;
        for (v, &q) in &self.den {
            let vf = exact::to_f64(v);
            let mut base = ctx.from_rational(&self.scale);
            for (u, &p) in &self.num {
                let f = ctx.from_rational(&(u - v));
                for _ in 0..p {
                    base = ctx.mul(&base, &f);
                }
            }
            for (w, &qq) in &self.den {
                if w == v {
                    continue;
                }
                let f = ctx.from_rational(&(w - v));
                for _ in 0..qq {
                    base = ctx.div(&base, &f);
                }
            }
            let (coef1x, coef2x): (BigFloat, Option<BigFloat>) = if q == 1 {
                (base, None)
            } else {
                let s = ctx.from_rational(&self.log_derivative_sum(v));
                (ctx.mul(&base, &s), Some(base))
            };
            // -coef1 ln v
            let t1 = ctx.neg(&ctx.mul(&coef1x, &ctx.ln_rational(v)));
            max_term_log = max_term_log.max(ctx.to_signed_log(&t1).logmag());
            acc = ctx.add(&acc, &t1);
            if let Some(ref b) = coef2x {
                let t2 = ctx.div(b, &ctx.from_rational(v));
                max_term_log = max_term_log.max(ctx.to_signed_log(&t2).logmag());
                acc = ctx.add(&acc, &t2);
            }
            poles.push(PoleTerm {
                location: vf,
                location_exact: v.clone(),
                order: q as u8,
                coef1: ctx.to_signed_log(&coef1x),
                coef2: coef2x.as_ref().map(|b| ctx.to_signed_log(b)),
            });
        }
        let total = ctx.to_signed_log(&acc);
        let (log_norm_const, cancellation) = if total.sign() > 0 {
            (total.logmag(), (max_term_log - total.logmag()).max(0.0))
        } else {
            (f64::NAN, f64::INFINITY)
        };
        ResidueExpansion {
            poles,
            log_norm_const,
            precision_used: Precision::Extended(ctx.bits()),
            numeric_fallback: false,
            cancellation_nats: cancellation,
            degree_gap: self.degree_gap() as u32,
        }
    }
}

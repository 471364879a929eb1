//! Companion count models sharing the Gamma-ratio structure.
//!
//! Each model's marginal posterior for the concentration parameter is a
//! Pochhammer-rational density, so one wrapper ([`AlphaPosterior`]) serves
//! them all: Negative-Binomial with the coupled Beta link, Negative
//! Multinomial, the generalized-Dirichlet stick-breaking utilities, the
//! Ewens sampling formula, and Yule-Simon.

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::numeric::exact::{self, Rational};
use crate::numeric::rng::{RngSuite, Seed};
use crate::pochhammer::{PochhammerParams, Pochhammer};
use crate::residue::{ExpandPolicy, RationalForm, ResidueExpansion};

/// A normalized Pochhammer-rational posterior over alpha.
///
/// Densities whose poles exceed order two (repeated Yule-Simon counts)
/// have no residue expansion here; their normalizer comes from quadrature
/// and `expansion()` is empty.
#[derive(Clone, Debug)]
pub struct AlphaPosterior {
    form: RationalForm,
    expansion: Option<ResidueExpansion>,
    log_norm: f64,
    quadrature_normalized: bool,
}

impl AlphaPosterior {
    pub fn from_form(form: RationalForm) -> Result<Self> {
        Self::from_form_with(form, &ExpandPolicy::default())
    }

    pub fn from_form_with(form: RationalForm, policy: &ExpandPolicy) -> Result<Self> {
        match form.expand(policy) {
            Ok(expansion) => Ok(AlphaPosterior {
                log_norm: expansion.log_norm_const,
                quadrature_normalized: expansion.numeric_fallback,
                expansion: Some(expansion),
                form,
            }),
            Err(Error::UnsupportedPoleOrder { .. }) | Err(Error::SizeBudget { .. }) => {
                let log_norm = form.integrate_log(policy.quad_tol)?;
                Ok(AlphaPosterior {
                    form,
                    expansion: None,
                    log_norm,
                    quadrature_normalized: true,
                })
            }
            Err(e) => Err(e),
        }
    }

    pub fn form(&self) -> &RationalForm {
        &self.form
    }

    pub fn expansion(&self) -> Option<&ResidueExpansion> {
        self.expansion.as_ref()
    }

    /// True when the normalizer was computed by quadrature rather than the
    /// closed-form residue sum.
    pub fn quadrature_normalized(&self) -> bool {
        self.quadrature_normalized
    }

    pub fn log_norm_const(&self) -> f64 {
        self.log_norm
    }

    pub fn log_density(&self, alpha: f64) -> f64 {
        self.form.log_density_at(alpha) - self.log_norm
    }

    /// Posterior moment E(alpha^k) via a power tilt of the numerator.
    pub fn moment(&self, k: u32) -> Result<f64> {
        if k == 0 {
            return Ok(1.0);
        }
        let gap = self.form.degree_gap();
        if i64::from(k) > gap - 2 {
            return Err(Error::MomentDoesNotExist {
                k,
                available: (gap - 2).max(0),
            });
        }
        let tilted = self.form.tilted(u64::from(k));
        let log_c_tilt = if self.quadrature_normalized {
            tilted.integrate_log(1e-10)?
        } else {
            tilted.expand(&ExpandPolicy::default())?.log_norm_const
        };
        Ok((log_c_tilt - self.log_norm).exp())
    }

    pub fn mean(&self) -> Result<f64> {
        self.moment(1)
    }
}

// ---------------------------------------------------------------------
// Negative Binomial with the coupled Beta link
// ---------------------------------------------------------------------

/// NB(alpha, pi) with the jointly conjugate link
/// `pi | alpha ~ Beta(c alpha + a, b)` sharing the prior's (a, b, c).
///
/// NB convention used throughout: `p(n | alpha, pi) =
/// [alpha]^n / n! * pi^alpha (1-pi)^n`, so the mean is
/// `alpha (1-pi)/pi` (libraries differ on which parameter is "success").
#[derive(Clone, Debug)]
pub struct NbCoupledPrior {
    ph: PochhammerParams,
}

impl NbCoupledPrior {
    pub fn new(ph: PochhammerParams) -> Result<Self> {
        if ph.d() != 0 {
            return Err(Error::Domain("the NB coupling uses a plain PH prior (d = 0)".into()));
        }
        Ok(NbCoupledPrior { ph })
    }

    pub fn ph(&self) -> &PochhammerParams {
        &self.ph
    }
}

/// Marginal posterior of alpha after observing i.i.d. NB counts:
/// proportional to `prod_{k=0}^K [alpha]^{n_k} / [(c+K) alpha + a]^{N+b}`
/// with `n_0 = m`.
pub fn nb_marginal_posterior(counts: &[u64], prior: &NbCoupledPrior) -> Result<AlphaPosterior> {
    let k = counts.len() as u64;
    let n: u64 = counts.iter().sum();
    let ph = &prior.ph;
    let mut f = RationalForm::new();
    for &nk in counts {
        f.mul_rising_num(&Rational::from_integer(0.into()), nk);
    }
    f.mul_rising_num(&Rational::from_integer(0.into()), u64::from(ph.m()));
    let scale = ph.c_exact() + Rational::from_integer(k.into());
    f.mul_scaled_rising_den(ph.a_exact(), &scale, n + u64::from(ph.b()));
    f.reduce();
    AlphaPosterior::from_form(f)
}

/// Beta parameters of `p(pi | alpha, n)`: ((c+K) alpha + a, N + b).
pub fn nb_pi_conditional(alpha: f64, counts: &[u64], prior: &NbCoupledPrior) -> (f64, f64) {
    let k = counts.len() as f64;
    let n: u64 = counts.iter().sum();
    let ph = &prior.ph;
    (
        (ph.c() + k) * alpha + ph.a(),
        (n + u64::from(ph.b())) as f64,
    )
}

/// One NB(alpha, pi) draw via the Gamma-Poisson mixture.
pub fn nb_draw(alpha: f64, pi: f64, rng: &mut RngSuite) -> Result<u64> {
    if !(alpha > 0.0) || !(pi > 0.0 && pi <= 1.0) {
        return Err(Error::Domain(format!("nb_draw needs alpha > 0, pi in (0,1], got ({alpha}, {pi})")));
    }
    if pi >= 1.0 {
        return Ok(0);
    }
    let rate = pi / (1.0 - pi);
    let lambda = rng.gamma(alpha, rate)?;
    rng.poisson(lambda)
}

/// Synthetic counts from the full hierarchy alpha -> pi -> n, plus the
/// summaries used to classify the sparsity regime.
#[derive(Clone, Debug, Serialize)]
pub struct NbSample {
    pub counts: Vec<u64>,
    pub zero_fraction: f64,
    /// Most frequent nonzero count, when any count is nonzero.
    pub nonzero_mode: Option<u64>,
    /// (value, frequency) pairs in increasing value order.
    pub histogram: Vec<(u64, u64)>,
}

/// Generate `n_draws` counts: alpha from the PH prior (inverse CDF),
/// pi | alpha from the Beta link, n from NB(alpha, pi).
pub fn nb_generate(prior: &NbCoupledPrior, n_draws: usize, seed: Seed) -> Result<NbSample> {
    let ph_dist = Pochhammer::new(prior.ph.clone())?;
    // Stay on the residue CDF even when it carries ~1e-8 of cancellation
    // noise: at histogram scale that is invisible, and quadrature per draw
    // would be three orders of magnitude slower.
    let eval = crate::pochhammer::EvalConfig {
        cdf_cancellation_nats: 40.0,
        quad_tol: 1e-9,
    };
    let mut rng = RngSuite::new(seed);
    let mut counts = Vec::with_capacity(n_draws);
    for _ in 0..n_draws {
        let u = rng.uniform().max(f64::MIN_POSITIVE);
        let alpha = ph_dist.quantile_with(u, &eval, 1e-8)?.max(f64::MIN_POSITIVE);
        let (ba, bb) = nb_pi_conditional(alpha, &[], prior);
        // prior link: Beta(c alpha + a, b)
        let pi = rng.beta(ba, bb)?.clamp(f64::MIN_POSITIVE, 1.0);
        counts.push(nb_draw(alpha, pi, &mut rng)?);
    }
    let zeros = counts.iter().filter(|&&c| c == 0).count();
    let mut hist = std::collections::BTreeMap::new();
    for &c in &counts {
        *hist.entry(c).or_insert(0u64) += 1;
    }
    let nonzero_mode = hist
        .iter()
        .filter(|(&v, _)| v > 0)
        .max_by_key(|(_, &f)| f)
        .map(|(&v, _)| v);
    Ok(NbSample {
        zero_fraction: zeros as f64 / n_draws.max(1) as f64,
        nonzero_mode,
        histogram: hist.into_iter().collect(),
        counts,
    })
}

// ---------------------------------------------------------------------
// Negative Multinomial
// ---------------------------------------------------------------------

/// Marginal NM log-likelihood up to constants: `ln alpha - ln [alpha+N]^{K+1}`.
pub fn nm_marginal_log_likelihood(alpha: f64, n_total: u64, k: usize) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::Domain("alpha must be positive".into()));
    }
    let x = alpha + n_total as f64;
    Ok(alpha.ln() - (ln_gamma(x + (k as f64 + 1.0)) - ln_gamma(x)))
}

/// Posterior of alpha under a PH prior: proportional to
/// `alpha [alpha]^m / ([alpha+N]^{K+1} [c alpha + a]^b)`.
pub fn nm_posterior(n_total: u64, k: usize, prior: &PochhammerParams) -> Result<AlphaPosterior> {
    if prior.d() != 0 {
        return Err(Error::Domain("the NM posterior uses a plain PH prior (d = 0)".into()));
    }
    let mut f = RationalForm::new();
    f.mul_power_num(1);
    f.mul_rising_num(&Rational::from_integer(0.into()), u64::from(prior.m()));
    f.mul_rising_den(&Rational::from_integer(n_total.into()), k as u64 + 1);
    f.mul_scaled_rising_den(prior.a_exact(), prior.c_exact(), u64::from(prior.b()));
    f.reduce();
    AlphaPosterior::from_form(f)
}

// ---------------------------------------------------------------------
// Generalized Dirichlet-Multinomial stick-breaking
// ---------------------------------------------------------------------

/// Stick-breaking map: K-1 fractions in (0,1) to a K-simplex point.
/// `pi_1 = Z_1, pi_j = Z_j prod_{k<j} (1 - Z_k), pi_K = prod (1 - Z_k)`.
pub fn gdm_stick_to_probs(z: &[f64]) -> Result<Vec<f64>> {
    if z.iter().any(|&v| !(v > 0.0 && v < 1.0)) {
        return Err(Error::Domain("stick fractions must lie in (0, 1)".into()));
    }
    let mut out = Vec::with_capacity(z.len() + 1);
    let mut remaining = 1.0;
    for &zj in z {
        out.push(zj * remaining);
        remaining *= 1.0 - zj;
    }
    out.push(remaining);
    Ok(out)
}

/// Inverse stick-breaking map on the open simplex.
pub fn gdm_probs_to_stick(pi: &[f64]) -> Result<Vec<f64>> {
    if pi.len() < 2 {
        return Err(Error::ShapeMismatch("need at least two categories".into()));
    }
    if pi.iter().any(|&p| !(p > 0.0)) {
        return Err(Error::Domain("probabilities must be positive".into()));
    }
    let total: f64 = pi.iter().sum();
    if (total - 1.0).abs() > 1e-8 {
        return Err(Error::Domain(format!("probabilities sum to {total}, not 1")));
    }
    let mut z = Vec::with_capacity(pi.len() - 1);
    let mut remaining = 1.0;
    for &p in &pi[..pi.len() - 1] {
        z.push(p / remaining);
        remaining -= p;
    }
    Ok(z)
}

/// How the Beta's second shape is set in the latent-Z histogram.
#[derive(Clone, Debug)]
pub enum BetaSpec {
    Fixed(f64),
    Random(PochhammerParams),
}

/// Equal-width histogram on [0, 1].
#[derive(Clone, Debug, Serialize)]
pub struct ZHistogram {
    pub counts: Vec<u64>,
    pub draws: usize,
}

impl ZHistogram {
    pub fn bins(&self) -> usize {
        self.counts.len()
    }
    /// Density estimate at bin i (counts normalized by n * width).
    pub fn density(&self, i: usize) -> f64 {
        self.counts[i] as f64 * self.counts.len() as f64 / self.draws as f64
    }
}

/// Monte-Carlo histogram of `Z ~ Beta(alpha, beta)` with alpha drawn from
/// a PH prior and beta fixed or PH-drawn. With both half-horseshoe the
/// histogram is largest at both ends (values pushed toward 0 or 1).
pub fn gdm_z_histogram(
    alpha_prior: &PochhammerParams,
    beta_spec: &BetaSpec,
    bins: usize,
    draws: usize,
    seed: Seed,
) -> Result<ZHistogram> {
    if bins == 0 || draws == 0 {
        return Err(Error::Domain("bins and draws must be positive".into()));
    }
    let alpha_dist = Pochhammer::new(alpha_prior.clone())?;
    let beta_dist = match beta_spec {
        BetaSpec::Fixed(v) if *v > 0.0 => None,
        BetaSpec::Fixed(v) => {
            return Err(Error::Domain(format!("fixed beta must be positive, got {v}")));
        }
        BetaSpec::Random(p) => Some(Pochhammer::new(p.clone())?),
    };
    let mut rng = RngSuite::new(seed);
    let mut counts = vec![0u64; bins];
    for _ in 0..draws {
        let ua = rng.uniform().max(f64::MIN_POSITIVE);
        let alpha = alpha_dist.quantile(ua)?.max(1e-290);
        let beta = match (&beta_dist, beta_spec) {
            (Some(d), _) => {
                let ub = rng.uniform().max(f64::MIN_POSITIVE);
                d.quantile(ub)?.max(1e-290)
            }
            (None, BetaSpec::Fixed(v)) => *v,
            _ => unreachable!(),
        };
        // Normalized-gamma Beta draw; tiny shapes that underflow fall back
        // to the exact one-hot limit inside `dirichlet`.
        let z = rng.dirichlet(&[alpha, beta])?[0];
        let bin = ((z * bins as f64) as usize).min(bins - 1);
        counts[bin] += 1;
    }
    Ok(ZHistogram { counts, draws })
}

// ---------------------------------------------------------------------
// Ewens sampling formula
// ---------------------------------------------------------------------

/// Allelic partition: `mult[j-1]` alleles appear exactly j times, with
/// `sum_j j * mult[j-1] = n` genes in total.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AllelicPartition {
    mult: Vec<u64>,
}

impl AllelicPartition {
    /// From multiplicities (index j-1 holds m_j); trailing zeros optional.
    pub fn from_multiplicities(mult: Vec<u64>) -> Result<Self> {
        let n: u64 = mult
            .iter()
            .enumerate()
            .map(|(i, &m)| (i as u64 + 1) * m)
            .sum();
        if n == 0 {
            return Err(Error::InvalidPartition("partition of zero genes".into()));
        }
        if mult.len() as u64 > n {
            return Err(Error::InvalidPartition(format!(
                "multiplicity vector longer than n = {n}"
            )));
        }
        let mut mult = mult;
        mult.resize(n as usize, 0);
        Ok(AllelicPartition { mult })
    }

    /// From sparse (j, m_j) pairs, the JSON wire format.
    pub fn from_pairs(pairs: &[(u64, u64)]) -> Result<Self> {
        let max_j = pairs.iter().map(|&(j, _)| j).max().unwrap_or(0);
        if pairs.iter().any(|&(j, _)| j == 0) {
            return Err(Error::InvalidPartition("part size j must be >= 1".into()));
        }
        let mut mult = vec![0u64; max_j as usize];
        for &(j, m) in pairs {
            mult[j as usize - 1] += m;
        }
        Self::from_multiplicities(mult)
    }

    /// Total genes n = sum j * m_j.
    pub fn genes(&self) -> u64 {
        self.mult
            .iter()
            .enumerate()
            .map(|(i, &m)| (i as u64 + 1) * m)
            .sum()
    }

    /// Total distinct alleles sum m_j.
    pub fn alleles(&self) -> u64 {
        self.mult.iter().sum()
    }

    pub fn multiplicities(&self) -> &[u64] {
        &self.mult
    }
}

/// ln of the Ewens sampling formula:
/// `ln n! - ln [alpha]^n + sum_j (m_j ln alpha - m_j ln j - ln m_j!)`.
pub fn esf_log_prob(partition: &AllelicPartition, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::Domain("alpha must be positive".into()));
    }
    let n = partition.genes();
    let mut lp = ln_gamma(n as f64 + 1.0) - (ln_gamma(alpha + n as f64) - ln_gamma(alpha));
    for (i, &m) in partition.mult.iter().enumerate() {
        if m == 0 {
            continue;
        }
        let j = (i + 1) as f64;
        lp += m as f64 * (alpha.ln() - j.ln()) - ln_gamma(m as f64 + 1.0);
    }
    Ok(lp)
}

/// All integer partitions of n as allelic multiplicity vectors (the
/// enumeration oracle; feasible for n <= 12).
pub fn integer_partitions(n: u64) -> Vec<AllelicPartition> {
    fn rec(remaining: u64, max_part: u64, current: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if remaining == 0 {
            out.push(current.clone());
            return;
        }
        let hi = remaining.min(max_part);
        for part in (1..=hi).rev() {
            current.push(part);
            rec(remaining - part, part, current, out);
            current.pop();
        }
    }
    let mut parts = Vec::new();
    rec(n, n, &mut Vec::new(), &mut parts);
    parts
        .into_iter()
        .map(|p| {
            let mut mult = vec![0u64; n as usize];
            for part in p {
                mult[part as usize - 1] += 1;
            }
            AllelicPartition::from_multiplicities(mult).expect("generated partitions are valid")
        })
        .collect()
}

/// Posterior of the mutation rate under a PH prior:
/// proportional to `alpha^{sum m_j} [alpha]^m / ([alpha]^n [c alpha + a]^b)`.
pub fn esf_posterior(
    partition: &AllelicPartition,
    prior: &PochhammerParams,
) -> Result<AlphaPosterior> {
    if prior.d() != 0 {
        return Err(Error::Domain("the ESF posterior uses a plain PH prior (d = 0)".into()));
    }
    let mut f = RationalForm::new();
    f.mul_power_num(partition.alleles());
    f.mul_rising_num(&Rational::from_integer(0.into()), u64::from(prior.m()));
    f.mul_rising_den(&Rational::from_integer(0.into()), partition.genes());
    f.mul_scaled_rising_den(prior.a_exact(), prior.c_exact(), u64::from(prior.b()));
    f.reduce();
    AlphaPosterior::from_form(f)
}

// ---------------------------------------------------------------------
// Yule-Simon
// ---------------------------------------------------------------------

/// ln of the Yule-Simon pmf `p(n | alpha) = alpha B(n, alpha + 1)`.
pub fn yule_simon_log_pmf(n: u64, alpha: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("the Yule-Simon support starts at n = 1".into()));
    }
    if !(alpha > 0.0) {
        return Err(Error::Domain("alpha must be positive".into()));
    }
    Ok(alpha.ln() + ln_gamma(n as f64) + ln_gamma(alpha + 1.0) - ln_gamma(alpha + n as f64 + 1.0))
}

/// Posterior of alpha from i.i.d. Yule-Simon counts: proportional to
/// `alpha^K [alpha]^m / ([c alpha + a]^b prod_k [alpha+1]^{n_k})`.
/// Repeated counts stack poles beyond order two, in which case the
/// normalizer silently comes from quadrature
/// ([`AlphaPosterior::quadrature_normalized`] reports it).
pub fn yule_simon_posterior(
    counts: &[u64],
    prior: &PochhammerParams,
) -> Result<AlphaPosterior> {
    if counts.is_empty() {
        return Err(Error::ShapeMismatch("need at least one observation".into()));
    }
    if counts.iter().any(|&n| n == 0) {
        return Err(Error::Domain("Yule-Simon counts start at 1".into()));
    }
    if prior.d() != 0 {
        return Err(Error::Domain("the Yule-Simon posterior uses a plain PH prior".into()));
    }
    let mut f = RationalForm::new();
    f.mul_power_num(counts.len() as u64);
    f.mul_rising_num(&Rational::from_integer(0.into()), u64::from(prior.m()));
    for &nk in counts {
        f.mul_rising_den(&Rational::from_integer(1.into()), nk);
    }
    f.mul_scaled_rising_den(prior.a_exact(), prior.c_exact(), u64::from(prior.b()));
    f.reduce();
    AlphaPosterior::from_form(f)
}

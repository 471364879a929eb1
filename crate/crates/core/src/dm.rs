//! Dirichlet-Multinomial inference under Pochhammer priors.
//!
//! For a single document with homogeneous concentration, the posterior of
//! alpha is itself a Pochhammer-rational density and everything is closed
//! form: the posterior normalizer, the category-probability means
//! `E(pi_k | n) = C_{n+e_k}/C_n`, and (when enough moments exist) the
//! posterior mean of alpha via power tilts. Heterogeneous concentrations
//! get a Metropolis-within-Gibbs sampler whose coordinate conditionals
//! also admit closed-form expansions for verification.
//!
//! The sampler evaluates log-densities directly through log-gamma forms;
//! residue expansions are reserved for normalizers, moments, and
//! small-size cross-checks (their coefficients grow factorially while the
//! density itself stays well scaled).

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::numeric::exact::{self, Rational};
use crate::numeric::quad::{self, QuadConfig};
use crate::numeric::rising::log_rising;
use crate::numeric::rng::{RngSuite, Seed};
use crate::numeric::solve::increasing_quantile;
use crate::pochhammer::PochhammerParams;
use crate::residue::{ExpandPolicy, RationalForm, ResidueExpansion};

/// S documents by K categories of non-negative counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Corpus {
    counts: Vec<u64>,
    s: usize,
    k: usize,
    row_totals: Vec<u64>,
}

impl Corpus {
    pub fn from_rows(rows: Vec<Vec<u64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::ShapeMismatch(
                "corpus needs at least one document".into(),
            ));
        }
        let k = rows[0].len();
        if k == 0 {
            return Err(Error::ShapeMismatch(
                "corpus needs at least one category".into(),
            ));
        }
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::ShapeMismatch("ragged rows in corpus".into()));
        }
        let s = rows.len();
        let mut counts = Vec::with_capacity(s * k);
        let mut row_totals = Vec::with_capacity(s);
        for r in rows {
            row_totals.push(r.iter().sum());
            counts.extend(r);
        }
        Ok(Corpus {
            counts,
            s,
            k,
            row_totals,
        })
    }

    pub fn single_document(counts: Vec<u64>) -> Result<Self> {
        Self::from_rows(vec![counts])
    }

    /// CSV with a mandatory header row `cat_1,...,cat_K`.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let row: Vec<u64> = rec
                .iter()
                .map(|f| {
                    f.parse::<u64>().map_err(|_| {
                        Error::Parse(format!(
                            "row {}: {f:?} is not a non-negative integer",
                            i + 2
                        ))
                    })
                })
                .collect::<Result<_>>()?;
            rows.push(row);
        }
        Self::from_rows(rows)
    }

    pub fn from_csv_path(path: &std::path::Path) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }

    pub fn s(&self) -> usize {
        self.s
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn get(&self, s: usize, k: usize) -> u64 {
        self.counts[s * self.k + k]
    }
    pub fn row(&self, s: usize) -> &[u64] {
        &self.counts[s * self.k..(s + 1) * self.k]
    }
    pub fn row_total(&self, s: usize) -> u64 {
        self.row_totals[s]
    }
    pub fn total(&self) -> u64 {
        self.row_totals.iter().sum()
    }
    /// Total count of category k across documents.
    pub fn category_total(&self, k: usize) -> u64 {
        (0..self.s).map(|s| self.get(s, k)).sum()
    }
}

/// ln p(n | alpha) up to the multinomial coefficients (constant in alpha):
/// `sum_s [ -ln [A]^{N_s} + sum_k ln [alpha_k]^{n_sk} ]`.
pub fn marginal_log_likelihood(corpus: &Corpus, alpha: &[f64]) -> Result<f64> {
    if alpha.len() != corpus.k() {
        return Err(Error::ShapeMismatch(format!(
            "alpha has {} entries for {} categories",
            alpha.len(),
            corpus.k()
        )));
    }
    if alpha.iter().any(|&a| !(a > 0.0)) {
        return Err(Error::Domain("alpha entries must be positive".into()));
    }
    let a_total: f64 = alpha.iter().sum();
    let mut ll = 0.0;
    for s in 0..corpus.s() {
        ll -= log_rising(a_total, corpus.row_total(s))?;
        for (k, &n) in corpus.row(s).iter().enumerate() {
            if n > 0 {
                ll += log_rising(alpha[k], n)?;
            }
        }
    }
    Ok(ll)
}

// Histogram of positive count values with multiplicities, for log-gamma
// batch evaluation of products of rising factorials.
fn count_histogram(values: impl Iterator<Item = u64>) -> Vec<(u64, f64)> {
    let mut h: BTreeMap<u64, u64> = BTreeMap::new();
    for v in values {
        if v > 0 {
            *h.entry(v).or_insert(0) += 1;
        }
    }
    h.into_iter().map(|(v, m)| (v, m as f64)).collect()
}

// sum over the histogram of mult * ln [x]^{n}.
fn log_rising_hist(x: f64, hist: &[(u64, f64)]) -> f64 {
    let mut s = 0.0;
    let mut mult_total = 0.0;
    for &(n, mult) in hist {
        s += mult * ln_gamma(x + n as f64);
        mult_total += mult;
    }
    s - mult_total * ln_gamma(x)
}

/// Closed-form single-document posterior of a homogeneous concentration.
///
/// The prior's `m` enters the count product as a pseudo-count `n_0 = m`.
/// Escalation mirrors the residue engine: exact coefficients at double or
/// extended precision, then a quadrature normalizer for sizes whose
/// residue sums cancel beyond even the extended mantissa.
#[derive(Clone, Debug)]
pub struct HomogeneousPosterior {
    prior: PochhammerParams,
    counts: Vec<u64>,
    k: usize,
    n: u64,
    form: RationalForm,
    expansion: ResidueExpansion,
    hist: Vec<(u64, f64)>,
}

fn homog_form(counts: &[u64], prior: &PochhammerParams) -> RationalForm {
    let k = counts.len() as u64;
    let n: u64 = counts.iter().sum();
    let mut f = RationalForm::new();
    for &nk in counts {
        f.mul_rising_num(&Rational::from_integer(0.into()), nk);
    }
    f.mul_rising_num(&Rational::from_integer(0.into()), u64::from(prior.m()));
    f.mul_scaled_rising_den(
        &Rational::from_integer(0.into()),
        &Rational::from_integer(k.into()),
        n,
    );
    f.mul_scaled_rising_den(prior.a_exact(), prior.c_exact(), u64::from(prior.b()));
    f.reduce();
    f
}

// The Thm.-3-style expansion needs simple poles. Collisions between the
// likelihood grid (i-1)/K and the prior grid (a+j-1)/c are checked exactly
// on the *reduced* form: numerator zeros routinely absorb grid overlaps
// (K = 1 cancels the entire likelihood), and only a surviving order-2 pole
// breaks the simple-root formulas.
fn check_simple_poles(form: &RationalForm) -> Result<()> {
    for (v, order) in form.den_poles() {
        if order >= 2 {
            let loc = exact::to_f64(&v);
            return Err(Error::PoleCollision(loc, loc));
        }
    }
    Ok(())
}

/// Single-document homogeneous posterior (simple poles). Errors with
/// [`Error::PoleCollision`] when the likelihood and prior pole grids
/// intersect; the colliding prior form `a = 0, c = K` is served by
/// [`homog_posterior_double_root`].
pub fn homog_posterior(corpus: &Corpus, prior: &PochhammerParams) -> Result<HomogeneousPosterior> {
    homog_posterior_with(corpus, prior, &ExpandPolicy::default())
}

pub fn homog_posterior_with(
    corpus: &Corpus,
    prior: &PochhammerParams,
    policy: &ExpandPolicy,
) -> Result<HomogeneousPosterior> {
    if corpus.s() != 1 {
        return Err(Error::ShapeMismatch(
            "the closed form covers a single document; fit multi-document corpora with MWG".into(),
        ));
    }
    if prior.d() != 0 {
        return Err(Error::Domain("the posterior prior must have d = 0".into()));
    }
    let counts = corpus.row(0).to_vec();
    check_simple_poles(&homog_form(&counts, prior))?;
    build_homog(counts, prior, policy)
}

/// The colliding prior form PH(m = n_0, a = 0, c = K): likelihood and
/// prior poles coincide pairwise, giving order-2 poles.
pub fn homog_posterior_double_root(
    corpus: &Corpus,
    prior: &PochhammerParams,
) -> Result<HomogeneousPosterior> {
    use num_traits::Zero;
    if corpus.s() != 1 {
        return Err(Error::ShapeMismatch(
            "the closed form covers a single document".into(),
        ));
    }
    let k = Rational::from_integer((corpus.k() as u64).into());
    if prior.d() != 0 || !prior.a_exact().is_zero() || prior.c_exact() != &k {
        return Err(Error::Domain(
            "double-root posterior requires a prior of the form PH(m, a=0, b, c=K)".into(),
        ));
    }
    build_homog(corpus.row(0).to_vec(), prior, &ExpandPolicy::default())
}

fn build_homog(
    counts: Vec<u64>,
    prior: &PochhammerParams,
    policy: &ExpandPolicy,
) -> Result<HomogeneousPosterior> {
    let k = counts.len();
    let n: u64 = counts.iter().sum();
    let form = homog_form(&counts, prior);
    let expansion = match form.expand(policy) {
        Ok(e) => e,
        Err(Error::SizeBudget { .. }) => {
            // Too many poles for the default budget; quadrature normalizer
            // with extended-precision coefficients retained for inspection.
            let relaxed = ExpandPolicy {
                size_budget: usize::MAX,
                ..*policy
            };
            form.expand(&relaxed)?
        }
        Err(e) => return Err(e),
    };
    let hist = count_histogram(
        counts
            .iter()
            .copied()
            .chain(std::iter::once(u64::from(prior.m()))),
    );
    Ok(HomogeneousPosterior {
        prior: prior.clone(),
        counts,
        k,
        n,
        form,
        expansion,
        hist,
    })
}

impl HomogeneousPosterior {
    pub fn prior(&self) -> &PochhammerParams {
        &self.prior
    }
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }
    pub fn expansion(&self) -> &ResidueExpansion {
        &self.expansion
    }
    pub fn log_norm_const(&self) -> f64 {
        self.expansion.log_norm_const
    }

    /// Unnormalized log-density via log-gamma forms (stable at any size).
    pub fn log_unnorm(&self, alpha: f64) -> f64 {
        if !(alpha > 0.0) {
            return self.form.log_density_at(alpha.max(0.0));
        }
        let kf = self.k as f64;
        let prior_den = {
            let x = self.prior.c() * alpha + self.prior.a();
            ln_gamma(x + f64::from(self.prior.b())) - ln_gamma(x)
        };
        log_rising_hist(alpha, &self.hist)
            - (ln_gamma(kf * alpha + self.n as f64) - ln_gamma(kf * alpha))
            - prior_den
    }

    pub fn log_density(&self, alpha: f64) -> f64 {
        self.log_unnorm(alpha) - self.log_norm_const()
    }

    /// Posterior CDF of alpha: residue form when healthy, quadrature of the
    /// stable log-density otherwise.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            return Ok(0.0);
        }
        if !self.expansion.numeric_fallback {
            let (f, cancel) = self.expansion.cdf_checked(x);
            if cancel <= 16.0 {
                return Ok(f);
            }
        }
        let log_prefix =
            quad::integrate_prefix_log(|a| self.log_unnorm(a), x, 1e-10, QuadConfig::default())?;
        Ok((log_prefix - self.log_norm_const()).exp().clamp(0.0, 1.0))
    }

    pub fn alpha_quantile(&self, u: f64) -> Result<f64> {
        increasing_quantile(|x| self.cdf(x), u, 1e-11)
    }

    /// E(pi_k | n) = C_{n+e_k} / C_n, re-running the posterior with n_k
    /// incremented. The incremented normalizer uses the same numeric route
    /// as this one so the errors track each other.
    pub fn mean_pi(&self, k: usize) -> Result<f64> {
        if k >= self.k {
            return Err(Error::ShapeMismatch(format!(
                "category {k} out of range for K = {}",
                self.k
            )));
        }
        self.mean_pi_for_count(self.counts[k])
    }

    fn mean_pi_for_count(&self, nk: u64) -> Result<f64> {
        let mut counts = self.counts.clone();
        let pos = counts
            .iter()
            .position(|&c| c == nk)
            .expect("count value comes from this posterior");
        counts[pos] += 1;
        let log_c_up = if self.expansion.numeric_fallback {
            homog_form(&counts, &self.prior).integrate_log(1e-10)?
        } else {
            build_homog(counts, &self.prior, &ExpandPolicy::default())?.log_norm_const()
        };
        Ok((log_c_up - self.log_norm_const()).exp())
    }

    /// All K category-probability means; categories with equal counts share
    /// one normalizer ratio, so the work scales with distinct count values.
    pub fn mean_pi_all(&self) -> Result<Vec<f64>> {
        let mut cache: BTreeMap<u64, f64> = BTreeMap::new();
        let mut out = Vec::with_capacity(self.k);
        for &nk in &self.counts {
            let v = match cache.get(&nk) {
                Some(&v) => v,
                None => {
                    let v = self.mean_pi_for_count(nk)?;
                    cache.insert(nk, v);
                    v
                }
            };
            out.push(v);
        }
        Ok(out)
    }

    /// E(alpha | n) via a power tilt of the posterior; requires b >= m+3.
    pub fn mean_alpha(&self) -> Result<f64> {
        if self.prior.b() < self.prior.m() + 3 {
            return Err(Error::MomentDoesNotExist { k: 1, available: 0 });
        }
        let tilted = self.form.tilted(1);
        let log_c_tilt = if self.expansion.numeric_fallback {
            tilted.integrate_log(1e-10)?
        } else {
            tilted.expand(&ExpandPolicy::default())?.log_norm_const
        };
        Ok((log_c_tilt - self.log_norm_const()).exp())
    }
}

/// Unnormalized log-density of the Gibbs conditional for one coordinate:
/// `-ln [alpha + A_{-k}]^N + ln [alpha]^{n_k} + ln [alpha]^m - ln [c alpha + a]^b`.
pub fn heter_conditional_log_density(
    alpha_k: f64,
    n_k: u64,
    n_total: u64,
    a_minus_k: f64,
    prior: &PochhammerParams,
) -> Result<f64> {
    if n_total > 0 && !(a_minus_k > 0.0) {
        return Err(Error::Domain(
            "A_{-k} must be positive when the document has counts".into(),
        ));
    }
    if n_k > n_total {
        return Err(Error::Domain("n_k cannot exceed N".into()));
    }
    if !(alpha_k >= 0.0) {
        return Err(Error::Domain("alpha_k must be >= 0".into()));
    }
    if alpha_k == 0.0 {
        return Ok(if n_k + u64::from(prior.m()) > 0 {
            f64::NEG_INFINITY
        } else {
            -log_rising(a_minus_k, n_total)? - log_rising(prior.a(), u64::from(prior.b()))?
        });
    }
    Ok(
        -log_rising(alpha_k + a_minus_k, n_total)? + log_rising(alpha_k, n_k)?
            + log_rising(alpha_k, u64::from(prior.m()))?
            - log_rising(prior.c() * alpha_k + prior.a(), u64::from(prior.b()))?,
    )
}

/// Closed-form expansion of the Gibbs conditional (for verification and
/// conditional means; the sampler itself never needs it).
#[derive(Clone, Debug)]
pub struct ConditionalPosterior {
    n_k: u64,
    n_total: u64,
    a_minus_k: f64,
    prior: PochhammerParams,
    expansion: ResidueExpansion,
}

fn heter_form(
    n_k: u64,
    n_total: u64,
    a_minus_k: f64,
    prior: &PochhammerParams,
) -> Result<RationalForm> {
    let a_rat = exact::rational_from_f64(a_minus_k)?;
    let mut f = RationalForm::new();
    f.mul_rising_num(&Rational::from_integer(0.into()), n_k);
    f.mul_rising_num(&Rational::from_integer(0.into()), u64::from(prior.m()));
    f.mul_rising_den(&a_rat, n_total);
    f.mul_scaled_rising_den(prior.a_exact(), prior.c_exact(), u64::from(prior.b()));
    f.reduce();
    Ok(f)
}

pub fn heter_conditional_expansion(
    n_k: u64,
    n_total: u64,
    a_minus_k: f64,
    prior: &PochhammerParams,
) -> Result<ConditionalPosterior> {
    heter_conditional_expansion_with(n_k, n_total, a_minus_k, prior, &ExpandPolicy::default())
}

pub fn heter_conditional_expansion_with(
    n_k: u64,
    n_total: u64,
    a_minus_k: f64,
    prior: &PochhammerParams,
    policy: &ExpandPolicy,
) -> Result<ConditionalPosterior> {
    if n_total > 0 && !(a_minus_k > 0.0) {
        return Err(Error::Domain(
            "A_{-k} must be positive when the document has counts".into(),
        ));
    }
    if n_k > n_total {
        return Err(Error::Domain("n_k cannot exceed N".into()));
    }
    let expansion = heter_form(n_k, n_total, a_minus_k, prior)?.expand(policy)?;
    Ok(ConditionalPosterior {
        n_k,
        n_total,
        a_minus_k,
        prior: prior.clone(),
        expansion,
    })
}

impl ConditionalPosterior {
    pub fn expansion(&self) -> &ResidueExpansion {
        &self.expansion
    }
    pub fn log_norm_const(&self) -> f64 {
        self.expansion.log_norm_const
    }

    /// Conditional posterior mean of pi_k: the normalizer ratio
    /// `C_{n_k+1, N+1, A_{-k}} / C_{n_k, N, A_{-k}}`.
    pub fn mean_pi(&self) -> Result<f64> {
        let up = heter_form(self.n_k + 1, self.n_total + 1, self.a_minus_k, &self.prior)?;
        let log_c_up = if self.expansion.numeric_fallback {
            up.integrate_log(1e-10)?
        } else {
            up.expand(&ExpandPolicy::default())?.log_norm_const
        };
        Ok((log_c_up - self.log_norm_const()).exp())
    }
}

/// Proposal stepsize for the sampler.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum StepSize {
    Fixed(f64),
    /// Tune multiplicatively during burn-in toward 30-45% acceptance,
    /// starting from the given sigma; frozen afterwards.
    Adapt { initial: f64 },
}

impl Default for StepSize {
    fn default() -> Self {
        StepSize::Fixed(0.5)
    }
}

/// Configuration of one Metropolis-within-Gibbs run.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MwgConfig {
    /// Total sweeps, including burn-in.
    pub iterations: usize,
    pub burn_in: usize,
    pub stepsize: StepSize,
    pub seed: Seed,
}

impl MwgConfig {
    pub fn new(iterations: usize, burn_in: usize, seed: Seed) -> Self {
        MwgConfig {
            iterations,
            burn_in,
            stepsize: StepSize::default(),
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Domain("iterations must be >= 1".into()));
        }
        if self.burn_in > self.iterations {
            return Err(Error::Domain("burn-in exceeds iterations".into()));
        }
        let sigma = match self.stepsize {
            StepSize::Fixed(s) | StepSize::Adapt { initial: s } => s,
        };
        if !(sigma > 0.0) {
            return Err(Error::Domain("stepsize must be positive".into()));
        }
        Ok(())
    }
}

/// Seeded MCMC draws of alpha vectors with acceptance bookkeeping.
#[derive(Clone, Debug)]
pub struct PosteriorChain {
    draws: Vec<f64>,
    k: usize,
    retained: usize,
    pub accepted: Vec<u64>,
    pub sweeps: usize,
    pub burn_in: usize,
    pub seed: Seed,
    /// Stepsize in effect after any adaptation.
    pub sigma: f64,
}

impl PosteriorChain {
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn retained(&self) -> usize {
        self.retained
    }
    pub fn draw(&self, t: usize) -> &[f64] {
        &self.draws[t * self.k..(t + 1) * self.k]
    }
    pub fn draws_flat(&self) -> &[f64] {
        &self.draws
    }
    pub fn acceptance_rate(&self, k: usize) -> f64 {
        self.accepted[k] as f64 / self.sweeps as f64
    }
    pub fn column(&self, k: usize) -> Vec<f64> {
        (0..self.retained)
            .map(|t| self.draws[t * self.k + k])
            .collect()
    }
}

// Per-coordinate pieces of the heterogeneous log-posterior.
struct HeterTarget {
    k: usize,
    ns_hist: Vec<(u64, f64)>,
    per_k: Vec<Vec<(u64, f64)>>,
    prior_m: u64,
    prior_a: f64,
    prior_b: u32,
    prior_c: f64,
}

impl HeterTarget {
    fn new(corpus: &Corpus, prior: &PochhammerParams) -> Self {
        let per_k = (0..corpus.k())
            .map(|k| count_histogram((0..corpus.s()).map(|s| corpus.get(s, k))))
            .collect();
        HeterTarget {
            k: corpus.k(),
            ns_hist: count_histogram((0..corpus.s()).map(|s| corpus.row_total(s))),
            per_k,
            prior_m: u64::from(prior.m()),
            prior_a: prior.a(),
            prior_b: prior.b(),
            prior_c: prior.c(),
        }
    }

    // -sum_s ln [A]^{N_s}
    fn log_g(&self, a_total: f64) -> f64 {
        let mut s = 0.0;
        let mut mult = 0.0;
        for &(n, m) in &self.ns_hist {
            s -= m * ln_gamma(a_total + n as f64);
            mult += m;
        }
        s + mult * ln_gamma(a_total)
    }

    // Prior plus per-category likelihood terms in alpha_k.
    fn log_f(&self, k: usize, alpha: f64) -> f64 {
        let mut v = log_rising_hist(alpha, &self.per_k[k]);
        if self.prior_m > 0 {
            v += ln_gamma(alpha + self.prior_m as f64) - ln_gamma(alpha);
        }
        let x = self.prior_c * alpha + self.prior_a;
        v -= ln_gamma(x + f64::from(self.prior_b)) - ln_gamma(x);
        v
    }
}

/// Metropolis-within-Gibbs over heterogeneous alpha (one log-normal
/// random-walk update per coordinate per sweep).
///
/// The acceptance uses the standard Metropolis-Hastings rule with the
/// log-normal proposal's Jacobian correction `ln alpha' - ln alpha`
/// (a proposal symmetric in log space is asymmetric in alpha).
pub fn mwg_sample(
    corpus: &Corpus,
    prior: &PochhammerParams,
    cfg: &MwgConfig,
) -> Result<PosteriorChain> {
    cfg.validate()?;
    let target = HeterTarget::new(corpus, prior);
    run_mwg(target, cfg, 1.0)
}

/// Same sampler with a single shared alpha. The multi-document homogeneous
/// model has no closed form (the per-document `[K alpha]^{N_s}` factors
/// stack pole multiplicities), so it always goes through MWG.
pub fn mwg_sample_homogeneous(
    corpus: &Corpus,
    prior: &PochhammerParams,
    cfg: &MwgConfig,
) -> Result<PosteriorChain> {
    cfg.validate()?;
    let kf = corpus.k() as f64;
    let all_counts =
        count_histogram((0..corpus.s()).flat_map(|s| corpus.row(s).iter().copied()));
    let target = HeterTarget {
        k: 1,
        ns_hist: count_histogram((0..corpus.s()).map(|s| corpus.row_total(s))),
        per_k: vec![all_counts],
        prior_m: u64::from(prior.m()),
        prior_a: prior.a(),
        prior_b: prior.b(),
        prior_c: prior.c(),
    };
    // The shared-alpha target sees A = K alpha in the gamma-ratio term.
    run_mwg(target, cfg, kf)
}

fn run_mwg(target: HeterTarget, cfg: &MwgConfig, a_scale: f64) -> Result<PosteriorChain> {
    let k = target.k;
    let mut rng = RngSuite::new(cfg.seed);
    let mut sigma = match cfg.stepsize {
        StepSize::Fixed(s) | StepSize::Adapt { initial: s } => s,
    };
    let adaptive = matches!(cfg.stepsize, StepSize::Adapt { .. });

    // Initialize alpha_k ~ logNormal(0, 1).
    let mut alpha: Vec<f64> = (0..k)
        .map(|_| rng.normal(0.0, 1.0).map(f64::exp))
        .collect::<Result<_>>()?;
    let mut a_total: f64 = alpha.iter().sum::<f64>() * a_scale;
    let mut log_g_cur = target.log_g(a_total);
    let mut log_f_cur: Vec<f64> = (0..k).map(|i| target.log_f(i, alpha[i])).collect();

    let retained_n = cfg.iterations - cfg.burn_in;
    let mut draws = Vec::with_capacity(retained_n * k);
    let mut accepted = vec![0u64; k];
    let mut adapt_accepts = 0u64;
    let mut adapt_window = 0u64;

    for sweep in 0..cfg.iterations {
        for i in 0..k {
            let cur = alpha[i];
            let eps = rng.normal(0.0, sigma)?;
            let prop = (cur.ln() + eps).exp();
            adapt_window += 1;
            if !(prop > 0.0 && prop.is_finite()) {
                continue;
            }
            let a_prop = a_total + (prop - cur) * a_scale;
            let log_g_prop = target.log_g(a_prop);
            let log_f_prop = target.log_f(i, prop);
            // MH ratio with the log-normal Jacobian correction.
            let lar =
                (log_f_prop + log_g_prop) - (log_f_cur[i] + log_g_cur) + (prop.ln() - cur.ln());
            let u = rng.uniform().max(f64::MIN_POSITIVE);
            if u.ln() < lar {
                alpha[i] = prop;
                a_total = a_prop;
                log_g_cur = log_g_prop;
                log_f_cur[i] = log_f_prop;
                accepted[i] += 1;
                adapt_accepts += 1;
            }
        }
        if adaptive && sweep < cfg.burn_in && adapt_window >= 100 * k as u64 {
            let rate = adapt_accepts as f64 / adapt_window as f64;
            sigma = (sigma * (rate - 0.375).exp()).clamp(0.01, 10.0);
            adapt_accepts = 0;
            adapt_window = 0;
        }
        if sweep >= cfg.burn_in {
            draws.extend_from_slice(&alpha);
        }
    }

    Ok(PosteriorChain {
        draws,
        k,
        retained: retained_n,
        accepted,
        sweeps: cfg.iterations,
        burn_in: cfg.burn_in,
        seed: cfg.seed,
        sigma,
    })
}

/// Posterior mean and equal-tailed 95% interval of one quantity.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct IntervalSummary {
    pub mean: f64,
    pub q025: f64,
    pub q975: f64,
}

/// Per-category alpha summaries and per-document category-probability
/// summaries from a chain.
#[derive(Clone, Debug, Serialize)]
pub struct ChainSummaries {
    pub alpha: Vec<IntervalSummary>,
    /// Indexed by document, then category.
    pub pi: Vec<Vec<IntervalSummary>>,
    pub acceptance: Vec<f64>,
}

// Empirical quantile with linear interpolation between order statistics.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let w = h - lo as f64;
    sorted[lo] * (1.0 - w) + sorted[hi] * w
}

fn summarize(values: &mut [f64]) -> IntervalSummary {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.sort_by(f64::total_cmp);
    IntervalSummary {
        mean,
        q025: quantile_sorted(values, 0.025),
        q975: quantile_sorted(values, 0.975),
    }
}

/// Summaries of alpha and of the category probabilities. Each retained
/// draw maps to pi through additive smoothing,
/// `pi_sk = (n_sk + alpha_k) / (N_s + A)`, and those draws are summarized
/// with their mean and empirical 2.5% / 97.5% quantiles.
///
/// A K = 1 chain against a K > 1 corpus is interpreted as a homogeneous
/// fit: the single alpha is shared by every category and A = K alpha.
pub fn chain_summaries(chain: &PosteriorChain, corpus: &Corpus) -> Result<ChainSummaries> {
    if chain.retained() == 0 {
        return Err(Error::EmptyChain);
    }
    let homogeneous = chain.k() == 1 && corpus.k() > 1;
    if !homogeneous && chain.k() != corpus.k() {
        return Err(Error::ShapeMismatch(format!(
            "chain has {} coordinates for {} categories",
            chain.k(),
            corpus.k()
        )));
    }
    let t = chain.retained();
    let k = corpus.k();
    let kf = k as f64;

    let a_tot: Vec<f64> = (0..t)
        .map(|i| {
            let row = chain.draw(i);
            if homogeneous {
                kf * row[0]
            } else {
                row.iter().sum()
            }
        })
        .collect();

    let alpha_cols = chain.k();
    let mut alpha = Vec::with_capacity(alpha_cols);
    for kk in 0..alpha_cols {
        let mut col = chain.column(kk);
        alpha.push(summarize(&mut col));
    }

    let mut pi = Vec::with_capacity(corpus.s());
    let mut buf = vec![0.0f64; t];
    for s in 0..corpus.s() {
        let ns = corpus.row_total(s) as f64;
        let mut doc = Vec::with_capacity(k);
        for kk in 0..k {
            let n_sk = corpus.get(s, kk) as f64;
            for (i, slot) in buf.iter_mut().enumerate() {
                let a_k = if homogeneous {
                    chain.draw(i)[0]
                } else {
                    chain.draw(i)[kk]
                };
                *slot = (n_sk + a_k) / (ns + a_tot[i]);
            }
            doc.push(summarize(&mut buf));
        }
        pi.push(doc);
    }

    Ok(ChainSummaries {
        alpha,
        pi,
        acceptance: (0..chain.k()).map(|kk| chain.acceptance_rate(kk)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pochhammer::{ks_distance, Pochhammer};
    use approx::assert_relative_eq;

    fn prior(m: u32, a: f64, b: u32, c: f64) -> PochhammerParams {
        PochhammerParams::new(m, a, b, c).unwrap()
    }

    #[test]
    fn corpus_shapes_and_csv() {
        let c = Corpus::from_rows(vec![vec![1, 2, 3], vec![0, 0, 4]]).unwrap();
        assert_eq!(c.s(), 2);
        assert_eq!(c.k(), 3);
        assert_eq!(c.row_total(0), 6);
        assert_eq!(c.category_total(2), 7);

        let csv_text = "cat_1,cat_2,cat_3\n1,2,3\n0,0,4\n";
        let parsed = Corpus::from_csv_reader(csv_text.as_bytes()).unwrap();
        assert_eq!(parsed, c);

        assert!(Corpus::from_rows(vec![vec![1], vec![1, 2]]).is_err());
        assert!(Corpus::from_csv_reader("cat_1\n-3\n".as_bytes()).is_err());
    }

    #[test]
    fn marginal_likelihood_examples() {
        // all-zero counts: empty likelihood
        let c = Corpus::from_rows(vec![vec![0, 0]]).unwrap();
        assert_eq!(marginal_log_likelihood(&c, &[0.3, 2.0]).unwrap(), 0.0);

        // single count: flat in homogeneous alpha
        let c = Corpus::single_document(vec![1, 0]).unwrap();
        for a in [0.3, 1.0, 7.5] {
            assert_relative_eq!(
                marginal_log_likelihood(&c, &[a, a]).unwrap(),
                -std::f64::consts::LN_2,
                epsilon = 1e-12
            );
        }

        // n = (2, 0) at alpha = (1, 1): ln [1]^2 - ln [2]^2 = -ln 3
        let c = Corpus::single_document(vec![2, 0]).unwrap();
        assert_relative_eq!(
            marginal_log_likelihood(&c, &[1.0, 1.0]).unwrap(),
            -(3f64.ln()),
            epsilon = 1e-12
        );

        assert!(marginal_log_likelihood(&c, &[1.0]).is_err());
        assert!(marginal_log_likelihood(&c, &[1.0, 0.0]).is_err());
    }

    #[test]
    fn flat_likelihood_posterior_equals_prior() {
        // K = 2, n = (1, 0): the marginal likelihood is constant in alpha.
        let c = Corpus::single_document(vec![1, 0]).unwrap();
        let pr = prior(0, 1.0, 2, 1.0);
        let post = homog_posterior(&c, &pr).unwrap();
        let ph = Pochhammer::new(pr).unwrap();
        for &x in &[0.05, 0.3, 1.0, 4.0, 20.0] {
            assert_relative_eq!(
                post.log_density(x),
                ph.log_density(x).unwrap(),
                max_relative = 1e-10
            );
        }
    }

    #[test]
    fn k1_posterior_equals_prior() {
        let c = Corpus::single_document(vec![5]).unwrap();
        let pr = prior(0, 1.0, 3, 1.0);
        let post = homog_posterior(&c, &pr).unwrap();
        let ph = Pochhammer::new(pr).unwrap();
        for &x in &[0.1, 1.0, 10.0] {
            assert_relative_eq!(
                post.log_density(x),
                ph.log_density(x).unwrap(),
                max_relative = 1e-10
            );
        }
        assert_relative_eq!(post.mean_pi(0).unwrap(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn worked_posterior_normalizer() {
        // K = 2, n = (2, 0), prior PH(0,1,2,1):
        // posterior ~ 1/(2 (2a+1)(a+2)), C_n = (ln 2)/3.
        let c = Corpus::single_document(vec![2, 0]).unwrap();
        let post = homog_posterior(&c, &prior(0, 1.0, 2, 1.0)).unwrap();
        assert_relative_eq!(
            post.log_norm_const().exp(),
            std::f64::consts::LN_2 / 3.0,
            max_relative = 1e-12
        );
        let q = quad::integrate_halfline(|a| -(2.0 * (2.0 * a + 1.0) * (a + 2.0)).ln(), 1e-10)
            .unwrap();
        assert_relative_eq!(post.log_norm_const().exp(), q, max_relative = 1e-8);
    }

    #[test]
    fn posterior_mean_pi_examples() {
        // equal counts: E(pi_k) = 1/K
        let c = Corpus::single_document(vec![2, 2, 2]).unwrap();
        let post = homog_posterior(&c, &prior(0, 1.0, 2, 1.0)).unwrap();
        for &m in &post.mean_pi_all().unwrap() {
            assert_relative_eq!(m, 1.0 / 3.0, epsilon = 1e-10);
        }

        // K = 2, n = (2, 0): E(pi_1) in (0.5, 1), matching quadrature of
        // E[(n_k + a)/(N + K a)] under the posterior.
        let c = Corpus::single_document(vec![2, 0]).unwrap();
        let post = homog_posterior(&c, &prior(0, 1.0, 2, 1.0)).unwrap();
        let m1 = post.mean_pi(0).unwrap();
        assert!(m1 > 0.5 && m1 < 1.0);
        let log_c = post.log_norm_const();
        let oracle = quad::integrate_halfline(
            |a| post.log_unnorm(a) - log_c + ((2.0 + a) / (2.0 + 2.0 * a)).ln(),
            1e-10,
        )
        .unwrap();
        assert_relative_eq!(m1, oracle, max_relative = 1e-6);

        // means sum to one and bracket between n_k/N and 1/K
        let c = Corpus::single_document(vec![5, 1, 0, 2]).unwrap();
        let post = homog_posterior(&c, &prior(0, 1.0, 3, 1.0)).unwrap();
        let means = post.mean_pi_all().unwrap();
        assert_relative_eq!(means.iter().sum::<f64>(), 1.0, epsilon = 1e-8);
        let n_tot = 8.0;
        for (k, &m) in means.iter().enumerate() {
            let raw = post.counts()[k] as f64 / n_tot;
            let (lo, hi) = if raw < 0.25 { (raw, 0.25) } else { (0.25, raw) };
            assert!(
                m >= lo - 1e-12 && m <= hi + 1e-12,
                "k={k}: {m} not in [{lo}, {hi}]"
            );
        }
    }

    #[test]
    fn posterior_mean_alpha() {
        // b = m + 2: the posterior mean of alpha does not exist.
        let c = Corpus::single_document(vec![2, 0]).unwrap();
        let post = homog_posterior(&c, &prior(0, 1.0, 2, 1.0)).unwrap();
        assert!(matches!(
            post.mean_alpha(),
            Err(Error::MomentDoesNotExist { .. })
        ));

        // b = 5: matches quadrature of alpha * posterior.
        let post = homog_posterior(&c, &prior(0, 1.0, 5, 1.0)).unwrap();
        let log_c = post.log_norm_const();
        let oracle =
            quad::integrate_halfline(|a| post.log_unnorm(a) - log_c + a.ln(), 1e-10).unwrap();
        assert_relative_eq!(post.mean_alpha().unwrap(), oracle, max_relative = 1e-6);

        // N = 0: posterior mean equals the prior mean.
        let c0 = Corpus::single_document(vec![0, 0]).unwrap();
        let post0 = homog_posterior(&c0, &prior(0, 1.0, 5, 1.0)).unwrap();
        let ph = Pochhammer::new(prior(0, 1.0, 5, 1.0)).unwrap();
        assert_relative_eq!(
            post0.mean_alpha().unwrap(),
            ph.mean().unwrap(),
            max_relative = 1e-9
        );
    }

    #[test]
    fn cross_collision_error_points_to_double_root() {
        // K = 2, prior c = 2, a = 1: (i-1)/2 meets (1+j-1)/2 for i = j+1.
        let c = Corpus::single_document(vec![3, 1]).unwrap();
        let r = homog_posterior(&c, &prior(0, 1.0, 4, 2.0));
        assert!(matches!(r, Err(Error::PoleCollision(_, _))));
    }

    #[test]
    fn double_root_posterior_matches_quadrature() {
        // K = 2, n = (2, 1), prior PH(1, 0, 4, 2).
        let c = Corpus::single_document(vec![2, 1]).unwrap();
        let pr = prior(1, 0.0, 4, 2.0);
        let post = homog_posterior_double_root(&c, &pr).unwrap();
        assert!(post.expansion().poles.iter().any(|p| p.order == 2));
        let oracle = homog_form(&[2, 1], &pr).integrate_log(1e-10).unwrap();
        assert_relative_eq!(post.log_norm_const(), oracle, max_relative = 1e-6);
        // no pole survives at the origin (gamma_1* = beta_1* = 0)
        assert!(post.expansion().poles.iter().all(|p| p.location > 0.0));

        // N = 0 with m >= 1: posterior equals the prior pointwise.
        let c0 = Corpus::single_document(vec![0, 0]).unwrap();
        let post0 = homog_posterior_double_root(&c0, &pr).unwrap();
        let ph = Pochhammer::new(pr.clone()).unwrap();
        for &x in &[0.1, 1.0, 5.0] {
            assert_relative_eq!(
                post0.log_density(x),
                ph.log_density(x).unwrap(),
                max_relative = 1e-9
            );
        }

        // form mismatch is rejected
        assert!(homog_posterior_double_root(&c, &prior(0, 1.0, 4, 2.0)).is_err());
    }

    #[test]
    fn heter_conditional_density_shape() {
        let pr = prior(0, 1.0, 2, 1.0);
        // zero count: strictly decreasing log-density (horseshoe again)
        let mut prev = heter_conditional_log_density(1e-9, 0, 10, 3.0, &pr).unwrap();
        for i in 1..50 {
            let a = i as f64 * 0.2;
            let v = heter_conditional_log_density(a, 0, 10, 3.0, &pr).unwrap();
            assert!(v < prev);
            prev = v;
        }
        // N = n_k = 0: equals the prior log-density up to a constant
        let ph = Pochhammer::new(pr.clone()).unwrap();
        let c0 = heter_conditional_log_density(1.0, 0, 0, 1.0, &pr).unwrap()
            - ph.log_density(1.0).unwrap();
        for &x in &[0.2, 2.0, 9.0] {
            let diff = heter_conditional_log_density(x, 0, 0, 1.0, &pr).unwrap()
                - ph.log_density(x).unwrap();
            assert_relative_eq!(diff, c0, epsilon = 1e-10);
        }
    }

    #[test]
    fn heter_expansion_matches_direct_density() {
        let pr = prior(0, 1.0, 2, 1.0);
        let cond = heter_conditional_expansion(2, 10, 3.7, &pr).unwrap();
        let log_c = cond.log_norm_const();
        // quadrature oracle for the normalizer
        let oracle = quad::integrate_halfline_log(
            |a| heter_conditional_log_density(a, 2, 10, 3.7, &pr).unwrap(),
            1e-10,
            QuadConfig::default(),
        )
        .unwrap();
        assert_relative_eq!(log_c, oracle, max_relative = 1e-6);
        // pointwise agreement after normalization
        for &x in &[0.05, 0.5, 1.5, 6.0] {
            let direct =
                (heter_conditional_log_density(x, 2, 10, 3.7, &pr).unwrap() - log_c).exp();
            assert_relative_eq!(direct, cond.expansion().density(x), max_relative = 1e-6);
        }
        // conditional mean of pi stays in (0, 1)
        let mp = cond.mean_pi().unwrap();
        assert!(mp > 0.0 && mp < 1.0);
    }

    #[test]
    fn mwg_determinism_and_burn_in() {
        let c = Corpus::from_rows(vec![vec![5, 3], vec![2, 2]]).unwrap();
        let pr = prior(0, 1.0, 2, 1.0);
        let cfg = MwgConfig::new(50, 50, Seed(3));
        let chain = mwg_sample(&c, &pr, &cfg).unwrap();
        assert_eq!(chain.retained(), 0);
        assert_eq!(chain.accepted.len(), 2);
        assert!(matches!(chain_summaries(&chain, &c), Err(Error::EmptyChain)));

        let cfg = MwgConfig::new(200, 100, Seed(3));
        let c1 = mwg_sample(&c, &pr, &cfg).unwrap();
        let c2 = mwg_sample(&c, &pr, &cfg).unwrap();
        assert_eq!(c1.draws_flat(), c2.draws_flat());
        assert!(c1.draws_flat().iter().all(|&a| a > 0.0));
    }

    #[test]
    fn mwg_flat_target_recovers_prior() {
        // N = 0: the chain samples the prior; compare to inverse-CDF draws.
        let c = Corpus::single_document(vec![0]).unwrap();
        let pr = prior(0, 1.0, 4, 1.0);
        let cfg = MwgConfig {
            iterations: 100_000,
            burn_in: 5_000,
            stepsize: StepSize::Fixed(1.5),
            seed: Seed(11),
        };
        let chain = mwg_sample(&c, &pr, &cfg).unwrap();
        let ph = Pochhammer::new(pr).unwrap();
        let mut draws = chain.column(0);
        let ks = ks_distance(&mut draws, |x| ph.cdf(x).unwrap());
        assert!(ks < 0.02, "KS = {ks}");
    }

    #[test]
    fn chain_summary_shapes_and_simplex() {
        let c = Corpus::from_rows(vec![vec![5, 3, 0], vec![1, 1, 1]]).unwrap();
        let pr = prior(0, 1.0, 2, 1.0);
        let cfg = MwgConfig::new(400, 200, Seed(9));
        let chain = mwg_sample(&c, &pr, &cfg).unwrap();
        let sums = chain_summaries(&chain, &c).unwrap();
        assert_eq!(sums.alpha.len(), 3);
        assert_eq!(sums.pi.len(), 2);
        for doc in &sums.pi {
            let total: f64 = doc.iter().map(|i| i.mean).sum();
            assert_relative_eq!(total, 1.0, epsilon = 1e-10);
            for i in doc {
                assert!(i.q025 <= i.mean && i.mean <= i.q975);
            }
        }
        for &r in &sums.acceptance {
            assert!(r > 0.0 && r < 1.0);
        }
    }

    #[test]
    fn homogeneous_chain_broadcasts() {
        let c = Corpus::from_rows(vec![vec![4, 0, 2], vec![1, 3, 1]]).unwrap();
        let pr = prior(0, 1.0, 2, 1.0);
        let cfg = MwgConfig::new(600, 300, Seed(21));
        let chain = mwg_sample_homogeneous(&c, &pr, &cfg).unwrap();
        assert_eq!(chain.k(), 1);
        let sums = chain_summaries(&chain, &c).unwrap();
        assert_eq!(sums.pi[0].len(), 3);
        let total: f64 = sums.pi[0].iter().map(|i| i.mean).sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn zero_count_conditional_shrinks_harder_than_prior() {
        // mass below 0.1 of the conditional exceeds the prior's, for any
        // N >= 1, A_{-k} >= 1 (computed by quadrature).
        let pr = prior(0, 1.0, 2, 1.0);
        let ph = Pochhammer::new(pr.clone()).unwrap();
        let prior_mass = ph.cdf(0.1).unwrap();
        for (n, a_mk) in [(1u64, 1.0), (5, 1.0), (20, 3.5), (100, 10.0)] {
            let log_c = quad::integrate_halfline_log(
                |x| heter_conditional_log_density(x, 0, n, a_mk, &pr).unwrap(),
                1e-10,
                QuadConfig::default(),
            )
            .unwrap();
            let log_pre = quad::integrate_prefix_log(
                |x| heter_conditional_log_density(x, 0, n, a_mk, &pr).unwrap(),
                0.1,
                1e-10,
                QuadConfig::default(),
            )
            .unwrap();
            let mass = (log_pre - log_c).exp();
            assert!(mass > prior_mass, "N={n}, A={a_mk}: {mass} <= {prior_mass}");
        }
    }

    #[test]
    fn posterior_cdf_and_quantile() {
        let c = Corpus::single_document(vec![3, 1, 0]).unwrap();
        let post = homog_posterior(&c, &prior(0, 1.0, 2, 1.0)).unwrap();
        let med = post.alpha_quantile(0.5).unwrap();
        assert!((post.cdf(med).unwrap() - 0.5).abs() < 1e-9);
        // residue CDF against quadrature prefix
        let log_pre =
            quad::integrate_prefix_log(|a| post.log_unnorm(a), 1.0, 1e-10, QuadConfig::default())
                .unwrap();
        let quad_cdf = (log_pre - post.log_norm_const()).exp();
        assert_relative_eq!(post.cdf(1.0).unwrap(), quad_cdf, max_relative = 1e-8);
    }
}

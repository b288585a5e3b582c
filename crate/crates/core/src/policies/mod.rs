//! Acquisition policies mapping a posterior and round to the next query.
//!
//! All three policies share the hallucinated posterior: mean from the
//! observed prefix `μ_S(t)`, standard deviation from every selected point
//! `σ_{t−1}`. They differ in the width multiplying `σ` and in whether the
//! argmax is taken over the UCB score or a posterior sample.
//!
//! * IGP-BUCB: `β_t = √ξ (B + R/√λ · √(2(γ_S + ln(1/δ))))`
//! * GP-BTS: `v_t = √ξ (B + R/√λ · √(2(γ_S + ln(2/δ))))`, sample from `GP(μ_S, v_t² k_{t−1})`
//! * GP-BUCB: `√(ξ (2B² + 300 γ_S ln³(t/δ)))`, constants configurable
//!
//! Ties in every argmax go to the lowest candidate index.

mod discretization;
mod thompson;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::domain::{Domain, DomainError};
use crate::gp::{GpError, Posterior};
use crate::infogain::{GammaEstimator, InfoGainError, XiM};
use crate::linalg::LinalgError;
use crate::scalar::{argmax, Scalar};

pub use discretization::{build_discretization, DiscretizationConfig};
pub use thompson::{gp_bts_select, sample_posterior, ThompsonSampler};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error(transparent)]
    Gp(#[from] GpError),
    #[error(transparent)]
    InfoGain(#[from] InfoGainError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("posterior sample factorization failed: {0}")]
    Sampling(LinalgError),
    #[error("invalid policy configuration: {0}")]
    InvalidConfig(String),
}

/// Round index `t ≥ 1` and its feedback index `S(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Round {
    pub t: usize,
    pub feedback: usize,
}

impl Round {
    pub fn new(t: usize, feedback: usize) -> Self {
        Self { t, feedback }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection<T> {
    pub index: usize,
    /// The width (`β_t`, `v_t` or the GP-BUCB width) used this round.
    pub width: T,
}

/// Constants of the GP-BUCB width `√(ξ (a B² + b γ_S ln^p(t/δ)))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpBucbWidth<T> {
    pub norm_coeff: T,
    pub info_coeff: T,
    pub log_power: i32,
}

impl<T: Scalar> Default for GpBucbWidth<T> {
    fn default() -> Self {
        Self { norm_coeff: T::lit(2.0), info_coeff: T::lit(300.0), log_power: 3 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyConfig<T> {
    /// `B`, bound on the RKHS norm (or on `max |f|` in the experiments).
    pub rkhs_bound: T,
    /// `R`, sub-Gaussian constant of the noise.
    pub subgaussian: T,
    /// `λ`, the regularizer / GP noise variance.
    pub noise: T,
    /// `δ ∈ (0, 1]`.
    pub delta: T,
    pub xi: XiM<T>,
    pub gamma: GammaEstimator<T>,
    /// Seed for Thompson sampling.
    pub seed: u64,
    pub discretization: DiscretizationConfig<T>,
    pub sampler: ThompsonSampler,
    pub gp_bucb: GpBucbWidth<T>,
    /// Replaces every computed width with this constant.
    pub width_override: Option<T>,
}

impl<T: Scalar> PolicyConfig<T> {
    /// Experiment defaults: `δ = 0.1`, `λ = R² = 0.025`, `ξ = 1`, `γ_t = ln t`.
    pub fn new(rkhs_bound: T) -> Self {
        Self {
            rkhs_bound,
            subgaussian: T::lit(0.025).sqrt(),
            noise: T::lit(0.025),
            delta: T::lit(0.1),
            xi: XiM::unit(1),
            gamma: GammaEstimator::LogT,
            seed: 0,
            discretization: DiscretizationConfig::default(),
            sampler: ThompsonSampler::default(),
            gp_bucb: GpBucbWidth::default(),
            width_override: None,
        }
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        let bad = |m: &str| Err(PolicyError::InvalidConfig(m.to_string()));
        if !(self.rkhs_bound > T::zero()) {
            return bad("B must be positive");
        }
        if !(self.subgaussian >= T::zero()) {
            return bad("R must be non-negative");
        }
        if !(self.noise > T::zero()) {
            return bad("lambda must be positive");
        }
        if !(self.delta > T::zero() && self.delta <= T::one()) {
            return bad("delta must lie in (0, 1]");
        }
        if !(self.xi.value >= T::one()) {
            return bad("xi must be at least 1");
        }
        Ok(())
    }

    /// `B + R/√λ · √(2(γ_S + ln(c/δ)))`.
    fn confidence(&self, feedback: usize, c: T) -> Result<T, PolicyError> {
        let gamma = self.gamma.gamma(feedback)?;
        let two = T::lit(2.0);
        Ok(self.rkhs_bound
            + self.subgaussian / self.noise.sqrt() * (two * (gamma + (c / self.delta).ln())).sqrt())
    }

    /// `β_t` of IGP-BUCB.
    pub fn igp_bucb_width(&self, round: Round) -> Result<T, PolicyError> {
        match self.width_override {
            Some(w) => Ok(w),
            None => Ok(self.xi.sqrt() * self.confidence(round.feedback, T::one())?),
        }
    }

    /// `v_t` of GP-BTS.
    pub fn bts_width(&self, round: Round) -> Result<T, PolicyError> {
        match self.width_override {
            Some(w) => Ok(w),
            None => Ok(self.xi.sqrt() * self.confidence(round.feedback, T::lit(2.0))?),
        }
    }

    /// Width of the GP-BUCB baseline.
    pub fn gp_bucb_width(&self, round: Round) -> Result<T, PolicyError> {
        if let Some(w) = self.width_override {
            return Ok(w);
        }
        let c = &self.gp_bucb;
        let gamma = self.gamma.gamma(round.feedback)?;
        let log = (T::from_usize_lossy(round.t) / self.delta).ln().max(T::zero());
        let b = self.rkhs_bound;
        Ok((self.xi.value * (c.norm_coeff * b * b + c.info_coeff * gamma * log.powi(c.log_power))).sqrt())
    }
}

/// `μ_S` and `σ_{t−1}` over `domain`, from the posterior caches when it tracks `domain`.
pub fn posterior_moments<T: Scalar>(
    state: &Posterior<T>,
    domain: &Domain<T>,
) -> Result<(Vec<T>, Vec<T>), GpError> {
    if state.tracks(domain) {
        return Ok((state.candidate_means()?.to_vec(), state.candidate_stddevs()?));
    }
    let means = domain.iter().map(|x| state.predict_mean(x)).collect::<Result<_, _>>()?;
    let sds = domain.iter().map(|x| state.predict_stddev(x)).collect::<Result<_, _>>()?;
    Ok((means, sds))
}

/// `argmax_x μ_S(x) + width · σ_{t−1}(x)`.
pub fn ucb_select<T: Scalar>(
    state: &Posterior<T>,
    domain: &Domain<T>,
    width: T,
) -> Result<Selection<T>, PolicyError> {
    let (means, sds) = posterior_moments(state, domain)?;
    let scores: Vec<T> = means.iter().zip(&sds).map(|(&m, &s)| m + width * s).collect();
    let index = argmax(&scores).ok_or(DomainError::Empty)?;
    Ok(Selection { index, width })
}

pub fn igp_bucb_select<T: Scalar>(
    state: &Posterior<T>,
    round: Round,
    config: &PolicyConfig<T>,
    domain: &Domain<T>,
) -> Result<Selection<T>, PolicyError> {
    ucb_select(state, domain, config.igp_bucb_width(round)?)
}

pub fn gp_bucb_select<T: Scalar>(
    state: &Posterior<T>,
    round: Round,
    config: &PolicyConfig<T>,
    domain: &Domain<T>,
) -> Result<Selection<T>, PolicyError> {
    ucb_select(state, domain, config.gp_bucb_width(round)?)
}

/// Uncertainty sampling: `t_init` rounds of `argmax σ`, then one reward per chosen
/// point from `observe`, ingested so the result serves as the prior for later rounds.
pub fn initialize<T: Scalar>(
    state: &mut Posterior<T>,
    domain: &Domain<T>,
    t_init: usize,
    mut observe: impl FnMut(usize) -> T,
) -> Result<Vec<usize>, PolicyError> {
    if domain.is_empty() {
        return Err(DomainError::Empty.into());
    }
    let tracked = state.tracks(domain);
    let mut chosen = Vec::with_capacity(t_init);
    for _ in 0..t_init {
        let (_, sds) = posterior_moments(state, domain)?;
        let i = argmax(&sds).ok_or(DomainError::Empty)?;
        if tracked {
            state.condition_on_candidate(i)?;
        } else {
            state.condition_on_point(domain[i].clone())?;
        }
        chosen.push(i);
    }
    let rewards: Vec<T> = chosen.iter().map(|&i| observe(i)).collect();
    state.ingest_rewards(&rewards)?;
    Ok(chosen)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolicyKind {
    IgpBucb,
    GpBucb,
    GpBts,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::IgpBucb => "igp_bucb",
            PolicyKind::GpBucb => "gp_bucb",
            PolicyKind::GpBts => "gp_bts",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [PolicyKind::IgpBucb, PolicyKind::GpBucb, PolicyKind::GpBts]
            .into_iter()
            .find(|k| k.name() == name)
    }
}

/// A policy with its own random stream and sampling caches.
#[derive(Debug, Clone)]
pub struct Policy<T> {
    kind: PolicyKind,
    config: PolicyConfig<T>,
    rng: ChaCha8Rng,
    sampler_cache: thompson::SamplerCache<T>,
}

impl<T: Scalar> Policy<T> {
    pub fn new(kind: PolicyKind, config: PolicyConfig<T>) -> Result<Self, PolicyError> {
        config.validate()?;
        Ok(Self {
            kind,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
            sampler_cache: thompson::SamplerCache::default(),
        })
    }

    /// Like [`Policy::new`] but draws from `rng` instead of a stream seeded by `config.seed`.
    pub fn with_rng(kind: PolicyKind, config: PolicyConfig<T>, rng: ChaCha8Rng) -> Result<Self, PolicyError> {
        let mut policy = Self::new(kind, config)?;
        policy.rng = rng;
        Ok(policy)
    }

    pub fn kind(&self) -> PolicyKind {
        self.kind
    }

    pub fn config(&self) -> &PolicyConfig<T> {
        &self.config
    }

    /// Chooses the round-`t` query. `state` must hold exactly the observed rewards `S(t)`
    /// (plus any initialization) and every earlier selection.
    pub fn select(
        &mut self,
        state: &Posterior<T>,
        round: Round,
        domain: &Domain<T>,
    ) -> Result<Selection<T>, PolicyError> {
        match self.kind {
            PolicyKind::IgpBucb => igp_bucb_select(state, round, &self.config, domain),
            PolicyKind::GpBucb => gp_bucb_select(state, round, &self.config, domain),
            PolicyKind::GpBts => {
                thompson::select_cached(state, round, &self.config, domain, &mut self.rng, &mut self.sampler_cache)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::infogain::{compute_xi, XiMode};
    use crate::kernels::Kernel;
    use approx::assert_abs_diff_eq;

    fn setup(n: usize) -> (Posterior<f64>, Domain<f64>) {
        let d = Domain::linspace(0.0, 1.0, n).unwrap();
        (Posterior::tracking(Kernel::squared_exponential(0.2).unwrap(), 0.025, d.clone()).unwrap(), d)
    }

    #[test]
    fn empty_posterior_picks_first_candidate() {
        let (post, d) = setup(20);
        let cfg = PolicyConfig::new(1.0);
        for kind in [PolicyKind::IgpBucb, PolicyKind::GpBucb, PolicyKind::GpBts] {
            let mut cfg = cfg.clone();
            if kind == PolicyKind::GpBts {
                cfg.width_override = Some(0.0);
            }
            let mut p = Policy::new(kind, cfg).unwrap();
            assert_eq!(p.select(&post, Round::new(1, 0), &d).unwrap().index, 0, "{kind:?}");
        }
    }

    #[test]
    fn three_point_hand_computation() {
        // Domain {0, 0.5, 1}, SE ℓ = 0.5, λ = 0.1, one observation y = 1 at x = 0.
        let d = Domain::new(vec![0.0, 0.5, 1.0].into_iter().map(|x| vec![x].into()).collect()).unwrap();
        let k = Kernel::squared_exponential(0.5).unwrap();
        let mut post = Posterior::tracking(k, 0.1, d.clone()).unwrap();
        post.condition_on_candidate(0).unwrap();
        post.ingest_rewards(&[1.0]).unwrap();
        let c = |s: f64| (-s * s / (2.0 * 0.25)).exp();
        // μ(x) = k(0,x) / 1.1 ; σ²(x) = 1 − k(0,x)² / 1.1
        let mu = [1.0 / 1.1, c(0.5) / 1.1, c(1.0) / 1.1];
        let sd = [(1.0 - 1.0 / 1.1f64).sqrt(), (1.0 - c(0.5).powi(2) / 1.1).sqrt(), (1.0 - c(1.0).powi(2) / 1.1).sqrt()];
        for beta in [0.1, 1.0, 3.0] {
            let scores: Vec<f64> = (0..3).map(|i| mu[i] + beta * sd[i]).collect();
            let expect = argmax(&scores).unwrap();
            assert_eq!(ucb_select(&post, &d, beta).unwrap().index, expect, "beta = {beta}");
        }
        // small width exploits, large width explores
        assert_eq!(ucb_select(&post, &d, 0.1).unwrap().index, 0);
        assert_eq!(ucb_select(&post, &d, 3.0).unwrap().index, 2);
    }

    #[test]
    fn widths_follow_formulas() {
        let mut cfg = PolicyConfig::new(2.0);
        cfg.gamma = GammaEstimator::LogT;
        let r = Round::new(11, 10);
        let base = 2.0 + (0.025f64.sqrt() / 0.025f64.sqrt()) * (2.0 * (10f64.ln() + 10f64.ln())).sqrt();
        assert_abs_diff_eq!(cfg.igp_bucb_width(r).unwrap(), base, epsilon = 1e-12);
        let v = 2.0 + (2.0 * (10f64.ln() + 20f64.ln())).sqrt();
        assert_abs_diff_eq!(cfg.bts_width(r).unwrap(), v, epsilon = 1e-12);
        let g = (2.0 * 4.0 + 300.0 * 10f64.ln() * 110f64.ln().powi(3)).sqrt();
        assert_abs_diff_eq!(cfg.gp_bucb_width(r).unwrap(), g, epsilon = 1e-9);
        cfg.xi = XiM::custom(3, 4.0);
        assert_abs_diff_eq!(cfg.igp_bucb_width(r).unwrap(), 2.0 * base, epsilon = 1e-12);
    }

    #[test]
    fn sequential_width_is_ucb_width() {
        let (_, d) = setup(10);
        let k = Kernel::squared_exponential(0.2).unwrap();
        let mut cfg = PolicyConfig::new(1.5);
        cfg.gamma = GammaEstimator::analytic_for(&k, 1, 1.0).unwrap();
        cfg.xi = compute_xi(1, &GammaEstimator::tabulate(crate::infogain::MigMethod::BruteForce, &k, &d, 1, 0.025).unwrap(), XiMode::Theory).unwrap();
        assert_eq!(cfg.xi.value, 1.0);
        for t in 1..100 {
            let alpha = 1.5 + (cfg.subgaussian / cfg.noise.sqrt()) * (2.0 * (cfg.gamma.gamma(t - 1).unwrap() + (1.0 / 0.1f64).ln())).sqrt();
            assert_eq!(cfg.igp_bucb_width(Round::new(t, t - 1)).unwrap(), alpha);
        }
    }

    #[test]
    fn gp_bucb_dominates_igp_bucb() {
        let mut cfg = PolicyConfig::new(1.0);
        cfg.gamma = GammaEstimator::LogT;
        use crate::schedules::FeedbackSchedule;
        for sched in [FeedbackSchedule::StrictlySequential, FeedbackSchedule::simple_batch(5).unwrap()] {
            let mut prev = (0.0, 0.0);
            for t in 1..=400 {
                let r = Round::new(t, sched.feedback_index(t).unwrap());
                let (a, b) = (cfg.igp_bucb_width(r).unwrap(), cfg.bts_width(r).unwrap());
                // with γ_S = 0 the baseline width collapses to √2·B
                if t >= 3 && cfg.gamma.gamma(r.feedback).unwrap() > 0.0 {
                    assert!(cfg.gp_bucb_width(r).unwrap() >= a, "t = {t}");
                }
                assert!(a >= prev.0 && b >= prev.1);
                prev = (a, b);
            }
        }
    }

    #[test]
    fn equal_widths_give_equal_choices() {
        let (mut post, d) = setup(15);
        post.condition_on_candidate(4).unwrap();
        post.condition_on_candidate(11).unwrap();
        post.ingest_rewards(&[0.7]).unwrap();
        let mut cfg = PolicyConfig::new(1.0);
        cfg.width_override = Some(0.8);
        let r = Round::new(3, 1);
        assert_eq!(
            igp_bucb_select(&post, r, &cfg, &d).unwrap(),
            gp_bucb_select(&post, r, &cfg, &d).unwrap()
        );
    }

    #[test]
    fn untracked_domain_falls_back_to_direct_prediction() {
        let (mut post, d) = setup(15);
        post.condition_on_candidate(2).unwrap();
        post.ingest_rewards(&[0.4]).unwrap();
        let other = Domain::new(d.points().to_vec()).unwrap();
        let a = ucb_select(&post, &d, 1.0).unwrap();
        let b = ucb_select(&post, &other, 1.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn initialization_is_greedy_variance() {
        let (mut post, d) = setup(30);
        let snapshot = post.clone();
        assert!(initialize(&mut post, &d, 0, |_| 0.0).unwrap().is_empty());
        assert_eq!(post.len(), snapshot.len());

        let chosen = initialize(&mut post, &d, 1, |_| 0.3).unwrap();
        assert_eq!(chosen, vec![0]);

        let (mut post, d) = setup(30);
        let k = Kernel::squared_exponential(0.2).unwrap();
        let chosen = initialize(&mut post, &d, 8, |i| i as f64 / 30.0).unwrap();
        let (greedy, _) = crate::infogain::greedy_path(&k, &d, 8, 0.025).unwrap();
        assert_eq!(chosen, greedy);
        assert_eq!(post.boundary(), 8);
        assert_eq!(post.pending(), 0);
    }

    #[test]
    fn config_validation() {
        let mut cfg = PolicyConfig::new(1.0);
        cfg.delta = 0.0;
        assert!(Policy::new(PolicyKind::IgpBucb, cfg.clone()).is_err());
        cfg.delta = 1.0;
        assert!(Policy::new(PolicyKind::IgpBucb, cfg.clone()).is_ok());
        cfg.noise = -1.0;
        assert!(cfg.validate().is_err());
        assert!(PolicyConfig::new(0.0).validate().is_err());
        assert_eq!(PolicyKind::from_name("gp_bts"), Some(PolicyKind::GpBts));
    }
}

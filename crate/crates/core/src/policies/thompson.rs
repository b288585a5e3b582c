//! GP-BTS: argmax of one joint posterior sample over the candidate set.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use super::{posterior_moments, PolicyConfig, PolicyError, Round, Selection};
use crate::domain::{Domain, DomainError};
use crate::gp::Posterior;
use crate::kernels::Kernel;
use crate::linalg::{pivoted_cholesky, LowRankFactor, SymMatrix};
use crate::scalar::{argmax, Scalar};

/// Domains at least this large use the pathwise sampler under [`ThompsonSampler::Auto`].
pub const PATHWISE_MIN_CANDIDATES: usize = 64;

/// How a joint sample of `GP(μ_S, v² k_t)` over the candidates is drawn.
///
/// `Exact` factors the posterior covariance every round. `Pathwise` factors the prior
/// Gram once per domain and corrects a prior draw with the selected points and a draw
/// of their noise; the result has the same distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThompsonSampler {
    Exact,
    Pathwise,
    #[default]
    Auto,
}

impl ThompsonSampler {
    pub fn name(self) -> &'static str {
        match self {
            ThompsonSampler::Exact => "exact",
            ThompsonSampler::Pathwise => "pathwise",
            ThompsonSampler::Auto => "auto",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [ThompsonSampler::Exact, ThompsonSampler::Pathwise, ThompsonSampler::Auto]
            .into_iter()
            .find(|s| s.name() == name)
    }
}

#[derive(Debug, Clone, Default)]
pub(crate) struct SamplerCache<T> {
    prior: Option<(Domain<T>, Kernel<T>, Arc<LowRankFactor<T>>)>,
}

impl<T: Scalar> SamplerCache<T> {
    fn prior_factor(&mut self, kernel: &Kernel<T>, domain: &Domain<T>) -> Result<Arc<LowRankFactor<T>>, PolicyError> {
        if let Some((d, k, f)) = &self.prior {
            if d.same_as(domain) && k == kernel {
                return Ok(f.clone());
            }
        }
        let pts = domain.points();
        let mut err = None;
        let diag_max = pts
            .iter()
            .map(|x| kernel.evaluate(x, x))
            .collect::<Result<Vec<T>, _>>()
            .map_err(crate::gp::GpError::from)?
            .into_iter()
            .fold(T::zero(), T::max);
        let factor = pivoted_cholesky(
            pts.len(),
            |i, j| match kernel.evaluate(&pts[i], &pts[j]) {
                Ok(v) => v,
                Err(e) => {
                    err.get_or_insert(e);
                    T::nan()
                }
            },
            tolerance(pts.len(), diag_max),
        )
        .map_err(PolicyError::Sampling)?;
        if let Some(e) = err {
            return Err(crate::gp::GpError::from(e).into());
        }
        let factor = Arc::new(factor);
        self.prior = Some((domain.clone(), kernel.clone(), factor.clone()));
        Ok(factor)
    }
}

fn tolerance<T: Scalar>(n: usize, diag_max: T) -> T {
    T::epsilon() * T::from_usize_lossy(n.max(1)) * diag_max
}

fn normals<T: Scalar, R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<T> {
    (0..n)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            T::lit(z)
        })
        .collect()
}

fn use_pathwise<T: Scalar>(sampler: ThompsonSampler, state: &Posterior<T>, domain: &Domain<T>) -> bool {
    let eligible = state.tracks(domain) && state.candidate_indices().iter().all(Option::is_some);
    match sampler {
        ThompsonSampler::Exact => false,
        ThompsonSampler::Pathwise => eligible,
        ThompsonSampler::Auto => eligible && domain.len() >= PATHWISE_MIN_CANDIDATES,
    }
}

fn posterior_covariance<T: Scalar>(state: &Posterior<T>, domain: &Domain<T>) -> Result<SymMatrix<T>, PolicyError> {
    if state.tracks(domain) {
        return Ok(state.candidate_covariance()?);
    }
    let pts = domain.points();
    let mut rows = Vec::with_capacity(pts.len());
    for a in pts {
        rows.push(pts.iter().map(|b| state.predict_covariance(a, b)).collect::<Result<Vec<T>, _>>()?);
    }
    SymMatrix::from_rows(rows).map_err(PolicyError::Sampling)
}

/// One draw of `h ~ GP(0, k_t)` over `domain`.
fn centred_sample<T: Scalar, R: Rng + ?Sized>(
    state: &Posterior<T>,
    domain: &Domain<T>,
    sampler: ThompsonSampler,
    cache: &mut SamplerCache<T>,
    rng: &mut R,
) -> Result<Vec<T>, PolicyError> {
    if use_pathwise(sampler, state, domain) {
        let prior = cache.prior_factor(state.kernel(), domain)?;
        let g = prior.mul_vec(&normals(rng, prior.rank()));
        let eps: Vec<T> = normals(rng, state.len());
        let rhs: Vec<T> = state
            .candidate_indices()
            .iter()
            .zip(eps.iter().zip(state.jitters()))
            .map(|(c, (&e, &j))| g[c.unwrap_or_default()] + e * (state.noise() + j).sqrt())
            .collect();
        let correction = state.candidate_projection(&state.whiten(&rhs))?;
        return Ok(g.iter().zip(correction).map(|(&a, b)| a - b).collect());
    }
    let cov = posterior_covariance(state, domain)?;
    let diag_max = cov.diagonal().into_iter().fold(T::zero(), T::max);
    let factor = pivoted_cholesky(cov.dim(), |i, j| cov.get(i, j), tolerance(cov.dim(), diag_max))
        .map_err(PolicyError::Sampling)?;
    Ok(factor.mul_vec(&normals(rng, factor.rank())))
}

/// Draws `f ~ GP(μ_S, width² k_t)` jointly over `domain`.
pub fn sample_posterior<T: Scalar, R: Rng + ?Sized>(
    state: &Posterior<T>,
    domain: &Domain<T>,
    width: T,
    sampler: ThompsonSampler,
    rng: &mut R,
) -> Result<Vec<T>, PolicyError> {
    sample_with_cache(state, domain, width, sampler, &mut SamplerCache::default(), rng)
}

fn sample_with_cache<T: Scalar, R: Rng + ?Sized>(
    state: &Posterior<T>,
    domain: &Domain<T>,
    width: T,
    sampler: ThompsonSampler,
    cache: &mut SamplerCache<T>,
    rng: &mut R,
) -> Result<Vec<T>, PolicyError> {
    let (means, _) = posterior_moments(state, domain)?;
    if width == T::zero() {
        return Ok(means);
    }
    let h = centred_sample(state, domain, sampler, cache, rng)?;
    Ok(means.iter().zip(h).map(|(&m, h)| m + width * h).collect())
}

/// Samples with width `v_t` and returns the argmax. A single candidate is returned
/// without drawing.
pub fn gp_bts_select<T: Scalar, R: Rng + ?Sized>(
    state: &Posterior<T>,
    round: Round,
    config: &PolicyConfig<T>,
    domain: &Domain<T>,
    rng: &mut R,
) -> Result<Selection<T>, PolicyError> {
    select_cached(state, round, config, domain, rng, &mut SamplerCache::default())
}

pub(crate) fn select_cached<T: Scalar, R: Rng + ?Sized>(
    state: &Posterior<T>,
    round: Round,
    config: &PolicyConfig<T>,
    domain: &Domain<T>,
    rng: &mut R,
    cache: &mut SamplerCache<T>,
) -> Result<Selection<T>, PolicyError> {
    let width = config.bts_width(round)?;
    if domain.is_empty() {
        return Err(DomainError::Empty.into());
    }
    if domain.len() == 1 {
        return Ok(Selection { index: 0, width });
    }
    let sample = sample_with_cache(state, domain, width, config.sampler, cache, rng)?;
    let index = argmax(&sample).ok_or(DomainError::Empty)?;
    Ok(Selection { index, width })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn state(n: usize) -> (Posterior<f64>, Domain<f64>) {
        let d = Domain::linspace(0.0, 1.0, n).unwrap();
        let mut post = Posterior::tracking(Kernel::squared_exponential(0.2).unwrap(), 0.025, d.clone()).unwrap();
        for (i, y) in [(1, 2.0), (n / 2, 2.5), (n - 2, 1.8)] {
            post.condition_on_candidate(i).unwrap();
            post.ingest_rewards(&[y]).unwrap();
        }
        // two hallucinated points
        post.condition_on_candidate(3).unwrap();
        post.condition_on_candidate(n - 4).unwrap();
        (post, d)
    }

    fn moment_check(sampler: ThompsonSampler) {
        let (post, d) = state(15);
        let width = 1.7;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut cache = SamplerCache::default();
        let draws: Vec<Vec<f64>> = (0..2000)
            .map(|_| sample_with_cache(&post, &d, width, sampler, &mut cache, &mut rng).unwrap())
            .collect();
        let mu = post.candidate_means().unwrap();
        let sd = post.candidate_stddevs().unwrap();
        for c in 0..d.len() {
            let n = draws.len() as f64;
            let mean = draws.iter().map(|f| f[c]).sum::<f64>() / n;
            let var = draws.iter().map(|f| (f[c] - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let target_sd = width * sd[c];
            let scale = mu[c].abs().max(target_sd);
            assert!((mean - mu[c]).abs() <= 0.05 * scale, "{sampler:?} mean at {c}: {mean} vs {}", mu[c]);
            assert!((var.sqrt() - target_sd).abs() <= 0.05 * target_sd, "{sampler:?} sd at {c}: {} vs {target_sd}", var.sqrt());
        }
    }

    #[test]
    fn exact_sampler_moments() {
        moment_check(ThompsonSampler::Exact);
    }

    #[test]
    fn pathwise_sampler_moments() {
        moment_check(ThompsonSampler::Pathwise);
    }

    #[test]
    fn pathwise_matches_exact_covariance() {
        // empirical cross-covariance of the pathwise draws against the analytic k_t
        let (post, d) = state(12);
        let cov = post.candidate_covariance().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut cache = SamplerCache::default();
        let n = 20000;
        let mut acc = vec![0.0; 12 * 12];
        for _ in 0..n {
            let h = centred_sample(&post, &d, ThompsonSampler::Pathwise, &mut cache, &mut rng).unwrap();
            for a in 0..12 {
                for b in 0..12 {
                    acc[a * 12 + b] += h[a] * h[b];
                }
            }
        }
        for a in 0..12 {
            for b in 0..12 {
                let emp = acc[a * 12 + b] / n as f64;
                let tol = 0.05 * (cov.get(a, a) * cov.get(b, b)).sqrt() + 1e-6;
                assert!((emp - cov.get(a, b)).abs() <= tol, "({a},{b}): {emp} vs {}", cov.get(a, b));
            }
        }
    }

    #[test]
    fn zero_width_is_posterior_mean_argmax() {
        let (post, d) = state(15);
        let mut cfg = PolicyConfig::new(1.0);
        cfg.width_override = Some(0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sel = gp_bts_select(&post, Round::new(6, 3), &cfg, &d, &mut rng).unwrap();
        assert_eq!(sel.index, argmax(post.candidate_means().unwrap()).unwrap());

        let empty = Posterior::tracking(Kernel::squared_exponential(0.2).unwrap(), 0.025, d.clone()).unwrap();
        assert_eq!(gp_bts_select(&empty, Round::new(1, 0), &cfg, &d, &mut rng).unwrap().index, 0);
    }

    #[test]
    fn single_candidate() {
        let d = Domain::new(vec![vec![0.3].into()]).unwrap();
        let post = Posterior::tracking(Kernel::squared_exponential(0.2).unwrap(), 0.025, d.clone()).unwrap();
        let cfg = PolicyConfig::new(1.0);
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            assert_eq!(gp_bts_select(&post, Round::new(1, 0), &cfg, &d, &mut rng).unwrap().index, 0);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let (post, d) = state(80);
        let cfg = PolicyConfig::new(1.0);
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..10)
                .map(|_| gp_bts_select(&post, Round::new(6, 3), &cfg, &d, &mut rng).unwrap().index)
                .collect::<Vec<_>>()
        };
        assert_eq!(run(3), run(3));
    }

    #[test]
    fn untracked_domain_samples_exactly() {
        let (post, d) = state(10);
        let copy = Domain::new(d.points().iter().rev().cloned().collect()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = sample_posterior(&post, &copy, 1.0, ThompsonSampler::Pathwise, &mut rng).unwrap();
        assert_eq!(f.len(), 10);
        assert!(f.iter().all(|v| v.is_finite()));
    }
}

//! Online Gaussian-process posterior with a hallucination boundary.
//!
//! The posterior keeps one growing Cholesky factor `L` of `K + λI` over every
//! selected point. The mean uses only the leading `boundary` rows of `L`
//! (the points whose rewards have arrived); the variance uses all of them.
//! Because Cholesky factors are prefix-stable, the leading block of `L` is
//! exactly the factor of the observed-only Gram matrix, so
//!
//! * `μ_S(x) = v_S(x) · α` with `v = L⁻¹ k(X, x)` and `α = L_S⁻¹ y`,
//! * `σ²_t(x) = k(x, x) − ‖v(x)‖²`.
//!
//! Appending a point adds one row to `L` (the variance recursion), and
//! ingesting a reward adds one entry to `α` (the mean recursion). Pending
//! points therefore behave as if their rewards were the current mean: the
//! mean is untouched while the variance shrinks.
//!
//! A posterior can optionally track a finite [`Domain`], keeping `v`, the
//! variance and the mean cached for every candidate so a round costs
//! `O(n t)` instead of `O(n t²)`.

use thiserror::Error;

use crate::domain::{Domain, Point};
use crate::kernels::{Kernel, KernelError};
use crate::linalg::{jitter_ladder, Cholesky, LinalgError, SymMatrix};
use crate::scalar::{dot, Scalar};

/// Variances below `-VARIANCE_CLAMP` signal numerical breakdown; above it they clamp to zero.
pub const VARIANCE_CLAMP: f64 = 1e-9;
/// Standard deviations below this make `σ_S / σ_t` undefined.
pub const SATURATION_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GpError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("noise variance must be positive and finite, got {0}")]
    InvalidNoise(f64),
    #[error("factorization failed when adding point {index}: pivot {pivot:e} after jitter")]
    Factorization { index: usize, pivot: f64 },
    #[error("posterior variance {variance:e} is negative beyond tolerance; refactorize")]
    NegativeVariance { variance: f64 },
    #[error("{got} rewards supplied but only {pending} points are pending")]
    TooManyRewards { pending: usize, got: usize },
    #[error("posterior does not track a domain")]
    NotTracked,
    #[error("candidate index {index} out of range for domain of size {size}")]
    CandidateOutOfRange { index: usize, size: usize },
    #[error("posterior standard deviation {stddev:e} is saturated; ratio undefined")]
    Saturated { stddev: f64 },
}

fn clamp_variance<T: Scalar>(v: T) -> Result<T, GpError> {
    if v >= T::zero() {
        Ok(v)
    } else if v >= -T::lit(VARIANCE_CLAMP) {
        Ok(T::zero())
    } else {
        Err(GpError::NegativeVariance { variance: v.to_f64_lossy() })
    }
}

#[derive(Debug, Clone)]
struct Tracked<T> {
    domain: Domain<T>,
    prior_variance: Vec<T>,
    /// `proj[c] = L⁻¹ k(X, x_c)`; one entry per conditioned point.
    proj: Vec<Vec<T>>,
    variance: Vec<T>,
    mean: Vec<T>,
}

#[derive(Debug, Clone)]
pub struct Posterior<T> {
    kernel: Kernel<T>,
    noise: T,
    points: Vec<Point<T>>,
    candidate_of: Vec<Option<usize>>,
    factor: Cholesky<T>,
    jitter: Vec<T>,
    rewards: Vec<T>,
    /// `α = L_S⁻¹ y` over the observed prefix.
    whitened: Vec<T>,
    tracked: Option<Tracked<T>>,
}

impl<T: Scalar> Posterior<T> {
    /// Prior posterior with noise variance `λ`.
    pub fn new(kernel: Kernel<T>, noise: T) -> Result<Self, GpError> {
        if !(noise > T::zero()) || !noise.is_finite() {
            return Err(GpError::InvalidNoise(noise.to_f64_lossy()));
        }
        Ok(Self {
            kernel,
            noise,
            points: Vec::new(),
            candidate_of: Vec::new(),
            factor: Cholesky::empty(),
            jitter: Vec::new(),
            rewards: Vec::new(),
            whitened: Vec::new(),
            tracked: None,
        })
    }

    /// Prior posterior that caches predictions over `domain`.
    pub fn tracking(kernel: Kernel<T>, noise: T, domain: Domain<T>) -> Result<Self, GpError> {
        let mut post = Self::new(kernel, noise)?;
        let prior_variance = domain
            .iter()
            .map(|x| post.kernel.evaluate(x, x))
            .collect::<Result<Vec<T>, _>>()?;
        post.tracked = Some(Tracked {
            proj: vec![Vec::new(); domain.len()],
            variance: prior_variance.clone(),
            mean: vec![T::zero(); domain.len()],
            prior_variance,
            domain,
        });
        Ok(post)
    }

    pub fn kernel(&self) -> &Kernel<T> {
        &self.kernel
    }

    pub fn noise(&self) -> T {
        self.noise
    }

    /// Number of conditioned points (selected so far, observed or pending).
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of leading points whose rewards have been ingested.
    pub fn boundary(&self) -> usize {
        self.whitened.len()
    }

    pub fn pending(&self) -> usize {
        self.len() - self.boundary()
    }

    pub fn points(&self) -> &[Point<T>] {
        &self.points
    }

    pub fn rewards(&self) -> &[T] {
        &self.rewards
    }

    /// Tracked-domain index of each conditioned point, when it came from the domain.
    pub fn candidate_indices(&self) -> &[Option<usize>] {
        &self.candidate_of
    }

    pub fn domain(&self) -> Option<&Domain<T>> {
        self.tracked.as_ref().map(|t| &t.domain)
    }

    pub fn tracks(&self, domain: &Domain<T>) -> bool {
        self.domain().is_some_and(|d| d.same_as(domain))
    }

    /// Total jitter added to the factor diagonal.
    pub fn total_jitter(&self) -> T {
        self.jitter.iter().copied().sum()
    }

    /// Jitter added to each diagonal entry of the factor, in selection order.
    pub fn jitters(&self) -> &[T] {
        &self.jitter
    }

    fn kernel_column(&self, x: &Point<T>, upto: usize) -> Result<Vec<T>, GpError> {
        self.points[..upto]
            .iter()
            .map(|p| self.kernel.evaluate(p, x).map_err(GpError::from))
            .collect()
    }

    /// `L⁻¹ b` restricted to the leading `b.len()` rows.
    pub fn whiten(&self, b: &[T]) -> Vec<T> {
        self.factor.forward_solve_prefix(b, b.len())
    }

    /// Posterior mean `μ_S(x)` given the ingested rewards only.
    pub fn predict_mean(&self, x: &Point<T>) -> Result<T, GpError> {
        let s = self.boundary();
        if s == 0 {
            // still surface dimension errors
            self.kernel.evaluate(x, x)?;
            return Ok(T::zero());
        }
        let v = self.factor.forward_solve_prefix(&self.kernel_column(x, s)?, s);
        Ok(dot(&v, &self.whitened))
    }

    /// `σ²_level(x)`: variance conditioned on the first `level` points.
    pub fn variance_at_level(&self, x: &Point<T>, level: usize) -> Result<T, GpError> {
        let level = level.min(self.len());
        let kxx = self.kernel.evaluate(x, x)?;
        let v = self.factor.forward_solve_prefix(&self.kernel_column(x, level)?, level);
        clamp_variance(kxx - dot(&v, &v))
    }

    /// Variance conditioned on every selected point, hallucinated ones included.
    pub fn predict_variance(&self, x: &Point<T>) -> Result<T, GpError> {
        self.variance_at_level(x, self.len())
    }

    pub fn predict_stddev(&self, x: &Point<T>) -> Result<T, GpError> {
        self.predict_variance(x).map(T::sqrt)
    }

    /// Posterior covariance `k_t(x, y)` over all selected points.
    pub fn predict_covariance(&self, x: &Point<T>, y: &Point<T>) -> Result<T, GpError> {
        let vx = self.factor.forward_solve(&self.kernel_column(x, self.len())?);
        let vy = self.factor.forward_solve(&self.kernel_column(y, self.len())?);
        Ok(self.kernel.evaluate(x, y)? - dot(&vx, &vy))
    }

    /// `σ_S(x) / σ_t(x)`: how much the pending points shrank the standard deviation at `x`.
    pub fn sigma_ratio(&self, x: &Point<T>) -> Result<T, GpError> {
        if self.pending() == 0 {
            return Ok(T::one());
        }
        let full = self.predict_variance(x)?.sqrt();
        if full < T::lit(SATURATION_FLOOR) {
            return Err(GpError::Saturated { stddev: full.to_f64_lossy() });
        }
        Ok(self.variance_at_level(x, self.boundary())?.sqrt() / full)
    }

    /// Appends a selected point. Rewards and the mean are untouched; variances shrink.
    pub fn condition_on_point(&mut self, x: Point<T>) -> Result<(), GpError> {
        let row = self.factor.forward_solve(&self.kernel_column(&x, self.len())?);
        self.append(x, None, row)
    }

    /// Appends candidate `index` of the tracked domain, reusing its cached projection.
    pub fn condition_on_candidate(&mut self, index: usize) -> Result<(), GpError> {
        let tracked = self.tracked.as_ref().ok_or(GpError::NotTracked)?;
        let size = tracked.domain.len();
        if index >= size {
            return Err(GpError::CandidateOutOfRange { index, size });
        }
        let x = tracked.domain[index].clone();
        let row = tracked.proj[index].clone();
        self.append(x, Some(index), row)
    }

    fn append(&mut self, x: Point<T>, candidate: Option<usize>, row: Vec<T>) -> Result<(), GpError> {
        let kxx = self.kernel.evaluate(&x, &x)?;
        let base = kxx + self.noise - dot(&row, &row);
        let floor = T::epsilon() * (kxx.abs() + self.noise);
        let (pivot2, jitter) = jitter_ladder::<T>()
            .map(|j| (base + j, j))
            .find(|(p, _)| *p > floor && p.is_finite())
            .ok_or(GpError::Factorization { index: self.len(), pivot: base.to_f64_lossy() })?;
        let diag = pivot2.sqrt();

        if let Some(tracked) = self.tracked.as_mut() {
            for (c, cand) in tracked.domain.iter().enumerate() {
                let proj = &mut tracked.proj[c];
                let col = (self.kernel.evaluate(&x, cand)? - dot(proj, &row)) / diag;
                proj.push(col);
                tracked.variance[c] -= col * col;
            }
        }
        self.factor.push_row(row, diag);
        self.jitter.push(jitter);
        self.points.push(x);
        self.candidate_of.push(candidate);
        Ok(())
    }

    /// Folds in rewards for the next pending points, in order.
    pub fn ingest_rewards(&mut self, rewards: &[T]) -> Result<(), GpError> {
        if rewards.len() > self.pending() {
            return Err(GpError::TooManyRewards { pending: self.pending(), got: rewards.len() });
        }
        for &y in rewards {
            let s = self.boundary();
            let row = self.factor.row(s);
            let alpha = (y - dot(&row[..s], &self.whitened)) / row[s];
            if let Some(tracked) = self.tracked.as_mut() {
                for (m, proj) in tracked.mean.iter_mut().zip(&tracked.proj) {
                    *m += proj[s] * alpha;
                }
            }
            self.whitened.push(alpha);
            self.rewards.push(y);
        }
        Ok(())
    }

    /// Rebuilds the factor and every cache from the stored points and rewards.
    pub fn refactorize(&mut self) -> Result<(), GpError> {
        let t = self.len();
        if t > 0 {
            let mut gram = self.kernel.gram(&self.points)?;
            for i in 0..t {
                gram.set(i, i, gram.get(i, i) + self.noise);
            }
            let (factor, jitter) = gram.cholesky()?;
            self.factor = factor;
            self.jitter = vec![jitter; t];
        }
        let s = self.boundary();
        self.whitened = self.factor.forward_solve_prefix(&self.rewards, s);
        if let Some(mut tracked) = self.tracked.take() {
            for (c, cand) in tracked.domain.iter().enumerate() {
                let proj = self.factor.forward_solve(&self.kernel_column(cand, t)?);
                tracked.variance[c] = tracked.prior_variance[c] - dot(&proj, &proj);
                tracked.mean[c] = dot(&proj[..s], &self.whitened);
                tracked.proj[c] = proj;
            }
            self.tracked = Some(tracked);
        }
        Ok(())
    }

    fn tracked(&self) -> Result<&Tracked<T>, GpError> {
        self.tracked.as_ref().ok_or(GpError::NotTracked)
    }

    /// Cached `μ_S` over the tracked domain.
    pub fn candidate_means(&self) -> Result<&[T], GpError> {
        Ok(&self.tracked()?.mean)
    }

    /// Cached `σ_t` over the tracked domain, clamped.
    pub fn candidate_stddevs(&self) -> Result<Vec<T>, GpError> {
        self.tracked()?
            .variance
            .iter()
            .map(|&v| clamp_variance(v).map(T::sqrt))
            .collect()
    }

    /// Posterior covariance matrix `k_t` over the tracked domain.
    pub fn candidate_covariance(&self) -> Result<SymMatrix<T>, GpError> {
        let tracked = self.tracked()?;
        let d = &tracked.domain;
        let mut err = None;
        let m = SymMatrix::from_fn(d.len(), |a, b| {
            let prior = if a == b {
                Ok(tracked.prior_variance[a])
            } else {
                self.kernel.evaluate(&d[a], &d[b])
            };
            match prior {
                Ok(k) => k - dot(&tracked.proj[a], &tracked.proj[b]),
                Err(e) => {
                    err.get_or_insert(e);
                    T::nan()
                }
            }
        });
        match err {
            Some(e) => Err(e.into()),
            None => Ok(m),
        }
    }

    /// `k(x_c, X) (K + λI)⁻¹ b` for every tracked candidate, given `w = L⁻¹ b`.
    pub fn candidate_projection(&self, whitened: &[T]) -> Result<Vec<T>, GpError> {
        Ok(self.tracked()?.proj.iter().map(|p| dot(p, whitened)).collect())
    }
}

//! Maximum information gain `γ_t` and the hallucinated-information factor `ξ_M`.
//!
//! All quantities are in nats. `γ_t` is the largest `½ ln det(I + λ⁻¹ K_A)`
//! over subsets `A` of `t` distinct domain points.

use std::sync::Arc;

use thiserror::Error;

use crate::domain::Domain;
use crate::gp::{GpError, Posterior};
use crate::kernels::{Kernel, KernelKind};
use crate::linalg::SymMatrix;
use crate::scalar::{argmax, Scalar};

/// Largest domain the brute-force search accepts.
pub const BRUTE_FORCE_MAX_DOMAIN: usize = 15;
/// Largest subset size the brute-force search accepts.
pub const BRUTE_FORCE_MAX_T: usize = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InfoGainError {
    #[error("brute force limited to |D| <= {BRUTE_FORCE_MAX_DOMAIN} and t <= {BRUTE_FORCE_MAX_T}, got |D| = {domain}, t = {t}")]
    GuardExceeded { domain: usize, t: usize },
    #[error("cannot choose {t} distinct points from a domain of {domain}")]
    SubsetTooLarge { domain: usize, t: usize },
    #[error("no analytic growth rate for {0:?} kernels")]
    UnsupportedKernel(KernelKind),
    #[error("method {0} is not valid here")]
    UnsupportedMethod(&'static str),
    #[error("gamma table covers t <= {max}, asked for {t}")]
    TableTooShort { max: usize, t: usize },
    #[error(transparent)]
    Gp(#[from] GpError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MigMethod {
    BruteForce,
    Greedy,
    /// Greedy value divided by `1 − 1/e`; an upper bound since information gain is submodular.
    GreedyBound,
    AnalyticSquaredExponential,
    AnalyticMatern,
    AnalyticLinear,
    LogT,
}

impl MigMethod {
    pub fn name(self) -> &'static str {
        match self {
            MigMethod::BruteForce => "brute_force",
            MigMethod::Greedy => "greedy",
            MigMethod::GreedyBound => "greedy_bound",
            MigMethod::AnalyticSquaredExponential => "analytic_se",
            MigMethod::AnalyticMatern => "analytic_matern",
            MigMethod::AnalyticLinear => "analytic_linear",
            MigMethod::LogT => "log_t",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MigEstimate<T> {
    pub t: usize,
    pub value: T,
    pub method: MigMethod,
}

/// `½ ln det(I + λ⁻¹ K)`.
pub fn log_det_information<T: Scalar>(gram: &SymMatrix<T>, noise: T) -> Result<T, InfoGainError> {
    let n = gram.dim();
    let m = SymMatrix::from_fn(n, |i, j| {
        let v = gram.get(i, j) / noise;
        if i == j {
            v + T::one()
        } else {
            v
        }
    });
    let (l, _) = m.cholesky().map_err(GpError::from)?;
    Ok(l.log_det() / T::lit(2.0))
}

/// `½ Σ ln(1 + λ⁻¹ σ²_{s−1}(x_s))` along a sequence of domain indices.
pub fn sequential_information<T: Scalar>(
    kernel: &Kernel<T>,
    domain: &Domain<T>,
    sequence: &[usize],
    noise: T,
) -> Result<T, InfoGainError> {
    let mut post = Posterior::tracking(kernel.clone(), noise, domain.clone())?;
    let mut total = T::zero();
    for &i in sequence {
        let var = post.predict_variance(&domain[i])?;
        total += (T::one() + var / noise).ln() / T::lit(2.0);
        post.condition_on_candidate(i)?;
    }
    Ok(total)
}

/// Visits every `t`-subset of `0..n` in lexicographic order.
fn for_each_subset(n: usize, t: usize, mut visit: impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..t).collect();
    loop {
        visit(&idx);
        let Some(i) = (0..t).rev().find(|&i| idx[i] != i + n - t) else {
            return;
        };
        idx[i] += 1;
        for j in i + 1..t {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Exact `γ_t` by enumeration, with the maximizing subset.
pub fn mig_brute_force_with_set<T: Scalar>(
    kernel: &Kernel<T>,
    domain: &Domain<T>,
    t: usize,
    noise: T,
) -> Result<(MigEstimate<T>, Vec<usize>), InfoGainError> {
    let n = domain.len();
    if n > BRUTE_FORCE_MAX_DOMAIN || t > BRUTE_FORCE_MAX_T {
        return Err(InfoGainError::GuardExceeded { domain: n, t });
    }
    if t > n {
        return Err(InfoGainError::SubsetTooLarge { domain: n, t });
    }
    let estimate = |value| MigEstimate { t, value, method: MigMethod::BruteForce };
    if t == 0 {
        return Ok((estimate(T::zero()), Vec::new()));
    }
    let full = kernel.gram(domain.points()).map_err(GpError::from)?;
    let mut best: Option<(T, Vec<usize>)> = None;
    let mut failure = None;
    for_each_subset(n, t, |idx| match log_det_information(&full.submatrix(idx), noise) {
        Ok(v) => {
            if best.as_ref().is_none_or(|(b, _)| v > *b) {
                best = Some((v, idx.to_vec()));
            }
        }
        Err(e) => {
            failure.get_or_insert(e);
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let (value, set) = best.expect("at least one subset");
    Ok((estimate(value), set))
}

pub fn mig_brute_force<T: Scalar>(
    kernel: &Kernel<T>,
    domain: &Domain<T>,
    t: usize,
    noise: T,
) -> Result<MigEstimate<T>, InfoGainError> {
    mig_brute_force_with_set(kernel, domain, t, noise).map(|(e, _)| e)
}

/// Greedy variance maximization: the selected indices and the running
/// information `γ̂_1, …, γ̂_t`. Each point is taken at most once until the domain is exhausted.
pub fn greedy_path<T: Scalar>(
    kernel: &Kernel<T>,
    domain: &Domain<T>,
    t: usize,
    noise: T,
) -> Result<(Vec<usize>, Vec<T>), InfoGainError> {
    let mut post = Posterior::tracking(kernel.clone(), noise, domain.clone())?;
    let mut chosen = Vec::with_capacity(t);
    let mut running = Vec::with_capacity(t);
    let mut total = T::zero();
    for _ in 0..t {
        let sds = post.candidate_stddevs()?;
        let mut masked = sds.clone();
        if chosen.len() < masked.len() {
            for &c in &chosen {
                masked[c] = T::neg_infinity();
            }
        }
        let i = argmax(&masked).expect("domain is nonempty");
        total += (T::one() + sds[i] * sds[i] / noise).ln() / T::lit(2.0);
        post.condition_on_candidate(i)?;
        chosen.push(i);
        running.push(total);
    }
    Ok((chosen, running))
}

pub fn mig_greedy<T: Scalar>(
    kernel: &Kernel<T>,
    domain: &Domain<T>,
    t: usize,
    noise: T,
) -> Result<MigEstimate<T>, InfoGainError> {
    let (_, running) = greedy_path(kernel, domain, t, noise)?;
    Ok(MigEstimate { t, value: running.last().copied().unwrap_or(T::zero()), method: MigMethod::Greedy })
}

/// `1 − 1/e`, the greedy approximation ratio for monotone submodular maximization.
fn greedy_ratio<T: Scalar>() -> T {
    T::one() - (-T::one()).exp()
}

/// Asymptotic growth rates with leading constant `constant`:
/// linear `d ln t`, squared exponential `(ln t)^d`,
/// Matérn `t^{d(d+1)/(2ν+d(d+1))} ln t`, and plain `ln t`.
/// `t = 0` gives 0; at `t = 1` every form vanishes.
pub fn mig_analytic<T: Scalar>(
    method: MigMethod,
    t: usize,
    d: usize,
    nu: f64,
    constant: T,
) -> Result<MigEstimate<T>, InfoGainError> {
    let value = if t == 0 {
        T::zero()
    } else {
        let ln_t = T::from_usize_lossy(t).ln();
        let d_t = T::from_usize_lossy(d);
        let shape = match method {
            MigMethod::AnalyticLinear => d_t * ln_t,
            MigMethod::AnalyticSquaredExponential => ln_t.powi(d as i32),
            MigMethod::AnalyticMatern => {
                let dd = d_t * (d_t + T::one());
                let exponent = dd / (T::lit(2.0 * nu) + dd);
                T::from_usize_lossy(t).powf(exponent) * ln_t
            }
            MigMethod::LogT => ln_t,
            other => return Err(InfoGainError::UnsupportedMethod(other.name())),
        };
        constant * shape
    };
    Ok(MigEstimate { t, value, method })
}

/// The analytic method matching a kernel family.
pub fn analytic_method_for(kind: KernelKind) -> Result<(MigMethod, f64), InfoGainError> {
    match kind {
        KernelKind::SquaredExponential => Ok((MigMethod::AnalyticSquaredExponential, 0.0)),
        KernelKind::Matern(s) => Ok((MigMethod::AnalyticMatern, s.nu())),
        KernelKind::Linear => Ok((MigMethod::AnalyticLinear, 0.0)),
        KernelKind::Precomputed => Err(InfoGainError::UnsupportedKernel(kind)),
    }
}

/// How `γ_t` is obtained when computing confidence widths.
#[derive(Debug, Clone, PartialEq)]
pub enum GammaEstimator<T> {
    /// Analytic growth rate for a kernel family in dimension `d`.
    Analytic { method: MigMethod, d: usize, nu: f64, constant: T },
    /// `γ_t = ln t`.
    LogT,
    /// Precomputed values `γ_0, γ_1, …`; index `t` must be present.
    Table { method: MigMethod, values: Arc<[T]> },
}

impl<T: Scalar> GammaEstimator<T> {
    pub fn analytic_for(kernel: &Kernel<T>, d: usize, constant: T) -> Result<Self, InfoGainError> {
        let (method, nu) = analytic_method_for(kernel.kind())?;
        Ok(Self::Analytic { method, d, nu, constant })
    }

    /// Tabulates `γ_0..=γ_max` with a finite-domain method.
    pub fn tabulate(
        method: MigMethod,
        kernel: &Kernel<T>,
        domain: &Domain<T>,
        max: usize,
        noise: T,
    ) -> Result<Self, InfoGainError> {
        let mut values = vec![T::zero()];
        match method {
            MigMethod::BruteForce => {
                for t in 1..=max {
                    values.push(mig_brute_force(kernel, domain, t, noise)?.value);
                }
            }
            MigMethod::Greedy | MigMethod::GreedyBound => {
                let scale = if method == MigMethod::GreedyBound { greedy_ratio::<T>() } else { T::one() };
                let (_, running) = greedy_path(kernel, domain, max, noise)?;
                values.extend(running.into_iter().map(|v| v / scale));
            }
            other => return Err(InfoGainError::UnsupportedMethod(other.name())),
        }
        Ok(Self::Table { method, values: values.into() })
    }

    pub fn method(&self) -> MigMethod {
        match self {
            GammaEstimator::Analytic { method, .. } | GammaEstimator::Table { method, .. } => *method,
            GammaEstimator::LogT => MigMethod::LogT,
        }
    }

    pub fn gamma(&self, t: usize) -> Result<T, InfoGainError> {
        match self {
            GammaEstimator::Analytic { method, d, nu, constant } => {
                mig_analytic(*method, t, *d, *nu, *constant).map(|e| e.value)
            }
            GammaEstimator::LogT => mig_analytic(MigMethod::LogT, t, 1, 0.0, T::one()).map(|e| e.value),
            GammaEstimator::Table { values, .. } => values
                .get(t)
                .copied()
                .ok_or(InfoGainError::TableTooShort { max: values.len() - 1, t }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XiMode {
    /// `ξ_M = exp(2 γ_{M−1})`.
    Theory,
    /// `ξ_M = 1`.
    Unit,
    Custom,
}

/// The hallucinated-information factor `ξ_M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XiM<T> {
    pub batch: usize,
    pub value: T,
    pub mode: XiMode,
}

impl<T: Scalar> XiM<T> {
    pub fn unit(batch: usize) -> Self {
        Self { batch, value: T::one(), mode: XiMode::Unit }
    }

    /// A user-chosen value, clamped below at 1.
    pub fn custom(batch: usize, value: T) -> Self {
        Self { batch, value: value.max(T::one()), mode: XiMode::Custom }
    }

    pub fn sqrt(&self) -> T {
        self.value.sqrt()
    }
}

/// `ξ_M` for batch bound `M ≥ 1`. `Custom` mode starts at 1; use [`XiM::custom`] to set it.
pub fn compute_xi<T: Scalar>(
    batch: usize,
    gamma: &GammaEstimator<T>,
    mode: XiMode,
) -> Result<XiM<T>, InfoGainError> {
    let batch = batch.max(1);
    let value = match mode {
        XiMode::Unit | XiMode::Custom => T::one(),
        XiMode::Theory if batch == 1 => T::one(),
        XiMode::Theory => (T::lit(2.0) * gamma.gamma(batch - 1)?).exp().max(T::one()),
    };
    Ok(XiM { batch, value, mode })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Point;
    use crate::kernels::Smoothness;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn se_line(n: usize) -> (Kernel<f64>, Domain<f64>) {
        (Kernel::squared_exponential(0.2).unwrap(), Domain::linspace(0.0, 1.0, n).unwrap())
    }

    #[test]
    fn brute_force_small_cases() {
        let (k, d) = se_line(10);
        assert_eq!(mig_brute_force(&k, &d, 0, 0.025).unwrap().value, 0.0);
        let one = mig_brute_force(&k, &d, 1, 0.025).unwrap().value;
        assert_abs_diff_eq!(one, 0.5 * 41f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(one, 1.8567, epsilon = 1e-4);
    }

    #[test]
    fn guard_is_enforced() {
        let (k, d) = se_line(16);
        assert!(matches!(mig_brute_force(&k, &d, 2, 0.1), Err(InfoGainError::GuardExceeded { .. })));
        let (k, d) = se_line(10);
        assert!(matches!(mig_brute_force(&k, &d, 7, 0.1), Err(InfoGainError::GuardExceeded { .. })));
        let (k, d) = se_line(3);
        assert!(matches!(mig_brute_force(&k, &d, 4, 0.1), Err(InfoGainError::SubsetTooLarge { .. })));
    }

    #[test]
    fn subset_enumeration_counts() {
        let mut count = 0;
        for_each_subset(7, 3, |s| {
            assert!(s.windows(2).all(|w| w[0] < w[1]));
            count += 1;
        });
        assert_eq!(count, 35);
    }

    #[test]
    fn determinant_and_sequential_forms_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            let n = rng.random_range(3..=10);
            let t = rng.random_range(1..=n.min(5));
            let d = Domain::new((0..n).map(|_| Point::new(vec![rng.random_range(0.0..1.0)])).collect()).unwrap();
            let k = Kernel::matern(rng.random_range(0.1..0.5), Smoothness::FiveHalves).unwrap();
            let lambda = rng.random_range(0.01..0.3);
            let (best, set) = mig_brute_force_with_set(&k, &d, t, lambda).unwrap();
            let mut order = set.clone();
            for _ in 0..3 {
                let seq = sequential_information(&k, &d, &order, lambda).unwrap();
                assert_abs_diff_eq!(seq, best.value, epsilon = 1e-8);
                order.rotate_left(1);
                let last = order.len() - 1;
                order.swap(0, last);
            }
        }
    }

    #[test]
    fn greedy_vs_brute_force() {
        let (k, d) = se_line(10);
        assert_abs_diff_eq!(
            mig_greedy(&k, &d, 1, 0.025).unwrap().value,
            mig_brute_force(&k, &d, 1, 0.025).unwrap().value,
            epsilon = 1e-12
        );
        let g = mig_greedy(&k, &d, 4, 0.025).unwrap().value;
        let b = mig_brute_force(&k, &d, 4, 0.025).unwrap().value;
        assert!(g <= b + 1e-12);
        assert!(b <= g / greedy_ratio::<f64>());
    }

    #[test]
    fn greedy_on_orthogonal_kernel() {
        let n = 6;
        let k = Kernel::precomputed(SymMatrix::from_fn(n, |i, j| if i == j { 1.0 } else { 0.0 })).unwrap();
        let d = Domain::indices(n).unwrap();
        let g = mig_greedy(&k, &d, n, 0.025).unwrap();
        assert_abs_diff_eq!(g.value, n as f64 / 2.0 * 41f64.ln(), epsilon = 1e-10);
        let (chosen, _) = greedy_path(&k, &d, n, 0.025).unwrap();
        assert_eq!(chosen, vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn estimates_are_monotone() {
        let (k, d) = se_line(12);
        let bf = GammaEstimator::tabulate(MigMethod::BruteForce, &k, &d, 6, 0.05).unwrap();
        let gr = GammaEstimator::tabulate(MigMethod::Greedy, &k, &d, 40, 0.05).unwrap();
        let an = GammaEstimator::analytic_for(&k, 1, 1.0).unwrap();
        let mat = GammaEstimator::Analytic { method: MigMethod::AnalyticMatern, d: 2, nu: 2.5, constant: 1.0 };
        for t in 1..40 {
            if t < 6 {
                assert!(bf.gamma(t + 1).unwrap() >= bf.gamma(t).unwrap());
            }
            assert!(gr.gamma(t + 1).unwrap() >= gr.gamma(t).unwrap());
            assert!(an.gamma(t + 1).unwrap() >= an.gamma(t).unwrap());
            assert!(mat.gamma(t + 1).unwrap() >= mat.gamma(t).unwrap());
        }
        assert!(matches!(bf.gamma(7), Err(InfoGainError::TableTooShort { max: 6, t: 7 })));
    }

    #[test]
    fn analytic_values() {
        let e2 = std::f64::consts::E.powi(2);
        // t = e² is not an integer; evaluate the formula through ln t directly
        let se = |t: f64, d: i32| t.ln().powi(d);
        assert_abs_diff_eq!(se(e2, 1), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(se(e2, 2), 4.0, epsilon = 1e-12);
        let v = mig_analytic::<f64>(MigMethod::AnalyticSquaredExponential, 7, 2, 0.0, 1.0).unwrap().value;
        assert_abs_diff_eq!(v, 7f64.ln().powi(2), epsilon = 1e-12);
        let v = mig_analytic::<f64>(MigMethod::AnalyticLinear, 3, 3, 0.0, 1.0).unwrap().value;
        assert_abs_diff_eq!(v, 3.0 * 3f64.ln(), epsilon = 1e-12);
        let v = mig_analytic::<f64>(MigMethod::LogT, 100, 1, 0.0, 1.0).unwrap().value;
        assert_abs_diff_eq!(v, 100f64.ln(), epsilon = 1e-12);
        let v = mig_analytic::<f64>(MigMethod::AnalyticMatern, 50, 1, 2.5, 2.0).unwrap().value;
        assert_abs_diff_eq!(v, 2.0 * 50f64.powf(2.0 / 7.0) * 50f64.ln(), epsilon = 1e-12);
        assert_eq!(mig_analytic::<f64>(MigMethod::LogT, 1, 1, 0.0, 1.0).unwrap().value, 0.0);
        assert!(mig_analytic::<f64>(MigMethod::Greedy, 5, 1, 0.0, 1.0).is_err());
    }

    #[test]
    fn xi_modes() {
        let (k, d) = se_line(10);
        let bf = GammaEstimator::tabulate(MigMethod::BruteForce, &k, &d, 3, 0.025).unwrap();
        assert_eq!(compute_xi(1, &bf, XiMode::Theory).unwrap().value, 1.0);
        assert_eq!(compute_xi(7, &bf, XiMode::Unit).unwrap().value, 1.0);
        let xi2 = compute_xi(2, &bf, XiMode::Theory).unwrap();
        assert_abs_diff_eq!(xi2.value, 1.0 + 1.0 / 0.025, epsilon = 1e-9);
        assert_abs_diff_eq!(xi2.sqrt(), 41f64.sqrt(), epsilon = 1e-9);
        assert_eq!(XiM::custom(3, 0.5).value, 1.0);
    }
}

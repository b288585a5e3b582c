use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{Environment, EnvironmentError, NoiseModel};
use crate::domain::Domain;
use crate::kernels::Kernel;
use crate::scalar::Scalar;

/// Number of kernel centers when none is given.
pub const DEFAULT_CENTERS: usize = 50;

/// `f(x) = Σᵢ aᵢ k(cᵢ, x)` with centers indexing a finite domain.
#[derive(Debug, Clone, PartialEq)]
pub struct RkhsFunction<T> {
    pub centers: Vec<usize>,
    pub coefficients: Vec<T>,
}

impl<T: Scalar> RkhsFunction<T> {
    /// `‖f‖_k = √(aᵀ K_c a)`.
    pub fn norm(&self, kernel: &Kernel<T>, domain: &Domain<T>) -> Result<T, EnvironmentError> {
        let pts: Vec<_> = self.centers.iter().map(|&c| domain[c].clone()).collect();
        let gram = kernel.gram(&pts)?;
        let mut q = T::zero();
        for (i, &ai) in self.coefficients.iter().enumerate() {
            for (j, &aj) in self.coefficients.iter().enumerate() {
                q += ai * gram.get(i, j) * aj;
            }
        }
        Ok(q.max(T::zero()).sqrt())
    }

    pub fn evaluate(&self, kernel: &Kernel<T>, domain: &Domain<T>) -> Result<Vec<T>, EnvironmentError> {
        let mut out = Vec::with_capacity(domain.len());
        for x in domain.iter() {
            let mut f = T::zero();
            for (&c, &a) in self.centers.iter().zip(&self.coefficients) {
                f += a * kernel.evaluate(&domain[c], x)?;
            }
            out.push(f);
        }
        Ok(out)
    }
}

/// Draws `n_centers` distinct centers uniformly from `domain` and standard normal
/// coefficients, rescaled so that `‖f‖_k = bound`. Coefficients with a vanishing norm are redrawn.
pub fn generate_rkhs_function<T: Scalar, R: Rng + ?Sized>(
    kernel: &Kernel<T>,
    domain: &Domain<T>,
    bound: T,
    n_centers: usize,
    noise_variance: T,
    rng: &mut R,
) -> Result<(Environment<T>, RkhsFunction<T>), EnvironmentError> {
    if n_centers == 0 || n_centers > domain.len() {
        return Err(EnvironmentError::TooManyCenters { needed: n_centers.max(1), available: domain.len() });
    }
    if !(bound > T::zero()) {
        return Err(EnvironmentError::InvalidNoise(format!("norm bound {bound} must be positive")));
    }
    let noise = NoiseModel::gaussian(noise_variance)?;
    let mut centers = sample(rng, domain.len(), n_centers).into_vec();
    centers.sort_unstable();
    let floor = T::epsilon().sqrt();
    loop {
        let coefficients: Vec<T> = (0..n_centers)
            .map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                T::lit(z)
            })
            .collect();
        let mut f = RkhsFunction { centers: centers.clone(), coefficients };
        let norm = f.norm(kernel, domain)?;
        if norm <= floor {
            continue;
        }
        let scale = bound / norm;
        f.coefficients.iter_mut().for_each(|a| *a *= scale);
        let truth = f.evaluate(kernel, domain)?;
        let env = Environment::new(format!("rkhs_{}", kernel.kind().name()), domain.clone(), truth, noise)?;
        return Ok((env, f));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::Smoothness;
    use crate::scalar::argmax;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn kernels() -> [Kernel<f64>; 2] {
        [
            Kernel::squared_exponential(0.2).unwrap(),
            Kernel::matern(0.2, Smoothness::FiveHalves).unwrap(),
        ]
    }

    #[test]
    fn single_center_norm() {
        let d = Domain::linspace(0.0, 1.0, 100).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (env, f) = generate_rkhs_function(&kernels()[0], &d, 2.0, 1, 0.0, &mut rng).unwrap();
        assert!((f.coefficients[0].abs() - 2.0).abs() < 1e-12);
        assert_eq!(env.optimum_value(), env.truth().iter().cloned().fold(f64::MIN, f64::max));
    }

    #[test]
    fn norm_and_sup_bound_over_seeds() {
        let d = Domain::linspace(0.0, 1.0, 100).unwrap();
        for k in kernels() {
            for seed in 0..100 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let (env, f) = generate_rkhs_function(&k, &d, 1.0, DEFAULT_CENTERS, 0.025, &mut rng).unwrap();
                assert!((f.norm(&k, &d).unwrap() - 1.0).abs() < 1e-10);
                let mut c = f.centers.clone();
                c.dedup();
                assert_eq!(c.len(), DEFAULT_CENTERS);
                assert!(env.truth().iter().all(|v| v.abs() <= 1.0 + 1e-12));
                assert_eq!(env.optimum_index(), argmax(env.truth()).unwrap());
            }
        }
    }

    #[test]
    fn too_many_centers() {
        let d = Domain::linspace(0.0, 1.0, 10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(generate_rkhs_function(&kernels()[0], &d, 1.0, 11, 0.0, &mut rng).is_err());
        assert!(generate_rkhs_function(&kernels()[0], &d, 1.0, 0, 0.0, &mut rng).is_err());
    }
}

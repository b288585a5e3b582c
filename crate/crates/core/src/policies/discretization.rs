use super::PolicyError;
use crate::domain::Domain;
use crate::scalar::Scalar;

/// Grid used by Thompson sampling on a box domain `[0, r]^d`.
///
/// Each coordinate gets `min(⌈B L r d t²⌉, cap)` evenly spaced points, which keeps
/// `|f(x) − f([x]_t)| ≤ 1/t²` for `‖f‖_k ≤ B` until the cap binds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscretizationConfig<T> {
    /// Lipschitz constant of the kernel gradient; see [`crate::kernels::Kernel::gradient_lipschitz`].
    pub lipschitz: T,
    /// Side length `r` of the box.
    pub side: T,
    pub cap: usize,
    /// Use a supplied finite domain as-is.
    pub finite_domain_passthrough: bool,
}

impl<T: Scalar> Default for DiscretizationConfig<T> {
    fn default() -> Self {
        Self { lipschitz: T::one(), side: T::one(), cap: 256, finite_domain_passthrough: true }
    }
}

impl<T: Scalar> DiscretizationConfig<T> {
    /// Points per coordinate at round `t`.
    pub fn points_per_axis(&self, t: usize, rkhs_bound: T, d: usize) -> Result<usize, PolicyError> {
        if self.cap < 2 {
            return Err(PolicyError::InvalidConfig(format!("discretization cap {} < 2", self.cap)));
        }
        let t = T::from_usize_lossy(t);
        let raw = (rkhs_bound * self.lipschitz * self.side * T::from_usize_lossy(d) * t * t).ceil();
        let cap = T::from_usize_lossy(self.cap);
        let count = if raw.is_finite() && raw < cap { raw.to_usize().unwrap_or(self.cap) } else { self.cap };
        Ok(count.max(2))
    }
}

/// The decision set for round `t`: `finite` itself when passthrough is on, else a grid on `[0, r]^d`.
pub fn build_discretization<T: Scalar>(
    config: &DiscretizationConfig<T>,
    t: usize,
    rkhs_bound: T,
    d: usize,
    finite: Option<&Domain<T>>,
) -> Result<Domain<T>, PolicyError> {
    if let (true, Some(domain)) = (config.finite_domain_passthrough, finite) {
        return Ok(domain.clone());
    }
    let n = config.points_per_axis(t, rkhs_bound, d)?;
    Ok(Domain::grid(T::zero(), config.side, n, d)?)
}

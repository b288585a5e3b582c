//! Covariance kernels.
//!
//! Stationary kernels (squared exponential, Matérn) have unit variance, so
//! `k(x, x) = 1`. Precomputed kernels are index-addressed symmetric matrices,
//! normalized to unit diagonal when built from sensor data.

mod empirical;

use std::sync::Arc;

use thiserror::Error;

use crate::domain::Point;
use crate::linalg::SymMatrix;
use crate::scalar::{dot, Scalar};

pub use empirical::{
    load_empirical_kernel, read_readings, ConstantColumnPolicy, EmpiricalKernel, IngestOptions,
    MissingPolicy, SensorReadings,
};

/// Tolerance on the smallest Gram eigenvalue when checking positive semi-definiteness.
pub const PSD_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("lengthscale must be positive and finite, got {0}")]
    InvalidLengthscale(f64),
    #[error("points have dimensions {0} and {1}")]
    DimensionMismatch(usize, usize),
    #[error("precomputed kernel of size {size} cannot address point {coord:?}")]
    IndexOutOfRange { coord: f64, size: usize },
    #[error("precomputed matrix is not symmetric at ({0}, {1})")]
    NotSymmetric(usize, usize),
    #[error("gram matrix needs at least one point")]
    NoPoints,
    #[error("sensor readings: {0}")]
    Readings(String),
}

/// Matérn smoothness `ν`; only the half-integer cases with closed forms are supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Smoothness {
    Half,
    ThreeHalves,
    FiveHalves,
}

impl Smoothness {
    pub fn nu(self) -> f64 {
        match self {
            Smoothness::Half => 0.5,
            Smoothness::ThreeHalves => 1.5,
            Smoothness::FiveHalves => 2.5,
        }
    }

    pub fn from_nu(nu: f64) -> Option<Self> {
        [Smoothness::Half, Smoothness::ThreeHalves, Smoothness::FiveHalves]
            .into_iter()
            .find(|s| s.nu() == nu)
    }
}

/// Kernel family, without hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelKind {
    SquaredExponential,
    Matern(Smoothness),
    Linear,
    Precomputed,
}

impl KernelKind {
    pub fn name(self) -> &'static str {
        match self {
            KernelKind::SquaredExponential => "se",
            KernelKind::Matern(Smoothness::Half) => "matern12",
            KernelKind::Matern(Smoothness::ThreeHalves) => "matern32",
            KernelKind::Matern(Smoothness::FiveHalves) => "matern52",
            KernelKind::Linear => "linear",
            KernelKind::Precomputed => "precomputed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Kernel<T> {
    SquaredExponential { lengthscale: T },
    Matern { lengthscale: T, smoothness: Smoothness },
    Linear,
    Precomputed(Arc<SymMatrix<T>>),
}

fn check_lengthscale<T: Scalar>(l: T) -> Result<T, KernelError> {
    if l > T::zero() && l.is_finite() {
        Ok(l)
    } else {
        Err(KernelError::InvalidLengthscale(l.to_f64_lossy()))
    }
}

impl<T: Scalar> Kernel<T> {
    pub fn squared_exponential(lengthscale: T) -> Result<Self, KernelError> {
        Ok(Kernel::SquaredExponential { lengthscale: check_lengthscale(lengthscale)? })
    }

    pub fn matern(lengthscale: T, smoothness: Smoothness) -> Result<Self, KernelError> {
        Ok(Kernel::Matern { lengthscale: check_lengthscale(lengthscale)?, smoothness })
    }

    /// Wraps a symmetric matrix; points address it as 1-d indices (see [`Point::index`]).
    pub fn precomputed(matrix: SymMatrix<T>) -> Result<Self, KernelError> {
        let n = matrix.dim();
        for i in 0..n {
            for j in 0..i {
                if matrix.get(i, j) != matrix.get(j, i) {
                    return Err(KernelError::NotSymmetric(i, j));
                }
            }
        }
        Ok(Kernel::Precomputed(Arc::new(matrix)))
    }

    pub fn kind(&self) -> KernelKind {
        match self {
            Kernel::SquaredExponential { .. } => KernelKind::SquaredExponential,
            Kernel::Matern { smoothness, .. } => KernelKind::Matern(*smoothness),
            Kernel::Linear => KernelKind::Linear,
            Kernel::Precomputed(_) => KernelKind::Precomputed,
        }
    }

    pub fn evaluate(&self, x: &Point<T>, y: &Point<T>) -> Result<T, KernelError> {
        if let Kernel::Precomputed(m) = self {
            let i = precomputed_index(x, m.dim())?;
            let j = precomputed_index(y, m.dim())?;
            return Ok(m.get(i, j));
        }
        if x.dim() != y.dim() {
            return Err(KernelError::DimensionMismatch(x.dim(), y.dim()));
        }
        Ok(match self {
            Kernel::SquaredExponential { lengthscale } => {
                let r2 = x.sq_distance(y) / (*lengthscale * *lengthscale);
                (-r2 / T::lit(2.0)).exp()
            }
            Kernel::Matern { lengthscale, smoothness } => {
                matern(x.sq_distance(y).sqrt() / *lengthscale, *smoothness)
            }
            Kernel::Linear => dot(x.coords(), y.coords()),
            Kernel::Precomputed(_) => unreachable!(),
        })
    }

    /// `[k(u, v)]` over the given points.
    pub fn gram(&self, points: &[Point<T>]) -> Result<SymMatrix<T>, KernelError> {
        if points.is_empty() {
            return Err(KernelError::NoPoints);
        }
        let d = points[0].dim();
        if let Some(p) = points.iter().find(|p| p.dim() != d) {
            return Err(KernelError::DimensionMismatch(d, p.dim()));
        }
        let mut err = None;
        let m = SymMatrix::from_fn(points.len(), |i, j| {
            self.evaluate(&points[i], &points[j]).unwrap_or_else(|e| {
                err.get_or_insert(e);
                T::nan()
            })
        });
        match err {
            Some(e) => Err(e),
            None => Ok(m),
        }
    }

    /// `L` with `L² = sup ∂_p ∂_q k(p, q)` at `p = q`, per coordinate. `None` when the
    /// kernel is not differentiable at the diagonal or not stationary.
    pub fn gradient_lipschitz(&self) -> Option<T> {
        match self {
            Kernel::SquaredExponential { lengthscale } => Some(T::one() / *lengthscale),
            Kernel::Matern { lengthscale, smoothness: Smoothness::ThreeHalves } => {
                Some(T::lit(3.0).sqrt() / *lengthscale)
            }
            Kernel::Matern { lengthscale, smoothness: Smoothness::FiveHalves } => {
                Some(T::lit(5.0 / 3.0).sqrt() / *lengthscale)
            }
            _ => None,
        }
    }
}

/// Closed-form Matérn correlation at scaled distance `r = s / ℓ`.
fn matern<T: Scalar>(r: T, smoothness: Smoothness) -> T {
    match smoothness {
        Smoothness::Half => (-r).exp(),
        Smoothness::ThreeHalves => {
            let a = T::lit(3.0).sqrt() * r;
            (T::one() + a) * (-a).exp()
        }
        Smoothness::FiveHalves => {
            let a = T::lit(5.0).sqrt() * r;
            (T::one() + a + a * a / T::lit(3.0)) * (-a).exp()
        }
    }
}

fn precomputed_index<T: Scalar>(p: &Point<T>, size: usize) -> Result<usize, KernelError> {
    let bad = || KernelError::IndexOutOfRange {
        coord: p.coords().first().map_or(f64::NAN, |c| c.to_f64_lossy()),
        size,
    };
    if p.dim() != 1 {
        return Err(bad());
    }
    let c = p.coords()[0];
    if c < T::zero() || c.fract() != T::zero() {
        return Err(bad());
    }
    let i = c.to_usize().ok_or_else(bad)?;
    if i < size {
        Ok(i)
    } else {
        Err(bad())
    }
}

//! Two-dimensional test functions on `[0, 1]²`, in maximization form.
//!
//! * Cosines: `1 − (u² + v² − 0.3 cos(3πu) − 0.3 cos(3πv))` with `u = 1.6x − 0.5`, `v = 1.6y − 0.5`
//! * Rosenbrock: `10 − 100 (y − x²)² − (1 − x)²`
//!
//! Both follow the forms used in the batch Bayesian optimization literature
//! (Azimi, Fern and Fern). Optima are found by scanning the grid.

use super::{Environment, EnvironmentError, NoiseModel};
use crate::domain::Domain;
use crate::kernels::Kernel;
use crate::scalar::Scalar;

/// Points per axis of the benchmark grid.
pub const BENCHMARK_GRID: usize = 31;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Benchmark {
    Cosines,
    Rosenbrock,
}

impl Benchmark {
    pub fn name(self) -> &'static str {
        match self {
            Benchmark::Cosines => "cosines",
            Benchmark::Rosenbrock => "rosenbrock",
        }
    }

    pub fn from_name(name: &str) -> Result<Self, EnvironmentError> {
        [Benchmark::Cosines, Benchmark::Rosenbrock]
            .into_iter()
            .find(|b| b.name() == name)
            .ok_or_else(|| EnvironmentError::UnknownBenchmark(name.to_string()))
    }

    pub fn evaluate<T: Scalar>(self, x: T, y: T) -> T {
        let l = T::lit;
        match self {
            Benchmark::Cosines => {
                let u = l(1.6) * x - l(0.5);
                let v = l(1.6) * y - l(0.5);
                let w = l(3.0) * T::PI();
                T::one() - (u * u + v * v - l(0.3) * (w * u).cos() - l(0.3) * (w * v).cos())
            }
            Benchmark::Rosenbrock => {
                let a = y - x * x;
                let b = T::one() - x;
                l(10.0) - l(100.0) * a * a - b * b
            }
        }
    }
}

/// Squared exponential kernel with `ℓ² = 0.1`.
pub fn benchmark_kernel<T: Scalar>() -> Kernel<T> {
    Kernel::squared_exponential(T::lit(0.1).sqrt()).expect("positive lengthscale")
}

/// The benchmark tabulated on the 31 × 31 grid over `[0, 1]²`.
pub fn benchmark_environment<T: Scalar>(
    benchmark: Benchmark,
    noise_variance: T,
) -> Result<Environment<T>, EnvironmentError> {
    let domain = Domain::grid(T::zero(), T::one(), BENCHMARK_GRID, 2)?;
    let truth = domain.iter().map(|p| benchmark.evaluate(p.coords()[0], p.coords()[1])).collect();
    Environment::new(benchmark.name(), domain, truth, NoiseModel::gaussian(noise_variance)?)
}

//! Reward environments over finite candidate sets and their noise channels.

mod benchmarks;
mod rkhs;
mod sensor;

use std::io::{Read, Write};
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::domain::{Domain, DomainError, Point};
use crate::kernels::KernelError;
use crate::scalar::{argmax, Scalar};

pub use benchmarks::{benchmark_environment, benchmark_kernel, Benchmark, BENCHMARK_GRID};
pub use rkhs::{generate_rkhs_function, RkhsFunction, DEFAULT_CENTERS};
pub use sensor::{sensor_environment, SensorEnvironment, SensorTarget, SENSOR_NOISE_FRACTION};

#[derive(Debug, Error)]
pub enum EnvironmentError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("truth has {got} values for {expected} candidates")]
    TruthLength { expected: usize, got: usize },
    #[error("truth value at candidate {0} is not finite")]
    NonFiniteTruth(usize),
    #[error("invalid noise: {0}")]
    InvalidNoise(String),
    #[error("need {needed} distinct centers but the domain has {available} candidates")]
    TooManyCenters { needed: usize, available: usize },
    #[error("unknown benchmark {0:?}")]
    UnknownBenchmark(String),
    #[error("resampled-noise environments cannot be serialized")]
    NotSerializable,
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed environment file: {0}")]
    Format(String),
}

/// Observation noise added to the true reward.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseModel<T> {
    /// `ε ~ N(0, variance)`.
    Gaussian { variance: T },
    /// A uniformly drawn past reading of the queried candidate replaces the reward.
    Resample { columns: Arc<[Vec<T>]> },
}

impl<T: Scalar> NoiseModel<T> {
    pub fn gaussian(variance: T) -> Result<Self, EnvironmentError> {
        if !(variance >= T::zero()) || !variance.is_finite() {
            return Err(EnvironmentError::InvalidNoise(format!("variance {variance}")));
        }
        Ok(NoiseModel::Gaussian { variance })
    }
}

/// Known reward function on a finite domain.
#[derive(Debug, Clone)]
pub struct Environment<T> {
    name: String,
    domain: Domain<T>,
    truth: Arc<[T]>,
    optimum: usize,
    noise: NoiseModel<T>,
}

impl<T: Scalar> Environment<T> {
    pub fn new(
        name: impl Into<String>,
        domain: Domain<T>,
        truth: Vec<T>,
        noise: NoiseModel<T>,
    ) -> Result<Self, EnvironmentError> {
        if truth.len() != domain.len() {
            return Err(EnvironmentError::TruthLength { expected: domain.len(), got: truth.len() });
        }
        if let Some(i) = truth.iter().position(|v| !v.is_finite()) {
            return Err(EnvironmentError::NonFiniteTruth(i));
        }
        if let NoiseModel::Resample { columns } = &noise {
            if columns.len() != domain.len() || columns.iter().any(Vec::is_empty) {
                return Err(EnvironmentError::InvalidNoise("one non-empty column per candidate required".into()));
            }
        }
        let optimum = argmax(&truth).ok_or(DomainError::Empty)?;
        Ok(Self { name: name.into(), domain, truth: truth.into(), optimum, noise })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> &Domain<T> {
        &self.domain
    }

    pub fn truth(&self) -> &[T] {
        &self.truth
    }

    pub fn noise(&self) -> &NoiseModel<T> {
        &self.noise
    }

    /// Index of `x*`; the lowest index among ties.
    pub fn optimum_index(&self) -> usize {
        self.optimum
    }

    pub fn optimum_value(&self) -> T {
        self.truth[self.optimum]
    }

    /// `r = f(x*) − f(x)`.
    pub fn regret(&self, index: usize) -> T {
        self.optimum_value() - self.truth[index]
    }

    /// Noise variance (the mean per-candidate sample variance for resampled noise).
    pub fn noise_variance(&self) -> T {
        match &self.noise {
            NoiseModel::Gaussian { variance } => *variance,
            NoiseModel::Resample { columns } => {
                let vars = columns.iter().map(|c| {
                    let n = T::from_usize_lossy(c.len());
                    let m = c.iter().copied().sum::<T>() / n;
                    c.iter().map(|&v| (v - m) * (v - m)).sum::<T>() / n
                });
                vars.sum::<T>() / T::from_usize_lossy(columns.len())
            }
        }
    }

    /// Noisy reward `y = f(x) + ε` at candidate `index`.
    ///
    /// Gaussian noise always consumes one normal draw, even at zero variance.
    pub fn observe<R: Rng + ?Sized>(&self, index: usize, rng: &mut R) -> T {
        match &self.noise {
            NoiseModel::Gaussian { variance } => {
                let z: f64 = rng.sample(StandardNormal);
                self.truth[index] + variance.sqrt() * T::lit(z)
            }
            NoiseModel::Resample { columns } => {
                let col = &columns[index];
                col[rng.random_range(0..col.len())]
            }
        }
    }

    /// Writes `x0, …, x{d−1}, truth, noise_variance` rows. Values round-trip exactly.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), EnvironmentError> {
        let NoiseModel::Gaussian { variance } = self.noise else {
            return Err(EnvironmentError::NotSerializable);
        };
        let mut w = csv::Writer::from_writer(writer);
        let d = self.domain.dim();
        let mut header: Vec<String> = (0..d).map(|i| format!("x{i}")).collect();
        header.extend(["truth".to_string(), "noise_variance".to_string()]);
        w.write_record(&header)?;
        for (x, f) in self.domain.iter().zip(self.truth.iter()) {
            let mut row: Vec<String> = x.coords().iter().map(|c| format!("{}", c.to_f64_lossy())).collect();
            row.push(format!("{}", f.to_f64_lossy()));
            row.push(format!("{}", variance.to_f64_lossy()));
            w.write_record(&row)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Reads an environment written by [`Environment::write_csv`].
    pub fn read_csv<R: Read>(name: impl Into<String>, reader: R) -> Result<Self, EnvironmentError> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        let cols = header.len();
        if cols < 3 || &header[cols - 2] != "truth" || &header[cols - 1] != "noise_variance" {
            return Err(EnvironmentError::Format("expected x0.., truth, noise_variance columns".into()));
        }
        let d = cols - 2;
        let parse = |s: &str, line: usize| {
            s.trim()
                .parse::<f64>()
                .map(T::lit)
                .map_err(|e| EnvironmentError::Format(format!("line {line}: {s:?}: {e}")))
        };
        let (mut points, mut truth, mut variance) = (Vec::new(), Vec::new(), None);
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let coords = (0..d).map(|i| parse(&rec[i], line + 2)).collect::<Result<Vec<T>, _>>()?;
            points.push(Point::new(coords));
            truth.push(parse(&rec[d], line + 2)?);
            let v = parse(&rec[d + 1], line + 2)?;
            match variance {
                None => variance = Some(v),
                Some(prev) if prev != v => {
                    return Err(EnvironmentError::Format(format!("line {}: noise variance changes", line + 2)))
                }
                _ => {}
            }
        }
        let noise = NoiseModel::gaussian(variance.ok_or(DomainError::Empty)?)?;
        Self::new(name, Domain::new(points)?, truth, noise)
    }
}

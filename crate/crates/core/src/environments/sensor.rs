//! Find the sensor with the largest mean reading.

use std::sync::Arc;

use super::{Environment, EnvironmentError, NoiseModel};
use crate::domain::Domain;
use crate::kernels::{load_empirical_kernel, ConstantColumnPolicy, Kernel, SensorReadings};
use crate::scalar::Scalar;

/// `λ` as a fraction of the average per-sensor variance.
pub const SENSOR_NOISE_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SensorTarget {
    Temperature,
    Light,
}

impl SensorTarget {
    pub fn name(self) -> &'static str {
        match self {
            SensorTarget::Temperature => "temperature",
            SensorTarget::Light => "light",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [SensorTarget::Temperature, SensorTarget::Light].into_iter().find(|s| s.name() == name)
    }
}

#[derive(Debug, Clone)]
pub struct SensorEnvironment<T> {
    pub environment: Environment<T>,
    /// Empirical correlation between sensors.
    pub kernel: Kernel<T>,
    /// `λ = 0.05 ×` the average sample variance.
    pub noise: T,
    /// Input columns kept after dropping constant ones.
    pub kept_columns: Vec<usize>,
}

/// Candidates are the sensors; a query returns a reading from a uniformly drawn row.
pub fn sensor_environment<T: Scalar>(
    readings: SensorReadings<T>,
    target: SensorTarget,
    constant_columns: ConstantColumnPolicy,
) -> Result<SensorEnvironment<T>, EnvironmentError> {
    let empirical = load_empirical_kernel(readings, constant_columns)?;
    let readings = &empirical.readings;
    let truth = readings.column_means();
    let columns: Arc<[Vec<T>]> = (0..readings.sensors()).map(|j| readings.column(j).collect()).collect();
    let environment = Environment::new(
        target.name(),
        Domain::indices(truth.len())?,
        truth,
        NoiseModel::Resample { columns },
    )?;
    Ok(SensorEnvironment {
        environment,
        kernel: empirical.kernel,
        noise: T::lit(SENSOR_NOISE_FRACTION) * empirical.average_variance,
        kept_columns: empirical.kept_columns,
    })
}

//! Sensor readings ingestion and the empirical-covariance kernel.
//!
//! Readings are CSV with one row per timestamp and one column per sensor.
//! Missing cells are empty or `NaN`.

use std::io::Read;

use super::{Kernel, KernelError};
use crate::linalg::SymMatrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MissingPolicy {
    /// Drop every row with at least one missing cell.
    #[default]
    DropRow,
    /// Replace missing cells with the mean of the present cells in that column.
    ImputeColumnMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConstantColumnPolicy {
    #[default]
    Reject,
    Drop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct IngestOptions {
    pub has_header: bool,
    pub missing: MissingPolicy,
    pub constant_columns: ConstantColumnPolicy,
}

/// Cleaned readings: `rows[time][sensor]`, no missing values.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorReadings<T> {
    pub rows: Vec<Vec<T>>,
}

impl<T: Scalar> SensorReadings<T> {
    pub fn sensors(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = T> + '_ {
        self.rows.iter().map(move |r| r[j])
    }

    pub fn column_means(&self) -> Vec<T> {
        let n = T::from_usize_lossy(self.rows.len());
        (0..self.sensors()).map(|j| self.column(j).sum::<T>() / n).collect()
    }

    fn retain_columns(&mut self, keep: &[usize]) {
        for r in &mut self.rows {
            *r = keep.iter().map(|&j| r[j]).collect();
        }
    }
}

fn readings_err(msg: impl Into<String>) -> KernelError {
    KernelError::Readings(msg.into())
}

/// Parses and cleans sensor readings.
pub fn read_readings<T: Scalar, R: Read>(
    reader: R,
    opts: &IngestOptions,
) -> Result<SensorReadings<T>, KernelError> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(opts.has_header)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut raw: Vec<Vec<Option<T>>> = Vec::new();
    for (line, record) in csv.records().enumerate() {
        let record = record.map_err(|e| readings_err(e.to_string()))?;
        let row = record
            .iter()
            .enumerate()
            .map(|(col, cell)| {
                if cell.is_empty() || cell.eq_ignore_ascii_case("nan") {
                    return Ok(None);
                }
                cell.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .map(|v| Some(T::lit(v)))
                    .ok_or_else(|| readings_err(format!("row {line}, column {col}: bad cell {cell:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        raw.push(row);
    }

    let rows = match opts.missing {
        MissingPolicy::DropRow => raw
            .into_iter()
            .filter_map(|r| r.into_iter().collect::<Option<Vec<T>>>())
            .collect(),
        MissingPolicy::ImputeColumnMean => {
            let width = raw.first().map_or(0, Vec::len);
            let means = (0..width)
                .map(|j| {
                    let present: Vec<T> = raw.iter().filter_map(|r| r[j]).collect();
                    if present.is_empty() {
                        Err(readings_err(format!("column {j} has no values")))
                    } else {
                        Ok(present.iter().copied().sum::<T>() / T::from_usize_lossy(present.len()))
                    }
                })
                .collect::<Result<Vec<T>, _>>()?;
            raw.into_iter()
                .map(|r| r.into_iter().zip(&means).map(|(c, &m)| c.unwrap_or(m)).collect())
                .collect()
        }
    };
    Ok(SensorReadings { rows })
}

/// The normalized empirical kernel plus what it was derived from.
#[derive(Debug, Clone)]
pub struct EmpiricalKernel<T> {
    pub kernel: Kernel<T>,
    /// Mean of the per-sensor sample variances, before normalization.
    pub average_variance: T,
    /// Per-sensor sample variances, before normalization.
    pub variances: Vec<T>,
    /// Columns of the input that were kept, in order.
    pub kept_columns: Vec<usize>,
    /// Readings restricted to the kept columns.
    pub readings: SensorReadings<T>,
}

/// Sample covariance across sensors, rescaled to unit diagonal.
pub fn load_empirical_kernel<T: Scalar>(
    mut readings: SensorReadings<T>,
    constant_columns: ConstantColumnPolicy,
) -> Result<EmpiricalKernel<T>, KernelError> {
    let n = readings.rows.len();
    if n < 2 {
        return Err(readings_err(format!("need at least 2 rows of readings, got {n}")));
    }
    if readings.sensors() == 0 {
        return Err(readings_err("no sensor columns"));
    }
    let means = readings.column_means();
    let denom = T::from_usize_lossy(n - 1);
    let variance = |r: &SensorReadings<T>, j: usize, m: T| {
        r.column(j).map(|v| (v - m) * (v - m)).sum::<T>() / denom
    };
    let mut kept_columns = Vec::new();
    for (j, &m) in means.iter().enumerate() {
        if variance(&readings, j, m) > T::zero() {
            kept_columns.push(j);
        } else if constant_columns == ConstantColumnPolicy::Reject {
            return Err(readings_err(format!("column {j} is constant")));
        }
    }
    if kept_columns.is_empty() {
        return Err(readings_err("every column is constant"));
    }
    readings.retain_columns(&kept_columns);
    let means: Vec<T> = kept_columns.iter().map(|&j| means[j]).collect();

    let m = means.len();
    let cov = SymMatrix::from_fn(m, |a, b| {
        readings
            .rows
            .iter()
            .map(|r| (r[a] - means[a]) * (r[b] - means[b]))
            .sum::<T>()
            / denom
    });
    let variances = cov.diagonal();
    let scale: Vec<T> = variances.iter().map(|v| v.sqrt()).collect();
    let normalized = SymMatrix::from_fn(m, |a, b| {
        if a == b {
            T::one()
        } else {
            (cov.get(a, b) / (scale[a] * scale[b])).max(-T::one()).min(T::one())
        }
    });
    let average_variance = variances.iter().copied().sum::<T>() / T::from_usize_lossy(m);
    Ok(EmpiricalKernel {
        kernel: Kernel::precomputed(normalized)?,
        average_variance,
        variances,
        kept_columns,
        readings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Point;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn entry(k: &Kernel<f64>, i: usize, j: usize) -> f64 {
        k.evaluate(&Point::index(i), &Point::index(j)).unwrap()
    }

    #[test]
    fn perfectly_correlated_columns() {
        let r = SensorReadings { rows: vec![vec![1.0, 3.0], vec![2.0, 5.0], vec![4.0, 9.0]] };
        let ek = load_empirical_kernel(r, ConstantColumnPolicy::Reject).unwrap();
        assert_abs_diff_eq!(entry(&ek.kernel, 0, 1), 1.0, epsilon = 1e-12);
        assert_eq!(entry(&ek.kernel, 0, 0), 1.0);
        assert_eq!(entry(&ek.kernel, 1, 1), 1.0);
        // var(1,2,4) = 7/3, var(3,5,9) = 28/3
        assert_abs_diff_eq!(ek.average_variance, (7.0 / 3.0 + 28.0 / 3.0) / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn single_column() {
        let r = SensorReadings { rows: vec![vec![1.0], vec![2.0]] };
        let ek = load_empirical_kernel(r, ConstantColumnPolicy::Reject).unwrap();
        assert_eq!(entry(&ek.kernel, 0, 0), 1.0);
        assert!(ek.kernel.evaluate(&Point::index(1), &Point::index(0)).is_err());
    }

    #[test]
    fn independent_noise_is_near_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rows: Vec<Vec<f64>> = (0..20_000)
            .map(|_| (0..4).map(|j| { let z: f64 = StandardNormal.sample(&mut rng); (j as f64 + 1.0) * z + 10.0 }).collect())
            .collect();
        let ek = load_empirical_kernel(SensorReadings { rows }, ConstantColumnPolicy::Reject).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let v = entry(&ek.kernel, i, j);
                if i == j {
                    assert_eq!(v, 1.0);
                } else {
                    assert!(v.abs() < 0.05, "({i},{j}) = {v}");
                }
            }
        }
        // true variances 1, 4, 9, 16
        assert!((ek.average_variance - 7.5).abs() < 0.3);
    }

    #[test]
    fn rejects_short_and_constant() {
        let short = SensorReadings { rows: vec![vec![1.0, 2.0]] };
        assert!(load_empirical_kernel(short, ConstantColumnPolicy::Reject).is_err());
        let constant = SensorReadings { rows: vec![vec![1.0, 5.0], vec![2.0, 5.0], vec![0.0, 5.0]] };
        assert!(load_empirical_kernel(constant.clone(), ConstantColumnPolicy::Reject).is_err());
        let ek = load_empirical_kernel(constant, ConstantColumnPolicy::Drop).unwrap();
        assert_eq!(ek.kept_columns, vec![0]);
        assert_eq!(ek.readings.sensors(), 1);
    }

    #[test]
    fn csv_missing_cells() {
        let text = "a,b,c\n1,2,3\n4,,6\n7,NaN,9\n10,11,12\n";
        let drop: SensorReadings<f64> =
            read_readings(text.as_bytes(), &IngestOptions { has_header: true, ..Default::default() }).unwrap();
        assert_eq!(drop.rows, vec![vec![1.0, 2.0, 3.0], vec![10.0, 11.0, 12.0]]);
        let opts = IngestOptions { has_header: true, missing: MissingPolicy::ImputeColumnMean, ..Default::default() };
        let imputed: SensorReadings<f64> = read_readings(text.as_bytes(), &opts).unwrap();
        assert_eq!(imputed.rows[1], vec![4.0, 6.5, 6.0]);
        assert_eq!(imputed.rows.len(), 4);
    }

    #[test]
    fn csv_without_header_and_bad_cells() {
        let r: SensorReadings<f64> = read_readings("1,2\n3,4\n".as_bytes(), &IngestOptions::default()).unwrap();
        assert_eq!(r.rows.len(), 2);
        let bad = read_readings::<f64, _>("1,x\n".as_bytes(), &IngestOptions::default());
        assert!(matches!(bad, Err(KernelError::Readings(_))));
    }
}

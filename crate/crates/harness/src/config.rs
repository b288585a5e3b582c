//! Experiment configuration, read from TOML.
//!
//! ```toml
//! label = "rkhs_se_batch"
//! B = "max_abs"
//! lambda = 0.025
//! delta = 0.1
//! xi_mode = "unit"
//! gamma_mode = "analytic"
//! seed = 7
//! horizon = 400
//! replications = 25
//!
//! [environment]
//! kind = "rkhs"
//! kernel = { kind = "se", lengthscale = 0.2 }
//!
//! [schedule]
//! kind = "simple_batch"
//! M = 5
//!
//! [policy]
//! kind = "igp_bucb"
//! ```

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::HarnessError;

fn default_lambda() -> f64 {
    0.025
}
fn default_delta() -> f64 {
    0.1
}
fn default_one() -> f64 {
    1.0
}
fn default_horizon() -> usize {
    400
}
fn default_replications() -> usize {
    25
}
fn default_grid() -> usize {
    100
}
fn default_centers() -> usize {
    gpbatch::environments::DEFAULT_CENTERS
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    Se { lengthscale: f64 },
    Matern { lengthscale: f64, nu: f64 },
    Linear,
}

impl KernelSpec {
    pub fn build(&self) -> Result<gpbatch::Kernel, HarnessError> {
        use gpbatch::kernels::{Kernel, Smoothness};
        Ok(match *self {
            KernelSpec::Se { lengthscale } => Kernel::squared_exponential(lengthscale)?,
            KernelSpec::Matern { lengthscale, nu } => {
                let s = Smoothness::from_nu(nu)
                    .ok_or_else(|| HarnessError::Config(format!("unsupported Matérn smoothness {nu}")))?;
                Kernel::matern(lengthscale, s)?
            }
            KernelSpec::Linear => Kernel::Linear,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvironmentSpec {
    /// A fresh function per replication on an evenly spaced grid over `[0, 1]`.
    Rkhs {
        kernel: KernelSpec,
        #[serde(default = "default_grid")]
        grid: usize,
        #[serde(default = "default_centers")]
        centers: usize,
        #[serde(default = "default_one")]
        norm: f64,
        #[serde(default = "default_lambda")]
        noise_variance: f64,
    },
    Benchmark {
        name: String,
        #[serde(default = "default_lambda")]
        noise_variance: f64,
    },
    Sensor {
        path: PathBuf,
        target: String,
        #[serde(default = "default_true")]
        has_header: bool,
        #[serde(default)]
        impute_missing: bool,
        #[serde(default)]
        drop_constant: bool,
    },
    /// A serialized environment; a `[kernel]` section is required.
    File { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    SimpleBatch,
    SimpleDelay,
    Sequential,
    Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    pub kind: ScheduleKind,
    #[serde(rename = "M", default)]
    pub m: Option<usize>,
    /// CSV of `S(t)` values for `kind = "table"`.
    #[serde(default)]
    pub path: Option<PathBuf>,
}

impl ScheduleSpec {
    pub fn build(&self) -> Result<gpbatch::FeedbackSchedule, HarnessError> {
        use gpbatch::FeedbackSchedule as F;
        let m = || self.m.ok_or_else(|| HarnessError::Config("schedule needs M".into()));
        Ok(match self.kind {
            ScheduleKind::SimpleBatch => F::simple_batch(m()?)?,
            ScheduleKind::SimpleDelay => F::simple_delay(m()?)?,
            ScheduleKind::Sequential => F::StrictlySequential,
            ScheduleKind::Table => {
                let path = self.path.as_ref().ok_or_else(|| HarnessError::Config("table schedule needs path".into()))?;
                F::table_from_csv(std::fs::File::open(path)?)?
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySpec {
    pub kind: String,
    /// `exact`, `pathwise` or `auto`.
    #[serde(default)]
    pub sampler: Option<String>,
    #[serde(default)]
    pub width_override: Option<f64>,
    /// GP-BUCB width `√(ξ (a B² + b γ ln^p(t/δ)))`.
    #[serde(default)]
    pub norm_coeff: Option<f64>,
    #[serde(default)]
    pub info_coeff: Option<f64>,
    #[serde(default)]
    pub log_power: Option<i32>,
}

/// `B` as a number or `"max_abs"` (the largest `|f|` on the domain).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BoundSpec {
    Value(f64),
    Keyword(String),
}

impl Default for BoundSpec {
    fn default() -> Self {
        BoundSpec::Keyword("max_abs".into())
    }
}

/// `ξ` as `"unit"`, `"theory"` (`exp(2γ_{M−1})`) or a number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum XiSpec {
    Value(f64),
    Keyword(String),
}

impl Default for XiSpec {
    fn default() -> Self {
        XiSpec::Keyword("unit".into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaMode {
    #[default]
    Analytic,
    LogT,
    Greedy,
    GreedyBound,
    BruteForce,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub label: Option<String>,
    pub environment: EnvironmentSpec,
    /// GP kernel; defaults to the environment's own.
    #[serde(default)]
    pub kernel: Option<KernelSpec>,
    pub schedule: ScheduleSpec,
    pub policy: PolicySpec,
    #[serde(rename = "B", default)]
    pub bound: BoundSpec,
    /// Defaults to `√λ`.
    #[serde(rename = "R", default)]
    pub subgaussian: Option<f64>,
    /// Defaults to 0.025, or 5% of the average variance for sensor data.
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub xi_mode: XiSpec,
    #[serde(default)]
    pub gamma_mode: GammaMode,
    #[serde(default = "default_one")]
    pub gamma_constant: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub t_init: usize,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_replications")]
    pub replications: usize,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.horizon == 0 {
            return bad("horizon must be at least 1".into());
        }
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        if gpbatch::PolicyKind::from_name(&self.policy.kind).is_none() {
            return bad(format!("unknown policy {:?}", self.policy.kind));
        }
        if let BoundSpec::Keyword(k) = &self.bound {
            if k != "max_abs" {
                return bad(format!("B must be a number or \"max_abs\", got {k:?}"));
            }
        }
        if let XiSpec::Keyword(k) = &self.xi_mode {
            if k != "unit" && k != "theory" {
                return bad(format!("xi_mode must be \"unit\", \"theory\" or a number, got {k:?}"));
            }
        }
        if matches!(self.environment, EnvironmentSpec::File { .. }) && self.kernel.is_none() {
            return bad("file environments need a [kernel] section".into());
        }
        Ok(())
    }

    /// Name used for output files: the label, or `env_policy_schedule_M`.
    pub fn label(&self) -> String {
        if let Some(l) = &self.label {
            return l.clone();
        }
        format!("{}_{}_{}", self.environment_name(), self.policy.kind, self.schedule_name())
    }

    pub fn environment_name(&self) -> String {
        match &self.environment {
            EnvironmentSpec::Rkhs { kernel, .. } => match kernel {
                KernelSpec::Se { .. } => "rkhs_se".into(),
                KernelSpec::Matern { .. } => "rkhs_matern".into(),
                KernelSpec::Linear => "rkhs_linear".into(),
            },
            EnvironmentSpec::Benchmark { name, .. } => name.clone(),
            EnvironmentSpec::Sensor { target, .. } => target.clone(),
            EnvironmentSpec::File { path } => {
                path.file_stem().map_or_else(|| "file".into(), |s| s.to_string_lossy().into_owned())
            }
        }
    }

    pub fn schedule_name(&self) -> String {
        match self.schedule.kind {
            ScheduleKind::SimpleBatch => "simple_batch",
            ScheduleKind::SimpleDelay => "simple_delay",
            ScheduleKind::Sequential => "sequential",
            ScheduleKind::Table => "table",
        }
        .into()
    }

    /// Batch size as reported in summaries.
    pub fn batch(&self) -> usize {
        match self.schedule.kind {
            ScheduleKind::Sequential => 1,
            _ => self.schedule.m.unwrap_or(0),
        }
    }
}

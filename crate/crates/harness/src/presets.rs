//! Experiment presets for the eight regret panels.
//!
//! Shared settings: `δ = 0.1`, `λ = R² = 0.025`, `ξ = 1`, `M = 5`, `B = max |f|`.
//! RKHS functions live on 100 evenly spaced points of `[0, 1]` with `ℓ = 0.2`
//! (`ν = 2.5` for Matérn). The benchmarks use a 31 × 31 grid with SE `ℓ² = 0.1`.
//! Sensor panels use `λ = 5%` of the average variance and `γ_t = ln t`.
//! Horizon 400 and 25 replications are defaults of this crate.

use std::path::PathBuf;

use crate::config::{
    BoundSpec, EnvironmentSpec, ExperimentConfig, GammaMode, KernelSpec, PolicySpec, ScheduleKind, ScheduleSpec,
    XiSpec,
};

pub const DEFAULT_HORIZON: usize = 400;
pub const DEFAULT_REPLICATIONS: usize = 25;
pub const BATCH: usize = 5;
pub const POLICIES: [&str; 3] = ["igp_bucb", "gp_bucb", "gp_bts"];

#[derive(Debug, Clone, PartialEq)]
pub struct PresetOptions {
    pub horizon: usize,
    pub replications: usize,
    pub seed: u64,
    pub temperature: Option<PathBuf>,
    pub light: Option<PathBuf>,
}

impl Default for PresetOptions {
    fn default() -> Self {
        Self { horizon: DEFAULT_HORIZON, replications: DEFAULT_REPLICATIONS, seed: 0, temperature: None, light: None }
    }
}

fn se() -> KernelSpec {
    KernelSpec::Se { lengthscale: 0.2 }
}

fn matern() -> KernelSpec {
    KernelSpec::Matern { lengthscale: 0.2, nu: 2.5 }
}

fn rkhs(kernel: KernelSpec) -> EnvironmentSpec {
    EnvironmentSpec::Rkhs { kernel, grid: 100, centers: 50, norm: 1.0, noise_variance: 0.025 }
}

fn benchmark(name: &str) -> EnvironmentSpec {
    EnvironmentSpec::Benchmark { name: name.into(), noise_variance: 0.025 }
}

fn sensor(path: PathBuf, target: &str) -> EnvironmentSpec {
    EnvironmentSpec::Sensor { path, target: target.into(), has_header: true, impute_missing: false, drop_constant: true }
}

/// One config for a panel and policy.
pub fn config(
    panel: &str,
    environment: EnvironmentSpec,
    schedule: ScheduleKind,
    policy: &str,
    opts: &PresetOptions,
) -> ExperimentConfig {
    let sensor = matches!(environment, EnvironmentSpec::Sensor { .. });
    let mut cfg = ExperimentConfig {
        label: None,
        environment,
        kernel: None,
        schedule: ScheduleSpec { kind: schedule, m: Some(BATCH), path: None },
        policy: PolicySpec {
            kind: policy.into(),
            sampler: None,
            width_override: None,
            norm_coeff: None,
            info_coeff: None,
            log_power: None,
        },
        bound: BoundSpec::Keyword("max_abs".into()),
        subgaussian: None,
        lambda: if sensor { None } else { Some(0.025) },
        delta: 0.1,
        xi_mode: XiSpec::Keyword("unit".into()),
        gamma_mode: if sensor { GammaMode::LogT } else { GammaMode::Analytic },
        gamma_constant: 1.0,
        seed: opts.seed,
        t_init: 0,
        horizon: opts.horizon,
        replications: opts.replications,
    };
    cfg.label = Some(format!("{panel}_{}_{}_{policy}", cfg.environment_name(), cfg.schedule_name()));
    cfg
}

/// The panels on synthetic environments: RKHS (SE, Matérn) × (batch, delay), Cosines, Rosenbrock.
pub fn synthetic_panels() -> Vec<(&'static str, EnvironmentSpec, ScheduleKind)> {
    vec![
        ("a", rkhs(se()), ScheduleKind::SimpleBatch),
        ("b", rkhs(matern()), ScheduleKind::SimpleBatch),
        ("c", rkhs(se()), ScheduleKind::SimpleDelay),
        ("d", rkhs(matern()), ScheduleKind::SimpleDelay),
        ("e", benchmark("cosines"), ScheduleKind::SimpleBatch),
        ("f", benchmark("rosenbrock"), ScheduleKind::SimpleBatch),
    ]
}

/// Every panel × policy. Sensor panels are included only when their data path is given.
pub fn full_grid(opts: &PresetOptions) -> Vec<ExperimentConfig> {
    let mut panels = synthetic_panels();
    if let Some(p) = &opts.temperature {
        panels.push(("g", sensor(p.clone(), "temperature"), ScheduleKind::SimpleBatch));
    }
    if let Some(p) = &opts.light {
        panels.push(("h", sensor(p.clone(), "light"), ScheduleKind::SimpleBatch));
    }
    panels
        .into_iter()
        .flat_map(|(panel, env, sched)| POLICIES.map(|p| config(panel, env.clone(), sched, p, opts)))
        .collect()
}

pub fn preset(name: &str, opts: &PresetOptions) -> Option<Vec<ExperimentConfig>> {
    match name {
        "full" => Some(full_grid(opts)),
        "synthetic" => Some(
            synthetic_panels()
                .into_iter()
                .flat_map(|(panel, env, sched)| POLICIES.map(|p| config(panel, env.clone(), sched, p, opts)))
                .collect(),
        ),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_grid_shape() {
        let cfgs = full_grid(&PresetOptions::default());
        assert_eq!(cfgs.len(), 18);
        let mut labels: Vec<String> = cfgs.iter().map(|c| c.label()).collect();
        labels.dedup();
        assert_eq!(labels.len(), 18);
        assert_eq!(labels[0], "a_rkhs_se_simple_batch_igp_bucb");
        for c in &cfgs {
            c.validate().unwrap();
            assert_eq!((c.horizon, c.replications, c.delta, c.lambda), (400, 25, 0.1, Some(0.025)));
        }
        let with_sensors = full_grid(&PresetOptions {
            temperature: Some("t.csv".into()),
            light: Some("l.csv".into()),
            ..PresetOptions::default()
        });
        assert_eq!(with_sensors.len(), 24);
        assert_eq!(with_sensors[20].gamma_mode, GammaMode::LogT);
    }
}

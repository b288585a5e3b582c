use std::fs::File;
use std::io::BufReader;

use gpbatch::environments::{
    benchmark_environment, benchmark_kernel, generate_rkhs_function, sensor_environment, Benchmark, SensorTarget,
};
use gpbatch::infogain::{compute_xi, MigMethod, XiM, XiMode};
use gpbatch::kernels::{read_readings, ConstantColumnPolicy, IngestOptions, MissingPolicy};
use gpbatch::policies::{initialize, GpBucbWidth, ThompsonSampler};
use gpbatch::{
    Domain, Environment, FeedbackSchedule, GammaEstimator, Kernel, Policy, PolicyConfig, PolicyKind, Posterior, Round,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::config::{BoundSpec, EnvironmentSpec, ExperimentConfig, GammaMode, XiSpec};
use crate::records::RunRecord;
use crate::HarnessError;

/// Random stream for generating the environment.
pub const ENVIRONMENT_STREAM: u64 = 0;
/// Random stream for observation noise (and initialization rewards).
pub const NOISE_STREAM: u64 = 1;
/// Random stream for the policy's own sampling.
pub const POLICY_STREAM: u64 = 2;

/// Seed of replication `rep`: `seed_base + rep`.
pub fn replication_seed(seed_base: u64, rep: usize) -> u64 {
    seed_base.wrapping_add(rep as u64)
}

/// Independent generator `stream` of `seed`.
pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A failed episode with the records completed before the failure.
#[derive(Debug, Error)]
#[error("round {}: {source}", .records.len() + 1)]
pub struct EpisodeError {
    pub records: Vec<RunRecord>,
    #[source]
    pub source: HarnessError,
}

#[derive(Debug, Clone)]
enum Source {
    Fixed(Environment),
    Rkhs { kernel: Kernel, domain: Domain, norm: f64, centers: usize, noise_variance: f64 },
}

/// A config resolved into everything an episode needs.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    source: Source,
    kernel: Kernel,
    noise: f64,
    schedule: FeedbackSchedule,
    kind: PolicyKind,
    gamma: GammaEstimator,
    xi: XiM<f64>,
}

impl Experiment {
    pub fn prepare(config: &ExperimentConfig) -> Result<Self, HarnessError> {
        Self::prepare_with(config, None)
    }

    /// Like [`Experiment::prepare`] but every replication uses `environment`.
    pub fn prepare_with(config: &ExperimentConfig, environment: Option<Environment>) -> Result<Self, HarnessError> {
        config.validate()?;
        let mut derived_noise = None;
        let (source, env_kernel) = match (&config.environment, environment) {
            (spec, Some(env)) => {
                let k = match spec {
                    EnvironmentSpec::Rkhs { kernel, .. } => Some(kernel.build()?),
                    EnvironmentSpec::Benchmark { .. } => Some(benchmark_kernel()),
                    _ => None,
                };
                (Source::Fixed(env), k)
            }
            (EnvironmentSpec::Rkhs { kernel, grid, centers, norm, noise_variance }, None) => {
                let k = kernel.build()?;
                let domain = Domain::linspace(0.0, 1.0, *grid)?;
                let src = Source::Rkhs {
                    kernel: k.clone(),
                    domain,
                    norm: *norm,
                    centers: *centers,
                    noise_variance: *noise_variance,
                };
                (src, Some(k))
            }
            (EnvironmentSpec::Benchmark { name, noise_variance }, None) => {
                let env = benchmark_environment(Benchmark::from_name(name)?, *noise_variance)?;
                (Source::Fixed(env), Some(benchmark_kernel()))
            }
            (EnvironmentSpec::Sensor { path, target, has_header, impute_missing, drop_constant }, None) => {
                let target = SensorTarget::from_name(target)
                    .ok_or_else(|| HarnessError::Config(format!("unknown sensor target {target:?}")))?;
                let opts = IngestOptions {
                    has_header: *has_header,
                    missing: if *impute_missing { MissingPolicy::ImputeColumnMean } else { MissingPolicy::DropRow },
                    constant_columns: if *drop_constant { ConstantColumnPolicy::Drop } else { ConstantColumnPolicy::Reject },
                };
                let readings = read_readings(BufReader::new(File::open(path)?), &opts)?;
                let s = sensor_environment(readings, target, opts.constant_columns)?;
                derived_noise = Some(s.noise);
                (Source::Fixed(s.environment), Some(s.kernel))
            }
            (EnvironmentSpec::File { path }, None) => {
                let env = Environment::read_csv(config.environment_name(), BufReader::new(File::open(path)?))?;
                (Source::Fixed(env), None)
            }
        };
        let kernel = match (&config.kernel, env_kernel) {
            (Some(spec), _) => spec.build()?,
            (None, Some(k)) => k,
            (None, None) => return Err(HarnessError::Config("no kernel for this environment".into())),
        };
        let noise = config.lambda.or(derived_noise).unwrap_or(0.025);
        let schedule = config.schedule.build()?;
        let kind = PolicyKind::from_name(&config.policy.kind)
            .ok_or_else(|| HarnessError::Config(format!("unknown policy {:?}", config.policy.kind)))?;
        let domain = match &source {
            Source::Fixed(env) => env.domain().clone(),
            Source::Rkhs { domain, .. } => domain.clone(),
        };
        let table = |m| GammaEstimator::tabulate(m, &kernel, &domain, config.horizon, noise);
        let gamma = match config.gamma_mode {
            GammaMode::Analytic => GammaEstimator::analytic_for(&kernel, domain.dim(), config.gamma_constant)?,
            GammaMode::LogT => GammaEstimator::LogT,
            GammaMode::Greedy => table(MigMethod::Greedy)?,
            GammaMode::GreedyBound => table(MigMethod::GreedyBound)?,
            GammaMode::BruteForce => table(MigMethod::BruteForce)?,
        };
        let batch = schedule.batch_bound();
        let xi = match &config.xi_mode {
            XiSpec::Value(v) => XiM::custom(batch, *v),
            XiSpec::Keyword(k) if k == "theory" => compute_xi(batch, &gamma, XiMode::Theory)?,
            XiSpec::Keyword(_) => XiM::unit(batch),
        };
        Ok(Self { config: config.clone(), source, kernel, noise, schedule, kind, gamma, xi })
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    /// `λ` used by the GP.
    pub fn noise(&self) -> f64 {
        self.noise
    }

    pub fn schedule(&self) -> &FeedbackSchedule {
        &self.schedule
    }

    pub fn gamma(&self) -> &GammaEstimator {
        &self.gamma
    }

    pub fn xi(&self) -> &XiM<f64> {
        &self.xi
    }

    /// The environment of replication `rep`.
    pub fn environment(&self, rep: usize) -> Result<Environment, HarnessError> {
        match &self.source {
            Source::Fixed(env) => Ok(env.clone()),
            Source::Rkhs { kernel, domain, norm, centers, noise_variance } => {
                let seed = replication_seed(self.config.seed, rep);
                let mut rng = stream(seed, ENVIRONMENT_STREAM);
                let (env, _) = generate_rkhs_function(kernel, domain, *norm, *centers, *noise_variance, &mut rng)?;
                Ok(env)
            }
        }
    }

    /// Policy settings for `env`; `B = max |f|` under `"max_abs"`.
    pub fn policy_config(&self, env: &Environment) -> Result<PolicyConfig, HarnessError> {
        let c = &self.config;
        let bound = match c.bound {
            BoundSpec::Value(b) => b,
            BoundSpec::Keyword(_) => env.truth().iter().fold(0.0f64, |m, v| m.max(v.abs())),
        };
        let mut p = PolicyConfig::new(bound);
        p.noise = self.noise;
        p.subgaussian = c.subgaussian.unwrap_or(self.noise.sqrt());
        p.delta = c.delta;
        p.xi = self.xi;
        p.gamma = self.gamma.clone();
        p.width_override = c.policy.width_override;
        if let Some(name) = &c.policy.sampler {
            p.sampler = ThompsonSampler::from_name(name)
                .ok_or_else(|| HarnessError::Config(format!("unknown sampler {name:?}")))?;
        }
        let d = GpBucbWidth::default();
        p.gp_bucb = GpBucbWidth {
            norm_coeff: c.policy.norm_coeff.unwrap_or(d.norm_coeff),
            info_coeff: c.policy.info_coeff.unwrap_or(d.info_coeff),
            log_power: c.policy.log_power.unwrap_or(d.log_power),
        };
        Ok(p)
    }

    /// Runs replication `rep` for `horizon` rounds.
    pub fn run(&self, rep: usize) -> Result<Vec<RunRecord>, EpisodeError> {
        let env = self.environment(rep).map_err(|source| EpisodeError { records: Vec::new(), source })?;
        self.run_on(&env, rep)
    }

    /// Runs replication `rep` on a given environment.
    pub fn run_on(&self, env: &Environment, rep: usize) -> Result<Vec<RunRecord>, EpisodeError> {
        let mut records = Vec::with_capacity(self.config.horizon);
        match self.episode(env, rep, &mut records) {
            Ok(()) => Ok(records),
            Err(source) => Err(EpisodeError { records, source }),
        }
    }

    fn episode(&self, env: &Environment, rep: usize, records: &mut Vec<RunRecord>) -> Result<(), HarnessError> {
        let seed = replication_seed(self.config.seed, rep);
        let domain = env.domain().clone();
        let mut state = Posterior::tracking(self.kernel.clone(), self.noise, domain.clone())?;
        let mut noise_rng = stream(seed, NOISE_STREAM);
        initialize(&mut state, &domain, self.config.t_init, |i| env.observe(i, &mut noise_rng))?;
        let mut policy = Policy::with_rng(self.kind, self.policy_config(env)?, stream(seed, POLICY_STREAM))?;

        let mut rewards = Vec::with_capacity(self.config.horizon);
        let mut revealed = 0;
        let mut cumulative = 0.0;
        for t in 1..=self.config.horizon {
            let s = self.schedule.feedback_index(t)?;
            if s > revealed {
                state.ingest_rewards(&rewards[revealed..s])?;
                revealed = s;
            }
            let sel = policy.select(&state, Round::new(t, s), &domain)?;
            let y = env.observe(sel.index, &mut noise_rng);
            state.condition_on_candidate(sel.index)?;
            rewards.push(y);
            let r = env.regret(sel.index);
            cumulative += r;
            records.push(RunRecord {
                t,
                x_index: sel.index,
                f_xt: env.truth()[sel.index],
                y_t: y,
                r_t: r,
                cumulative_regret: cumulative,
                average_regret: cumulative / t as f64,
                width: sel.width,
            });
        }
        Ok(())
    }
}

/// Prepares `config` and runs one replication.
pub fn run_episode(config: &ExperimentConfig, rep: usize) -> Result<Vec<RunRecord>, EpisodeError> {
    let exp = Experiment::prepare(config).map_err(|source| EpisodeError { records: Vec::new(), source })?;
    exp.run(rep)
}

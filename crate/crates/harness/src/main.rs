use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gpbatch::infogain::{GammaEstimator, MigMethod};
use gpbatch::{Domain, Environment};
use gpbatch_harness::config::KernelSpec;
use gpbatch_harness::presets::{preset, PresetOptions};
use gpbatch_harness::records::write_records;
use gpbatch_harness::{run_grid, write_grid, Experiment, ExperimentConfig, HarnessError};

#[derive(Parser)]
#[command(name = "gpbatch", version, about = "Batch GP bandit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every replication of one config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Run replications one after another.
        #[arg(long)]
        serial: bool,
    },
    /// Run a preset or several configs and write per-run CSVs, a summary and a plot script.
    Grid {
        /// `full` or `synthetic`.
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
        #[arg(long)]
        config: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        replications: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Temperature readings CSV for the sensor panel.
        #[arg(long)]
        temperature: Option<PathBuf>,
        /// Light readings CSV for the sensor panel.
        #[arg(long)]
        light: Option<PathBuf>,
        #[arg(long)]
        serial: bool,
    },
    /// Print a table of γ_t estimates.
    Mig {
        #[arg(long, value_enum, default_value_t = KernelArg::Se)]
        kernel: KernelArg,
        #[arg(long, default_value_t = 0.2)]
        lengthscale: f64,
        #[arg(long, default_value_t = 2.5)]
        nu: f64,
        /// Points per axis of the grid over [0, 1]^dim.
        #[arg(long, default_value_t = 100)]
        grid: usize,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, value_enum, default_value_t = MethodArg::Greedy)]
        method: MethodArg,
        #[arg(long, default_value_t = 50)]
        max_t: usize,
        #[arg(long, default_value_t = 0.025)]
        lambda: f64,
    },
    /// Write the environment of one replication as CSV.
    GenEnv {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        replication: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one replication of a config against a serialized environment.
    Replay {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        env: PathBuf,
        #[arg(long, default_value_t = 0)]
        replication: usize,
        /// Output CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Se,
    Matern,
    Linear,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    BruteForce,
    Greedy,
    GreedyBound,
    Analytic,
    LogT,
}

fn load_config(path: &PathBuf) -> Result<ExperimentConfig, HarnessError> {
    ExperimentConfig::from_toml(&fs::read_to_string(path)?)
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Run { config, out, serial } => {
            let cfg = load_config(&config)?;
            let results = run_grid(std::slice::from_ref(&cfg), !serial);
            write_grid(&results, &out)?;
            report(&results);
        }
        Command::Grid { preset: name, config, out, horizon, replications, seed, temperature, light, serial } => {
            let configs = match name {
                Some(name) => {
                    let opts = PresetOptions {
                        horizon: horizon.unwrap_or(gpbatch_harness::presets::DEFAULT_HORIZON),
                        replications: replications.unwrap_or(gpbatch_harness::presets::DEFAULT_REPLICATIONS),
                        seed,
                        temperature,
                        light,
                    };
                    preset(&name, &opts).ok_or_else(|| HarnessError::Config(format!("unknown preset {name:?}")))?
                }
                None => {
                    let mut cfgs = config.iter().map(load_config).collect::<Result<Vec<_>, _>>()?;
                    for c in &mut cfgs {
                        c.horizon = horizon.unwrap_or(c.horizon);
                        c.replications = replications.unwrap_or(c.replications);
                    }
                    cfgs
                }
            };
            if configs.is_empty() {
                return Err(HarnessError::Config("no configs given".into()));
            }
            let results = run_grid(&configs, !serial);
            write_grid(&results, &out)?;
            report(&results);
        }
        Command::Mig { kernel, lengthscale, nu, grid, dim, method, max_t, lambda } => {
            let spec = match kernel {
                KernelArg::Se => KernelSpec::Se { lengthscale },
                KernelArg::Matern => KernelSpec::Matern { lengthscale, nu },
                KernelArg::Linear => KernelSpec::Linear,
            };
            let k = spec.build()?;
            let domain = Domain::grid(0.0, 1.0, grid, dim)?;
            let gamma = match method {
                MethodArg::BruteForce => GammaEstimator::tabulate(MigMethod::BruteForce, &k, &domain, max_t, lambda)?,
                MethodArg::Greedy => GammaEstimator::tabulate(MigMethod::Greedy, &k, &domain, max_t, lambda)?,
                MethodArg::GreedyBound => {
                    GammaEstimator::tabulate(MigMethod::GreedyBound, &k, &domain, max_t, lambda)?
                }
                MethodArg::Analytic => GammaEstimator::analytic_for(&k, dim, 1.0)?,
                MethodArg::LogT => GammaEstimator::LogT,
            };
            let mut w = csv::Writer::from_writer(io::stdout().lock());
            w.write_record(["t", "gamma", "method"])?;
            for t in 0..=max_t {
                w.write_record([t.to_string(), gamma.gamma(t)?.to_string(), gamma.method().name().to_string()])?;
            }
            w.flush()?;
        }
        Command::GenEnv { config, replication, out } => {
            let exp = Experiment::prepare(&load_config(&config)?)?;
            let env = exp.environment(replication)?;
            env.write_csv(BufWriter::new(File::create(&out)?))?;
            eprintln!("wrote {} candidates to {}", env.domain().len(), out.display());
        }
        Command::Replay { config, env, replication, out } => {
            let cfg = load_config(&config)?;
            let environment = Environment::read_csv(cfg.environment_name(), BufReader::new(File::open(&env)?))?;
            let exp = Experiment::prepare_with(&cfg, Some(environment.clone()))?;
            let result = exp.run_on(&environment, replication);
            let records = match &result {
                Ok(r) => r.as_slice(),
                Err(e) => e.records.as_slice(),
            };
            match &out {
                Some(path) => write_records(records, BufWriter::new(File::create(path)?))?,
                None => write_records(records, io::stdout().lock())?,
            }
            if let Err(e) = result {
                return Err(e.source);
            }
        }
    }
    Ok(())
}

fn report(results: &[gpbatch_harness::ConfigResult]) {
    let mut err = io::stderr().lock();
    for res in results {
        let done: Vec<f64> = res.completed().filter_map(|r| r.records.last().map(|x| x.average_regret)).collect();
        let failed = res.runs.len() - done.len();
        let _ = writeln!(
            err,
            "{}: {} runs, mean R_T/T = {:.5}{}",
            res.label(),
            done.len(),
            gpbatch_harness::stats::mean(&done),
            if failed > 0 { format!(", {failed} failed") } else { String::new() }
        );
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

//! Experiment driver for batch GP bandit policies: configs, episodes, replication
//! grids, CSV logs and summary statistics.

pub mod config;
pub mod episode;
pub mod grid;
pub mod plot;
pub mod presets;
pub mod records;
pub mod stats;

use thiserror::Error;

pub use config::ExperimentConfig;
pub use episode::{run_episode, EpisodeError, Experiment};
pub use grid::{run_grid, write_grid, ConfigResult};
pub use records::{RunRecord, SummaryRow};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Kernel(#[from] gpbatch::KernelError),
    #[error(transparent)]
    Domain(#[from] gpbatch::DomainError),
    #[error(transparent)]
    Gp(#[from] gpbatch::GpError),
    #[error(transparent)]
    InfoGain(#[from] gpbatch::InfoGainError),
    #[error(transparent)]
    Schedule(#[from] gpbatch::ScheduleError),
    #[error(transparent)]
    Policy(#[from] gpbatch::PolicyError),
    #[error(transparent)]
    Environment(#[from] gpbatch::EnvironmentError),
}

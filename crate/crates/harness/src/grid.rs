use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::episode::Experiment;
use crate::plot::write_plot_script;
use crate::records::{summarize, write_records, write_summary, RunRecord, SummaryRow};
use crate::HarnessError;

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub replication: usize,
    /// Completed rounds; all `horizon` of them unless `error` is set.
    pub records: Vec<RunRecord>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ConfigResult {
    pub config: ExperimentConfig,
    pub runs: Vec<RunOutcome>,
}

impl ConfigResult {
    pub fn label(&self) -> String {
        self.config.label()
    }

    pub fn completed(&self) -> impl Iterator<Item = &RunOutcome> {
        self.runs.iter().filter(|r| r.error.is_none())
    }

    /// Per-round mean and standard error of `R_t/t` over completed runs.
    pub fn summary(&self) -> Vec<SummaryRow> {
        let runs: Vec<&[RunRecord]> = self.completed().map(|r| r.records.as_slice()).collect();
        if runs.is_empty() {
            return Vec::new();
        }
        summarize(&runs)
            .into_iter()
            .map(|(t, m, se)| SummaryRow {
                t,
                mean_avg_regret: m,
                stderr: se,
                policy: self.config.policy.kind.clone(),
                env: self.config.environment_name(),
                schedule: self.config.schedule_name(),
                m: self.config.batch(),
            })
            .collect()
    }
}

/// Runs every replication of every config. Failures are recorded, not propagated.
/// Output does not depend on `parallel`.
pub fn run_grid(configs: &[ExperimentConfig], parallel: bool) -> Vec<ConfigResult> {
    let prepared: Vec<Result<Experiment, String>> = if parallel {
        configs.par_iter().map(|c| Experiment::prepare(c).map_err(|e| e.to_string())).collect()
    } else {
        configs.iter().map(|c| Experiment::prepare(c).map_err(|e| e.to_string())).collect()
    };
    let jobs: Vec<(usize, usize)> = configs
        .iter()
        .enumerate()
        .flat_map(|(i, c)| (0..c.replications).map(move |rep| (i, rep)))
        .collect();
    let run = |&(i, rep): &(usize, usize)| match &prepared[i] {
        Err(e) => RunOutcome { replication: rep, records: Vec::new(), error: Some(e.clone()) },
        Ok(exp) => match exp.run(rep) {
            Ok(records) => RunOutcome { replication: rep, records, error: None },
            Err(e) => RunOutcome { replication: rep, error: Some(e.to_string()), records: e.records },
        },
    };
    let outcomes: Vec<RunOutcome> = if parallel { jobs.par_iter().map(run).collect() } else { jobs.iter().map(run).collect() };

    let mut results: Vec<ConfigResult> =
        configs.iter().map(|c| ConfigResult { config: c.clone(), runs: Vec::new() }).collect();
    for ((i, _), outcome) in jobs.into_iter().zip(outcomes) {
        results[i].runs.push(outcome);
    }
    results
}

/// Writes `<label>/run_<rep>.csv` per replication, `summary.csv`, `failures.csv` and the plot script.
pub fn write_grid(results: &[ConfigResult], dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir)?;
    let mut summary = Vec::new();
    let mut failures = csv::Writer::from_path(dir.join("failures.csv"))?;
    failures.write_record(["label", "replication", "completed_rounds", "error"])?;
    for res in results {
        let sub = dir.join(res.label());
        fs::create_dir_all(&sub)?;
        for run in &res.runs {
            let file = BufWriter::new(File::create(sub.join(format!("run_{:03}.csv", run.replication)))?);
            write_records(&run.records, file)?;
            if let Some(err) = &run.error {
                failures.write_record([
                    res.label(),
                    run.replication.to_string(),
                    run.records.len().to_string(),
                    err.clone(),
                ])?;
            }
        }
        summary.extend(res.summary());
    }
    failures.flush()?;
    write_summary(&summary, BufWriter::new(File::create(dir.join("summary.csv"))?))?;
    write_plot_script(&dir.join("plot_regret.py"))?;
    Ok(())
}

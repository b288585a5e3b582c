use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::stats::{mean, standard_error};
use crate::HarnessError;

/// One round of an episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub t: usize,
    pub x_index: usize,
    /// `f(x_t)`.
    pub f_xt: f64,
    /// Noisy reward of round `t`, revealed to the policy once `S(t') ≥ t`.
    pub y_t: f64,
    /// `f(x*) − f(x_t)`.
    pub r_t: f64,
    #[serde(rename = "R_t")]
    pub cumulative_regret: f64,
    #[serde(rename = "R_t_over_t")]
    pub average_regret: f64,
    /// Width multiplying `σ` in this round.
    pub width: f64,
}

pub fn write_records<W: Write>(records: &[RunRecord], writer: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(writer);
    if records.is_empty() {
        w.write_record(["t", "x_index", "f_xt", "y_t", "r_t", "R_t", "R_t_over_t", "width"])?;
    }
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<R: Read>(reader: R) -> Result<Vec<RunRecord>, HarnessError> {
    csv::Reader::from_reader(reader)
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(HarnessError::from)
}

/// Mean and standard error of `R_t / t` across replications, per round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub t: usize,
    pub mean_avg_regret: f64,
    pub stderr: f64,
    pub policy: String,
    pub env: String,
    pub schedule: String,
    #[serde(rename = "M")]
    pub m: usize,
}

/// Aggregates runs round by round over their common length.
pub fn summarize(runs: &[&[RunRecord]]) -> Vec<(usize, f64, f64)> {
    let len = runs.iter().map(|r| r.len()).min().unwrap_or(0);
    (0..len)
        .map(|i| {
            let v: Vec<f64> = runs.iter().map(|r| r[i].average_regret).collect();
            (runs[0][i].t, mean(&v), standard_error(&v))
        })
        .collect()
}

pub fn write_summary<W: Write>(rows: &[SummaryRow], writer: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(writer);
    if rows.is_empty() {
        w.write_record(["t", "mean_avg_regret", "stderr", "policy", "env", "schedule", "M"])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_summary<R: Read>(reader: R) -> Result<Vec<SummaryRow>, HarnessError> {
    csv::Reader::from_reader(reader)
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(HarnessError::from)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(t: usize, r: f64, cum: f64) -> RunRecord {
        RunRecord {
            t,
            x_index: t * 3,
            f_xt: 0.1 / 3.0,
            y_t: -1e-17,
            r_t: r,
            cumulative_regret: cum,
            average_regret: cum / t as f64,
            width: 2.0f64.sqrt(),
        }
    }

    #[test]
    fn csv_round_trip() {
        let rs = vec![rec(1, 0.5, 0.5), rec(2, 1.0 / 7.0, 0.5 + 1.0 / 7.0)];
        let mut buf = Vec::new();
        write_records(&rs, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,x_index,f_xt,y_t,r_t,R_t,R_t_over_t,width\n"));
        assert_eq!(read_records(buf.as_slice()).unwrap(), rs);
    }

    #[test]
    fn summary_of_one_run_is_that_run() {
        let rs = vec![rec(1, 0.5, 0.5), rec(2, 0.25, 0.75)];
        let s = summarize(&[&rs]);
        assert_eq!(s, vec![(1, 0.5, 0.0), (2, 0.375, 0.0)]);
    }

    #[test]
    fn summary_round_trip() {
        let rows = vec![SummaryRow {
            t: 1,
            mean_avg_regret: 0.3,
            stderr: 0.01,
            policy: "igp_bucb".into(),
            env: "cosines".into(),
            schedule: "simple_batch".into(),
            m: 5,
        }];
        let mut buf = Vec::new();
        write_summary(&rows, &mut buf).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("t,mean_avg_regret,stderr,policy,env,schedule,M\n"));
        assert_eq!(read_summary(buf.as_slice()).unwrap(), rows);
    }
}

//! Feedback schedules: `S(t)`, the latest round whose reward is known when round `t` is chosen.
//!
//! Every schedule satisfies `S(t) ≤ t − 1`, `t − S(t) ≤ M` and `S` non-decreasing.

use std::io::Read;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("rounds are numbered from 1")]
    ZeroRound,
    #[error("batch bound must be at least 1")]
    ZeroBatch,
    #[error("schedule table covers rounds 1..={len}, asked for round {t}")]
    BeyondTable { t: usize, len: usize },
    #[error("schedule table row {row}: {msg}")]
    InvalidTable { row: usize, msg: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeedbackSchedule {
    /// `S(t) = M ⌊(t − 1) / M⌋`: rewards arrive in blocks of `M`.
    SimpleBatch { batch: usize },
    /// `S(t) = max(t − M, 0)`: every reward arrives `M` rounds late.
    SimpleDelay { delay: usize },
    /// `S(t) = t − 1`.
    StrictlySequential,
    /// Explicit `S(1), S(2), …` with its batch bound.
    Table { values: Arc<[usize]>, batch: usize },
}

impl FeedbackSchedule {
    pub fn simple_batch(batch: usize) -> Result<Self, ScheduleError> {
        if batch == 0 {
            return Err(ScheduleError::ZeroBatch);
        }
        Ok(Self::SimpleBatch { batch })
    }

    pub fn simple_delay(delay: usize) -> Result<Self, ScheduleError> {
        if delay == 0 {
            return Err(ScheduleError::ZeroBatch);
        }
        Ok(Self::SimpleDelay { delay })
    }

    /// Validates a table of `S(1..=n)` and derives `M = max_t (t − S(t))`.
    pub fn table(values: Vec<usize>) -> Result<Self, ScheduleError> {
        let mut batch = 1;
        let mut prev = 0;
        for (i, &s) in values.iter().enumerate() {
            let t = i + 1;
            let bad = |msg: String| ScheduleError::InvalidTable { row: t, msg };
            if s > t - 1 {
                return Err(bad(format!("S({t}) = {s} exceeds t - 1")));
            }
            if s < prev {
                return Err(bad(format!("S({t}) = {s} decreases from {prev}")));
            }
            prev = s;
            batch = batch.max(t - s);
        }
        Ok(Self::Table { values: values.into(), batch })
    }

    /// Reads a two-column `t,S(t)` CSV; a header row is skipped if present.
    pub fn table_from_csv<R: Read>(reader: R) -> Result<Self, ScheduleError> {
        let mut csv = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
        let mut values = Vec::new();
        for (row, record) in csv.records().enumerate() {
            let bad = |msg: String| ScheduleError::InvalidTable { row: row + 1, msg };
            let record = record.map_err(|e| bad(e.to_string()))?;
            if record.len() != 2 {
                return Err(bad(format!("expected 2 columns, got {}", record.len())));
            }
            let (Ok(t), Ok(s)) = (record[0].parse::<usize>(), record[1].parse::<usize>()) else {
                if row == 0 {
                    continue;
                }
                return Err(bad(format!("unparseable row {:?}", record)));
            };
            if t != values.len() + 1 {
                return Err(bad(format!("expected round {}, got {t}", values.len() + 1)));
            }
            values.push(s);
        }
        Self::table(values)
    }

    /// The batch bound `M`.
    pub fn batch_bound(&self) -> usize {
        match self {
            Self::SimpleBatch { batch } | Self::Table { batch, .. } => *batch,
            Self::SimpleDelay { delay } => *delay,
            Self::StrictlySequential => 1,
        }
    }

    pub fn feedback_index(&self, t: usize) -> Result<usize, ScheduleError> {
        if t == 0 {
            return Err(ScheduleError::ZeroRound);
        }
        Ok(match self {
            Self::SimpleBatch { batch } => batch * ((t - 1) / batch),
            Self::SimpleDelay { delay } => t.saturating_sub(*delay),
            Self::StrictlySequential => t - 1,
            Self::Table { values, .. } => {
                *values.get(t - 1).ok_or(ScheduleError::BeyondTable { t, len: values.len() })?
            }
        })
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::SimpleBatch { .. } => "simple_batch",
            Self::SimpleDelay { .. } => "simple_delay",
            Self::StrictlySequential => "sequential",
            Self::Table { .. } => "table",
        }
    }
}

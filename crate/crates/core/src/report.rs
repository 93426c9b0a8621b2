//! Run artifacts: one JSON report per run and an aggregate CSV across runs.
//!
//! Slots are 1-based in both formats.

use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselines::{BaselineResult, Scheme};
use crate::links::{RateAllocation, Schedule};
use crate::scheduler::{IterationRecord, SchedulerConfig, SchedulerStats};
use crate::{Error, Result};

/// Bumped whenever a report or aggregate column changes meaning.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Header of the aggregate CSV.
pub const AGGREGATE_COLUMNS: [&str; 9] = [
    "seed",
    "alpha",
    "scheme",
    "energy_j",
    "iterations_s1",
    "iterations_s2",
    "subproblems",
    "feasible",
    "wall_ms",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub scheme: Scheme,
    /// Generator seed, when the scenario was generated.
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub config: SchedulerConfig,
    pub feasible: bool,
    /// `None` when infeasible.
    pub energy_joules: Option<f64>,
    pub notes: Vec<String>,
    pub stats: Option<SchedulerStats>,
    /// Active links as `[tx, rx, slot]`.
    pub schedule: Vec<[usize; 3]>,
    /// Nonzero rates as `[tx, rx, slot, bits/s]`.
    pub rates: Vec<(usize, usize, usize, f64)>,
    pub per_iteration: Vec<IterationRecord>,
    pub wall_ms: u128,
}

impl RunReport {
    pub fn new(
        result: &BaselineResult,
        config: &SchedulerConfig,
        seed: Option<u64>,
        alpha: Option<f64>,
        wall_ms: u128,
    ) -> Self {
        RunReport {
            schema_version: REPORT_SCHEMA_VERSION,
            scheme: result.scheme,
            seed,
            alpha,
            config: *config,
            feasible: result.feasible,
            energy_joules: result.energy_j.is_finite().then_some(result.energy_j),
            notes: result.notes.clone(),
            stats: result.stats.clone(),
            schedule: result.schedule.as_ref().map(schedule_triples).unwrap_or_default(),
            rates: result.rates.as_ref().map(rate_triples).unwrap_or_default(),
            per_iteration: result.stats.as_ref().map(|s| s.per_iteration.clone()).unwrap_or_default(),
            wall_ms,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn aggregate_row(&self) -> AggregateRow {
        AggregateRow {
            seed: self.seed,
            alpha: self.alpha,
            scheme: self.scheme.name().to_string(),
            energy_j: self.energy_joules,
            iterations_s1: self.stats.as_ref().map(|s| s.s1),
            iterations_s2: self.stats.as_ref().map(|s| s.s2),
            subproblems: self.stats.as_ref().map(|s| s.subproblems),
            feasible: self.feasible,
            wall_ms: self.wall_ms,
        }
    }
}

pub fn schedule_triples(schedule: &Schedule) -> Vec<[usize; 3]> {
    schedule.active_links().map(|l| [l.tx, l.rx, l.slot + 1]).collect()
}

pub fn rate_triples(rates: &RateAllocation) -> Vec<(usize, usize, usize, f64)> {
    rates.nonzero().map(|(l, r)| (l.tx, l.rx, l.slot + 1, r)).collect()
}

/// One line of the aggregate CSV. Empty cells mean "not applicable".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub scheme: String,
    pub energy_j: Option<f64>,
    pub iterations_s1: Option<usize>,
    pub iterations_s2: Option<usize>,
    pub subproblems: Option<usize>,
    pub feasible: bool,
    pub wall_ms: u128,
}

/// Appends rows to `path`, writing the header only when the file is new or
/// empty. An existing file with a different header is refused.
pub fn append_aggregate(path: &Path, rows: &[AggregateRow]) -> Result<()> {
    let existing = match std::fs::File::open(path) {
        Ok(f) => BufReader::new(f).lines().next().transpose()?,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
        Err(e) => return Err(e.into()),
    };
    let header = AGGREGATE_COLUMNS.join(",");
    if let Some(first) = &existing {
        if first.trim_end() != header {
            return Err(Error::Validation(format!(
                "{} has header `{first}`, expected `{header}`",
                path.display()
            )));
        }
    }
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(existing.is_none())
        .from_writer(file);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads every row of an aggregate CSV.
pub fn read_aggregate(path: &Path) -> Result<Vec<AggregateRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Writes the aggregate rows to any writer, with a header.
pub fn write_aggregate<W: Write>(out: W, rows: &[AggregateRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

//! CSV persistence.
//!
//! `regret.csv` is long format, one row per (policy, replication, round):
//! `problem,policy,replication,round,cum_regret` with 1-based rounds.
//! `summary.csv` holds one row per (policy, replication) with the final
//! cumulative regret: `problem,policy,replication,final_regret`.
//! Floats use the shortest representation that parses back exactly.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ExperimentResult, ReplicationResult};
use crate::error::{Error, Result};
use crate::model::RegretTrace;
use crate::policies::Diagnostics;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub problem: String,
    pub policy: String,
    pub replication: usize,
    pub final_regret: f64,
}

#[derive(Debug, Deserialize)]
struct RegretRow {
    problem: String,
    policy: String,
    replication: usize,
    round: usize,
    cum_regret: f64,
}

fn csv_err(path: &Path, source: csv::Error) -> Error {
    Error::Csv {
        context: path.display().to_string(),
        source,
    }
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        context: path.display().to_string(),
        source,
    }
}

fn create(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

fn finish(path: &Path, w: csv::Writer<BufWriter<File>>) -> Result<()> {
    let mut inner = w.into_inner().map_err(|e| io_err(path, e.into_error()))?;
    inner.flush().map_err(|e| io_err(path, e))
}

/// Writes the long-format regret table.
pub fn write_regret_csv(result: &ExperimentResult, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    w.write_record(["problem", "policy", "replication", "round", "cum_regret"])
        .map_err(|e| csv_err(path, e))?;
    let mut buf = [String::new(), String::new(), String::new()];
    for run in &result.runs {
        buf[0] = run.replication.to_string();
        for (t, c) in run.trace.cumulative().iter().enumerate() {
            buf[1] = (t + 1).to_string();
            buf[2] = c.to_string();
            w.write_record([
                result.problem.as_str(),
                run.policy.as_str(),
                &buf[0],
                &buf[1],
                &buf[2],
            ])
            .map_err(|e| csv_err(path, e))?;
        }
    }
    finish(path, w)
}

/// Reads a table written by [`write_regret_csv`]. Rows of one
/// (policy, replication) must be contiguous and in round order.
pub fn read_regret_csv(path: &Path) -> Result<ExperimentResult> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut problem: Option<String> = None;
    let mut runs: Vec<ReplicationResult> = Vec::new();
    let mut current: Option<(String, usize, Vec<f64>)> = None;
    let bad = |msg: String| Error::InvalidArgument(format!("{}: {msg}", path.display()));
    let flush = |cur: Option<(String, usize, Vec<f64>)>, runs: &mut Vec<ReplicationResult>| {
        if let Some((policy, replication, cum)) = cur {
            runs.push(ReplicationResult {
                policy,
                replication,
                decisions: 0,
                diagnostics: Diagnostics::new(),
                trace: RegretTrace::from_cumulative(cum),
            });
        }
    };
    for row in r.deserialize() {
        let row: RegretRow = row.map_err(|e| csv_err(path, e))?;
        match &problem {
            None => problem = Some(row.problem.clone()),
            Some(p) if *p != row.problem => {
                return Err(bad(format!("mixed problems {p} and {}", row.problem)))
            }
            _ => {}
        }
        let same =
            matches!(&current, Some((p, rep, _)) if *p == row.policy && *rep == row.replication);
        if !same {
            flush(current.take(), &mut runs);
            current = Some((row.policy.clone(), row.replication, Vec::new()));
        }
        let (_, _, cum) = current.as_mut().expect("set above");
        if row.round != cum.len() + 1 {
            return Err(bad(format!(
                "{} replication {}: round {} out of order",
                row.policy, row.replication, row.round
            )));
        }
        cum.push(row.cum_regret);
    }
    flush(current, &mut runs);
    let horizon = runs.first().map_or(0, |r| r.trace.len());
    if runs.iter().any(|r| r.trace.len() != horizon) {
        return Err(bad("traces have different lengths".into()));
    }
    Ok(ExperimentResult {
        problem: problem.unwrap_or_default(),
        horizon,
        runs,
    })
}

pub fn write_summary_csv(rows: &[SummaryRow], path: &Path) -> Result<()> {
    let mut w = create(path)?;
    w.write_record(["problem", "policy", "replication", "final_regret"])
        .map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.write_record([
            row.problem.clone(),
            row.policy.clone(),
            row.replication.to_string(),
            row.final_regret.to_string(),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    finish(path, w)
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    r.deserialize()
        .map(|row| row.map_err(|e| csv_err(path, e)))
        .collect()
}

/// Mean and sample standard deviation of final regret per policy.
pub fn summarise(rows: &[SummaryRow]) -> BTreeMap<String, (f64, f64)> {
    let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in rows {
        groups
            .entry(r.policy.clone())
            .or_default()
            .push(r.final_regret);
    }
    groups
        .into_iter()
        .map(|(p, v)| {
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let var = if v.len() > 1 {
                v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            (p, (mean, var.sqrt()))
        })
        .collect()
}

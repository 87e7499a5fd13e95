//! Experiment plumbing behind the `monoidal` binary: one record per trained
//! arm, the fixed arm list of the results table, and CSV output.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use monoidal_core::data::Mnist;
use monoidal_core::model::{train, Method, SplitData, TrainConfig, TrainRun};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const CSV_HEADER: &str = "method,dim,seed,test_accuracy_pct,selected_epoch,wall_seconds";
pub const SUMMARY_HEADER: &str = "method,dim,runs,mean_test_accuracy_pct,std_test_accuracy_pct";

pub const EXIT_PROPERTY: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("data: {0}")]
    Data(String),
    #[error("property check failed: {0}")]
    Property(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Property(_) | CliError::Runtime(_) => EXIT_PROPERTY,
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

/// One completed arm, as written to the results CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub method: Method,
    pub dim: usize,
    pub seed: u64,
    pub test_accuracy_pct: f64,
    pub selected_epoch: usize,
    pub wall_seconds: f64,
}

impl ExperimentRecord {
    pub fn from_run(run: &TrainRun, dim: usize, wall_seconds: f64) -> Self {
        Self {
            method: run.config.method,
            dim,
            seed: run.config.seed,
            test_accuracy_pct: 100.0 * run.test_accuracy,
            selected_epoch: run.selected_epoch,
            wall_seconds,
        }
    }
}

/// One row of the results table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Arm {
    pub method: Method,
    pub dim: usize,
}

impl Arm {
    pub const fn new(method: Method, dim: usize) -> Self {
        Self { method, dim }
    }
}

/// Table rows in their fixed output order.
pub const TABLE_ARMS: [Arm; 8] = [
    Arm::new(Method::Dft, 784),
    Arm::new(Method::Monoidal, 32),
    Arm::new(Method::Dft, 32),
    Arm::new(Method::Monoidal, 8),
    Arm::new(Method::Dft, 8),
    Arm::new(Method::Monoidal, 2),
    Arm::new(Method::Dft, 2),
    Arm::new(Method::Mlp, 784),
];

/// The slow full-width monoidal arm, appended on request.
pub const FULL_MONOIDAL_ARM: Arm = Arm::new(Method::Monoidal, 784);

/// Trains one configuration and times it.
pub fn run_experiment(
    cfg: &TrainConfig,
    mnist: &Mnist,
) -> Result<(ExperimentRecord, TrainRun), CliError> {
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let spec = cfg
        .split_spec()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let start = Instant::now();
    let data = SplitData::new(mnist, &spec);
    let run = train(cfg, &data).map_err(|e| CliError::Runtime(e.to_string()))?;
    let dim = match cfg.method {
        Method::Mlp => mnist
            .train
            .images()
            .first()
            .map_or(0, |im| im.pixels().len()),
        _ => cfg.dim,
    };
    let record = ExperimentRecord::from_run(&run, dim, start.elapsed().as_secs_f64());
    Ok((record, run))
}

pub fn write_records<W: Write>(out: W, records: &[ExperimentRecord]) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(CSV_HEADER.split(','))?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<ExperimentRecord>, CliError> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != CSV_HEADER {
        return Err(CliError::Runtime(format!(
            "unexpected CSV header {header:?}"
        )));
    }
    r.deserialize()
        .map(|row| row.map_err(CliError::from))
        .collect()
}

/// Mean and sample standard deviation (zero for a single run).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmSummary {
    pub method: Method,
    pub dim: usize,
    pub runs: usize,
    pub mean_test_accuracy_pct: f64,
    pub std_test_accuracy_pct: f64,
}

/// Groups records by arm, preserving first-appearance order.
pub fn summarize(records: &[ExperimentRecord]) -> Vec<ArmSummary> {
    let mut arms: Vec<(Method, usize)> = Vec::new();
    for r in records {
        if !arms.contains(&(r.method, r.dim)) {
            arms.push((r.method, r.dim));
        }
    }
    arms.into_iter()
        .map(|(method, dim)| {
            let accs: Vec<f64> = records
                .iter()
                .filter(|r| r.method == method && r.dim == dim)
                .map(|r| r.test_accuracy_pct)
                .collect();
            let (mean, std) = mean_std(&accs);
            ArmSummary {
                method,
                dim,
                runs: accs.len(),
                mean_test_accuracy_pct: mean,
                std_test_accuracy_pct: std,
            }
        })
        .collect()
}

pub fn write_summary<W: Write>(out: W, summary: &[ArmSummary]) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(SUMMARY_HEADER.split(','))?;
    for s in summary {
        w.serialize(s)?;
    }
    w.flush()?;
    Ok(())
}

/// `results.csv` → `results.<suffix>`.
pub fn sidecar_path(out: &Path, suffix: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}.{suffix}"))
}

/// Writes the per-epoch history of every run as pretty JSON.
pub fn write_history(path: &Path, runs: &[TrainRun]) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(runs).map_err(|e| CliError::Runtime(e.to_string()))?;
    fs::write(path, json + "\n")?;
    Ok(())
}

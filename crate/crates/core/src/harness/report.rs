//! Experiment reports and their on-disk forms.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trainers::{RunSeeds, TrainingTrace};

pub const REPORT_JSON: &str = "report.json";
pub const TABLE_CSV: &str = "table.csv";
pub const CURVES_CSV: &str = "curves.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    pub seeds: RunSeeds,
    pub max_accuracy: f64,
    pub trace: TrainingTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: String,
    pub trials: Vec<TrialResult>,
    pub mean_max_accuracy: f64,
    pub std_max_accuracy: f64,
    /// Mean minus the vanilla mean; absent when vanilla did not run.
    pub delta_vs_vanilla: Option<f64>,
    /// Paired sign-flip test against vanilla over shared trials.
    pub p_value: Option<f64>,
}

impl MethodReport {
    pub fn max_accuracies(&self) -> Vec<f64> {
        self.trials.iter().map(|t| t.max_accuracy).collect()
    }

    /// Max accuracy of a given trial, if that trial succeeded.
    pub fn trial(&self, trial: usize) -> Option<f64> {
        self.trials.iter().find(|t| t.trial == trial).map(|t| t.max_accuracy)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub method: String,
    /// `None` when the failure happened while computing the method's scores.
    pub trial: Option<usize>,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub budget: usize,
    pub validation_accuracy: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub master_seed: u64,
    pub trials: usize,
    pub epoch_budget: usize,
    pub calibration: Option<Calibration>,
    pub dataset_digest: String,
    pub methods: Vec<MethodReport>,
    pub failures: Vec<RunFailure>,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn method(&self, name: &str) -> Option<&MethodReport> {
        self.methods.iter().find(|m| m.method == name)
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_owned(), |x| format!("{x:.6}"))
}

/// `method,mean_max_acc,std,delta_vs_vanilla,p_value`, one row per method.
pub fn render_table(r: &Report) -> String {
    let mut out = String::from("method,mean_max_acc,std,delta_vs_vanilla,p_value\n");
    for m in &r.methods {
        let _ = writeln!(
            out,
            "{},{:.6},{:.6},{},{}",
            m.method,
            m.mean_max_accuracy,
            m.std_max_accuracy,
            fmt_opt(m.delta_vs_vanilla),
            fmt_opt(m.p_value)
        );
    }
    out
}

/// `method,trial,epoch,acc` for every evaluated epoch.
pub fn render_curves(r: &Report) -> String {
    let mut out = String::from("method,trial,epoch,acc\n");
    for m in &r.methods {
        for t in &m.trials {
            for e in &t.trace.epochs {
                if let Some(acc) = e.eval_accuracy {
                    let _ = writeln!(out, "{},{},{},{acc:.6}", m.method, t.trial, e.epoch);
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct ReportFiles {
    pub json: PathBuf,
    pub table: PathBuf,
    pub curves: PathBuf,
}

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes the full report (`report.json`), the summary table and the
/// accuracy curves into `dir`, creating it if needed.
pub fn write_report(r: &Report, dir: &Path) -> Result<ReportFiles> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = ReportFiles { json: dir.join(REPORT_JSON), table: dir.join(TABLE_CSV), curves: dir.join(CURVES_CSV) };
    write(&files.json, &serde_json::to_string(r)?)?;
    write(&files.table, &render_table(r))?;
    write(&files.curves, &render_curves(r))?;
    Ok(files)
}

pub fn read_report(path: &Path) -> Result<Report> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

//! Aggregate tables over episode logs: per-run risk/acceleration/jerk
//! statistics, across-run summaries and the TTC x risk worst-case grid.
//!
//! Files written by [`emit_metrics`] (`.csv` or `.json`, same columns):
//!
//! * `runs`: one row per log, columns [`RUN_COLUMNS`]
//! * `summary`: one row per (scenario, policy, mode), columns
//!   [`SUMMARY_COLUMNS`]; spreads are population standard deviations of the
//!   per-run values
//! * `heatmap`: one row per grid cell, columns [`HEATMAP_COLUMNS`]
//! * `critical`: one row, columns [`CRITICAL_COLUMNS`]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::runner::EpisodeLog;
use crate::error::{Error, Result};

pub const CRITICAL_TTC_S: f64 = 2.0;
pub const CRITICAL_RISK: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricsFormat {
    Csv,
    Json,
}

impl MetricsFormat {
    pub fn extension(self) -> &'static str {
        match self {
            MetricsFormat::Csv => "csv",
            MetricsFormat::Json => "json",
        }
    }
}

impl std::str::FromStr for MetricsFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(MetricsFormat::Csv),
            "json" => Ok(MetricsFormat::Json),
            other => Err(Error::validation("format", format!("unknown format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseHistogram {
    pub ttc_edges: Vec<f64>,
    pub risk_edges: Vec<f64>,
    /// `counts[i][j]` holds pairs in TTC bin `i` and risk bin `j`.
    pub counts: Vec<Vec<u64>>,
    pub binned_pairs: u64,
    pub infinite_ttc_pairs: u64,
    pub critical_pairs: u64,
}

pub fn uniform_edges(lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    (0..=bins)
        .map(|i| lo + (hi - lo) * i as f64 / bins as f64)
        .collect()
}

pub fn default_ttc_edges() -> Vec<f64> {
    uniform_edges(0.0, 10.0, 10)
}

pub fn default_risk_edges() -> Vec<f64> {
    uniform_edges(0.0, 1.0, 10)
}

/// Bin of `v`; values outside the edges land in the nearest end bin.
fn bin_of(edges: &[f64], v: f64) -> usize {
    let bins = edges.len() - 1;
    edges.partition_point(|e| *e <= v).saturating_sub(1).min(bins - 1)
}

fn check_edges(name: &str, edges: &[f64]) -> Result<()> {
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::validation(name, "need >= 2 strictly increasing edges"));
    }
    Ok(())
}

/// Bins the per-step (min TTC, max other-risk) pairs of every step that has
/// at least one other agent. Infinite TTC is counted but not binned.
pub fn worst_case_histogram(
    logs: &[EpisodeLog],
    ttc_edges: &[f64],
    risk_edges: &[f64],
) -> Result<WorstCaseHistogram> {
    if logs.is_empty() {
        return Err(Error::EmptyInput);
    }
    check_edges("ttc_edges", ttc_edges)?;
    check_edges("risk_edges", risk_edges)?;
    let mut h = WorstCaseHistogram {
        ttc_edges: ttc_edges.to_vec(),
        risk_edges: risk_edges.to_vec(),
        counts: vec![vec![0; risk_edges.len() - 1]; ttc_edges.len() - 1],
        binned_pairs: 0,
        infinite_ttc_pairs: 0,
        critical_pairs: 0,
    };
    for step in logs.iter().flat_map(|l| &l.steps).filter(|s| !s.ttc_s.is_empty()) {
        let Some(ttc) = step.min_ttc_s else {
            h.infinite_ttc_pairs += 1;
            continue;
        };
        let risk = step.max_other_risk;
        h.counts[bin_of(ttc_edges, ttc)][bin_of(risk_edges, risk)] += 1;
        h.binned_pairs += 1;
        if ttc < CRITICAL_TTC_S && risk > CRITICAL_RISK {
            h.critical_pairs += 1;
        }
    }
    Ok(h)
}

/// Mean and population standard deviation; `(0, 0)` for no values.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub const RUN_COLUMNS: &[&str] = &[
    "scenario",
    "policy",
    "mode",
    "seed",
    "steps",
    "terminal",
    "episode_return",
    "episode_cost",
    "lambda_after",
    "ego_risk_mean",
    "ego_risk_std",
    "other_risk_mean",
    "other_risk_std",
    "accel_mean",
    "accel_std",
    "jerk_mean",
    "jerk_std",
    "min_ttc_s",
    "critical_steps",
];

pub const SUMMARY_COLUMNS: &[&str] = &[
    "scenario",
    "policy",
    "mode",
    "runs",
    "episode_return_mean",
    "episode_return_std",
    "episode_cost_mean",
    "episode_cost_std",
    "ego_risk_mean",
    "ego_risk_std",
    "other_risk_mean",
    "other_risk_std",
    "abs_accel_mean",
    "abs_accel_std",
    "abs_jerk_mean",
    "abs_jerk_std",
];

pub const HEATMAP_COLUMNS: &[&str] = &["ttc_lo_s", "ttc_hi_s", "risk_lo", "risk_hi", "count"];

pub const CRITICAL_COLUMNS: &[&str] = &[
    "binned_pairs",
    "infinite_ttc_pairs",
    "critical_pairs",
    "critical_ttc_s",
    "critical_risk",
];

/// Per-run statistics, one value per [`RUN_COLUMNS`] entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub scenario: String,
    pub policy: String,
    pub mode: String,
    pub seed: u64,
    pub steps: u64,
    pub terminal: String,
    pub episode_return: f64,
    pub episode_cost: f64,
    pub lambda_after: f64,
    pub ego_risk_mean: f64,
    pub ego_risk_std: f64,
    pub other_risk_mean: f64,
    pub other_risk_std: f64,
    pub accel_mean: f64,
    pub accel_std: f64,
    pub jerk_mean: f64,
    pub jerk_std: f64,
    pub min_ttc_s: Option<f64>,
    pub critical_steps: u64,
}

pub fn run_row(log: &EpisodeLog) -> RunRow {
    let col = |f: fn(&super::runner::StepRecord) -> f64| -> Vec<f64> { log.steps.iter().map(f).collect() };
    let (ego_risk_mean, ego_risk_std) = mean_std(&col(|s| s.ego_risk));
    let (other_risk_mean, other_risk_std) = mean_std(&col(|s| s.max_other_risk));
    let (accel_mean, accel_std) = mean_std(&col(|s| s.accel_mps2));
    let (jerk_mean, jerk_std) = mean_std(&col(|s| s.jerk_mps3));
    RunRow {
        scenario: log.scenario.clone(),
        policy: log.policy.clone(),
        mode: log.mode.as_str().to_string(),
        seed: log.seed,
        steps: log.steps.len() as u64,
        terminal: log.terminal.label().to_string(),
        episode_return: log.episode_return,
        episode_cost: log.episode_cost,
        lambda_after: log.lambda_after,
        ego_risk_mean,
        ego_risk_std,
        other_risk_mean,
        other_risk_std,
        accel_mean,
        accel_std,
        jerk_mean,
        jerk_std,
        min_ttc_s: log.steps.iter().filter_map(|s| s.min_ttc_s).reduce(f64::min),
        critical_steps: log
            .steps
            .iter()
            .filter(|s| {
                s.min_ttc_s
                    .is_some_and(|t| t < CRITICAL_TTC_S && s.max_other_risk > CRITICAL_RISK)
            })
            .count() as u64,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub scenario: String,
    pub policy: String,
    pub mode: String,
    pub runs: u64,
    pub episode_return_mean: f64,
    pub episode_return_std: f64,
    pub episode_cost_mean: f64,
    pub episode_cost_std: f64,
    pub ego_risk_mean: f64,
    pub ego_risk_std: f64,
    pub other_risk_mean: f64,
    pub other_risk_std: f64,
    pub abs_accel_mean: f64,
    pub abs_accel_std: f64,
    pub abs_jerk_mean: f64,
    pub abs_jerk_std: f64,
}

/// Across-run summaries grouped by (scenario, policy, mode), in key order.
pub fn summarize(logs: &[EpisodeLog]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(String, String, String), Vec<&EpisodeLog>> = BTreeMap::new();
    for log in logs {
        groups
            .entry((log.scenario.clone(), log.policy.clone(), log.mode.as_str().to_string()))
            .or_default()
            .push(log);
    }
    groups
        .into_iter()
        .map(|((scenario, policy, mode), runs)| {
            let per_run = |f: &dyn Fn(&EpisodeLog) -> f64| -> (f64, f64) {
                mean_std(&runs.iter().map(|l| f(l)).collect::<Vec<_>>())
            };
            let step_mean = |f: fn(&super::runner::StepRecord) -> f64| {
                move |l: &EpisodeLog| mean_std(&l.steps.iter().map(f).collect::<Vec<_>>()).0
            };
            let (episode_return_mean, episode_return_std) = per_run(&|l| l.episode_return);
            let (episode_cost_mean, episode_cost_std) = per_run(&|l| l.episode_cost);
            let (ego_risk_mean, ego_risk_std) = per_run(&step_mean(|s| s.ego_risk));
            let (other_risk_mean, other_risk_std) = per_run(&step_mean(|s| s.max_other_risk));
            let (abs_accel_mean, abs_accel_std) = per_run(&step_mean(|s| s.accel_mps2.abs()));
            let (abs_jerk_mean, abs_jerk_std) = per_run(&step_mean(|s| s.jerk_mps3.abs()));
            SummaryRow {
                scenario,
                policy,
                mode,
                runs: runs.len() as u64,
                episode_return_mean,
                episode_return_std,
                episode_cost_mean,
                episode_cost_std,
                ego_risk_mean,
                ego_risk_std,
                other_risk_mean,
                other_risk_std,
                abs_accel_mean,
                abs_accel_std,
                abs_jerk_mean,
                abs_jerk_std,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapRow {
    pub ttc_lo_s: f64,
    pub ttc_hi_s: f64,
    pub risk_lo: f64,
    pub risk_hi: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalRow {
    pub binned_pairs: u64,
    pub infinite_ttc_pairs: u64,
    pub critical_pairs: u64,
    pub critical_ttc_s: f64,
    pub critical_risk: f64,
}

pub fn heatmap_rows(h: &WorstCaseHistogram) -> Vec<HeatmapRow> {
    let mut rows = Vec::new();
    for (i, w) in h.ttc_edges.windows(2).enumerate() {
        for (j, r) in h.risk_edges.windows(2).enumerate() {
            rows.push(HeatmapRow {
                ttc_lo_s: w[0],
                ttc_hi_s: w[1],
                risk_lo: r[0],
                risk_hi: r[1],
                count: h.counts[i][j],
            });
        }
    }
    rows
}

fn write_rows<T: Serialize>(
    dir: &Path,
    stem: &str,
    format: MetricsFormat,
    columns: &[&str],
    rows: &[T],
) -> Result<PathBuf> {
    let path = dir.join(format!("{stem}.{}", format.extension()));
    match format {
        MetricsFormat::Json => {
            let mut text = serde_json::to_string_pretty(rows).map_err(std::io::Error::other)?;
            text.push('\n');
            std::fs::write(&path, text)?;
        }
        MetricsFormat::Csv => {
            let mut w = csv::WriterBuilder::new()
                .has_headers(false)
                .from_path(&path)
                .map_err(std::io::Error::other)?;
            w.write_record(columns).map_err(std::io::Error::other)?;
            for row in rows {
                let value = serde_json::to_value(row).map_err(std::io::Error::other)?;
                let record = columns.iter().map(|c| csv_cell(&value[*c]));
                w.write_record(record).map_err(std::io::Error::other)?;
            }
            w.flush()?;
        }
    }
    Ok(path)
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Parses a metrics CSV back into JSON-like rows: empty cells become `null`,
/// numeric cells numbers, everything else strings.
pub fn read_csv_rows(path: &Path) -> Result<Vec<Map<String, Value>>> {
    let mut r = csv::Reader::from_path(path).map_err(std::io::Error::other)?;
    let headers = r.headers().map_err(std::io::Error::other)?.clone();
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(std::io::Error::other)?;
        let mut row = Map::new();
        for (h, cell) in headers.iter().zip(rec.iter()) {
            let v = if cell.is_empty() {
                Value::Null
            } else if let Ok(n) = serde_json::from_str::<serde_json::Number>(cell) {
                Value::Number(n)
            } else {
                Value::String(cell.to_string())
            };
            row.insert(h.to_string(), v);
        }
        out.push(row);
    }
    Ok(out)
}

/// Writes the four metric tables into `dir` and returns their paths.
pub fn emit_metrics(logs: &[EpisodeLog], dir: &Path, format: MetricsFormat) -> Result<Vec<PathBuf>> {
    if logs.is_empty() {
        return Err(Error::EmptyInput);
    }
    std::fs::create_dir_all(dir)?;
    let hist = worst_case_histogram(logs, &default_ttc_edges(), &default_risk_edges())?;
    let runs: Vec<RunRow> = logs.iter().map(run_row).collect();
    let critical = [CriticalRow {
        binned_pairs: hist.binned_pairs,
        infinite_ttc_pairs: hist.infinite_ttc_pairs,
        critical_pairs: hist.critical_pairs,
        critical_ttc_s: CRITICAL_TTC_S,
        critical_risk: CRITICAL_RISK,
    }];
    Ok(vec![
        write_rows(dir, "runs", format, RUN_COLUMNS, &runs)?,
        write_rows(dir, "summary", format, SUMMARY_COLUMNS, &summarize(logs))?,
        write_rows(dir, "heatmap", format, HEATMAP_COLUMNS, &heatmap_rows(&hist))?,
        write_rows(dir, "critical", format, CRITICAL_COLUMNS, &critical)?,
    ])
}

//! Per-method acceptance, timing and final diversity.

use std::fmt;
use std::path::Path;

use cdexplore_core::explorer::Method;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::output::{
    acceptance_rows, curve_rows, read_csv, timing_rows, AcceptanceRow, CurveRow, TimingRow,
    ACCEPTANCE_CSV, CURVES_CSV, TIMING_CSV,
};
use crate::run::ResultBundle;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub balance_prob: f64,
    pub runs: usize,
    /// Mean over seeds of the per-run acceptance rate.
    pub acceptance: Option<f64>,
    pub ms_per_sample: f64,
    /// Seconds per inlier, `time per sample / acceptance`; absent at zero acceptance.
    pub seconds_per_inlier: Option<f64>,
    pub final_global_diversity: f64,
    pub final_constrained_diversity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub rows: Vec<MethodSummary>,
}

impl Summary {
    pub fn get(&self, method: Method) -> Option<&MethodSummary> {
        self.rows.iter().find(|r| r.method == method)
    }
}

pub fn seconds_per_inlier(ms_per_sample: f64, acceptance: f64) -> Option<f64> {
    (acceptance > 0.0).then(|| ms_per_sample / 1000.0 / acceptance)
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Groups by (method, balance) in order of first appearance in `acceptance`.
pub fn summarize_rows(
    acceptance: &[AcceptanceRow],
    timing: &[TimingRow],
    curves: &[CurveRow],
) -> Summary {
    let mut keys: Vec<(Method, f64)> = Vec::new();
    for a in acceptance {
        if !keys.contains(&(a.method, a.balance_prob)) {
            keys.push((a.method, a.balance_prob));
        }
    }
    let rows = keys
        .into_iter()
        .map(|(method, balance_prob)| {
            let same = |m: Method, b: f64| m == method && b == balance_prob;
            let acc: Vec<&AcceptanceRow> = acceptance
                .iter()
                .filter(|a| same(a.method, a.balance_prob))
                .collect();
            let acceptance_mean = mean(acc.iter().filter_map(|a| a.acceptance_rate));
            let (wall, samples) = timing
                .iter()
                .filter(|t| same(t.method, t.balance_prob))
                .fold((0.0, 0usize), |(w, n), t| {
                    (w + t.wall_seconds, n + t.samples)
                });
            let ms_per_sample = if samples > 0 {
                1000.0 * wall / samples as f64
            } else {
                0.0
            };
            let last = curves
                .iter()
                .filter(|c| same(c.method, c.balance_prob))
                .max_by_key(|c| c.sample_index);
            MethodSummary {
                method,
                balance_prob,
                runs: acc.len(),
                acceptance: acceptance_mean,
                ms_per_sample,
                seconds_per_inlier: acceptance_mean
                    .and_then(|a| seconds_per_inlier(ms_per_sample, a)),
                final_global_diversity: last.map_or(0.0, |c| c.global_mean),
                final_constrained_diversity: last.map_or(0.0, |c| c.constrained_mean),
            }
        })
        .collect();
    Summary { rows }
}

pub fn summarize(bundle: &ResultBundle) -> Summary {
    summarize_rows(
        &acceptance_rows(bundle),
        &timing_rows(bundle),
        &curve_rows(bundle),
    )
}

/// Summary of a result directory written by a plan or sweep run.
pub fn summarize_dir(dir: &Path) -> Result<Summary> {
    Ok(summarize_rows(
        &read_csv(&dir.join(ACCEPTANCE_CSV))?,
        &read_csv(&dir.join(TIMING_CSV))?,
        &read_csv(&dir.join(CURVES_CSV))?,
    ))
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<6} {:>7} {:>5} {:>11} {:>10} {:>11} {:>10} {:>12}",
            "method",
            "balance",
            "runs",
            "acceptance",
            "ms/sample",
            "s/inlier",
            "global",
            "constrained"
        )?;
        for r in &self.rows {
            let acc = r
                .acceptance
                .map_or("-".into(), |a| format!("{:.2}%", 100.0 * a));
            let spi = r
                .seconds_per_inlier
                .map_or("-".into(), |s| format!("{s:.2}"));
            writeln!(
                f,
                "{:<6} {:>7} {:>5} {:>11} {:>10.1} {:>11} {:>10.1} {:>12.1}",
                r.method.as_str(),
                r.balance_prob,
                r.runs,
                acc,
                r.ms_per_sample,
                spi,
                r.final_global_diversity,
                r.final_constrained_diversity
            )?;
        }
        Ok(())
    }
}

//! CSV tables and the JSON manifest of a result directory.

use std::fs;
use std::path::{Path, PathBuf};

use cdexplore_core::explorer::Method;
use cdexplore_core::metrics::BinningSpec;
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::plan::ExperimentPlan;
use crate::run::{inlier_flag, ResultBundle, RunFailure, RunSpec};

pub const DIVERSITY_CSV: &str = "diversity.csv";
pub const CURVES_CSV: &str = "curves.csv";
pub const ACCEPTANCE_CSV: &str = "acceptance.csv";
pub const TIMING_CSV: &str = "timing.csv";
pub const SWEEP_CSV: &str = "sweep.csv";
pub const MANIFEST_JSON: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversityRow {
    pub method: Method,
    pub balance_prob: f64,
    pub seed: u64,
    pub sample_index: usize,
    pub global_diversity: usize,
    pub constrained_diversity: usize,
    pub inlier_flag: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub method: Method,
    pub balance_prob: f64,
    pub sample_index: usize,
    pub global_mean: f64,
    pub global_std: f64,
    pub constrained_mean: f64,
    pub constrained_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceRow {
    pub method: Method,
    pub balance_prob: f64,
    pub seed: u64,
    pub samples: usize,
    pub post_init_samples: usize,
    pub post_init_inliers: usize,
    /// Empty when there are no post-bootstrap samples.
    pub acceptance_rate: Option<f64>,
    pub homogeneous: usize,
    pub invalid: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub method: Method,
    pub balance_prob: f64,
    pub seed: u64,
    pub samples: usize,
    pub wall_seconds: f64,
    pub ms_per_sample: f64,
}

/// Final diversity per balance value, over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub balance_prob: f64,
    pub runs: usize,
    pub global_mean: f64,
    pub global_std: f64,
    pub constrained_mean: f64,
    pub constrained_std: f64,
    pub acceptance_mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Ok { spec: RunSpec },
    Failed { spec: RunSpec, error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub plan: ExperimentPlan,
    pub runs: Vec<RunStatus>,
    pub global_binning: Option<BinningSpec>,
    pub constrained_binning: Option<BinningSpec>,
    /// Every output file except the manifest, sorted by path.
    pub files: Vec<FileEntry>,
}

pub fn diversity_rows(bundle: &ResultBundle) -> Vec<DiversityRow> {
    bundle
        .runs
        .iter()
        .flat_map(|r| {
            (0..r.samples()).map(move |i| DiversityRow {
                method: r.spec.method,
                balance_prob: r.spec.balance_prob,
                seed: r.spec.seed,
                sample_index: i,
                global_diversity: r.global[i],
                constrained_diversity: r.constrained[i],
                inlier_flag: inlier_flag(r.classifications[i]),
            })
        })
        .collect()
}

pub fn curve_rows(bundle: &ResultBundle) -> Vec<CurveRow> {
    bundle
        .curves
        .iter()
        .flat_map(|c| {
            (0..c.global_mean.len()).map(move |i| CurveRow {
                method: c.method,
                balance_prob: c.balance_prob,
                sample_index: i,
                global_mean: c.global_mean[i],
                global_std: c.global_std[i],
                constrained_mean: c.constrained_mean[i],
                constrained_std: c.constrained_std[i],
            })
        })
        .collect()
}

pub fn acceptance_rows(bundle: &ResultBundle) -> Vec<AcceptanceRow> {
    let n_init = bundle.plan.n_init;
    bundle
        .runs
        .iter()
        .map(|r| AcceptanceRow {
            method: r.spec.method,
            balance_prob: r.spec.balance_prob,
            seed: r.spec.seed,
            samples: r.samples(),
            post_init_samples: r.samples().saturating_sub(n_init),
            post_init_inliers: r
                .classifications
                .iter()
                .skip(n_init)
                .filter(|&&c| inlier_flag(c) == 1)
                .count(),
            acceptance_rate: r.acceptance_rate(n_init),
            homogeneous: r.homogeneous_count(),
            invalid: r.invalid,
        })
        .collect()
}

pub fn timing_rows(bundle: &ResultBundle) -> Vec<TimingRow> {
    bundle
        .runs
        .iter()
        .map(|r| TimingRow {
            method: r.spec.method,
            balance_prob: r.spec.balance_prob,
            seed: r.spec.seed,
            samples: r.samples(),
            wall_seconds: r.wall_seconds,
            ms_per_sample: r.ms_per_sample(),
        })
        .collect()
}

pub fn sweep_rows(bundle: &ResultBundle) -> Vec<SweepRow> {
    let n_init = bundle.plan.n_init;
    bundle
        .curves
        .iter()
        .map(|c| {
            let last = c.global_mean.len().saturating_sub(1);
            let rates: Vec<f64> = bundle
                .runs
                .iter()
                .filter(|r| r.spec.method == c.method && r.spec.balance_prob == c.balance_prob)
                .filter_map(|r| r.acceptance_rate(n_init))
                .collect();
            SweepRow {
                balance_prob: c.balance_prob,
                runs: c.runs,
                global_mean: c.global_mean.get(last).copied().unwrap_or(0.0),
                global_std: c.global_std.get(last).copied().unwrap_or(0.0),
                constrained_mean: c.constrained_mean.get(last).copied().unwrap_or(0.0),
                constrained_std: c.constrained_std.get(last).copied().unwrap_or(0.0),
                acceptance_mean: (!rates.is_empty())
                    .then(|| rates.iter().sum::<f64>() / rates.len() as f64),
            }
        })
        .collect()
}

pub fn write_csv<R: Serialize>(path: &Path, rows: &[R]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_csv<R: DeserializeOwned>(path: &Path) -> Result<Vec<R>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

fn hash_file(dir: &Path, path: &Path) -> Result<FileEntry> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let rel = path.strip_prefix(dir).unwrap_or(path);
    Ok(FileEntry {
        path: rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/"),
        bytes: bytes.len() as u64,
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

/// Hashes every regular file under `dir` except the manifest.
pub fn file_entries(dir: &Path) -> Result<Vec<FileEntry>> {
    let mut stack: Vec<PathBuf> = vec![dir.to_path_buf()];
    let mut out = Vec::new();
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).map_err(|e| Error::io(&d, e))? {
            let path = entry.map_err(|e| Error::io(&d, e))?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path != dir.join(MANIFEST_JSON) {
                out.push(hash_file(dir, &path)?);
            }
        }
    }
    out.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(out)
}

fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<()> {
    let path = dir.join(MANIFEST_JSON);
    let text = serde_json::to_string_pretty(manifest)?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST_JSON);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Writes the tables and then the manifest over everything in the directory.
pub fn write_bundle(bundle: &ResultBundle) -> Result<()> {
    let dir = &bundle.output_dir;
    write_csv(&dir.join(DIVERSITY_CSV), &diversity_rows(bundle))?;
    write_csv(&dir.join(CURVES_CSV), &curve_rows(bundle))?;
    write_csv(&dir.join(ACCEPTANCE_CSV), &acceptance_rows(bundle))?;
    write_csv(&dir.join(TIMING_CSV), &timing_rows(bundle))?;
    update_manifest(bundle)
}

fn update_manifest(bundle: &ResultBundle) -> Result<()> {
    let mut runs: Vec<RunStatus> = bundle
        .runs
        .iter()
        .map(|r| RunStatus::Ok {
            spec: r.spec.clone(),
        })
        .collect();
    runs.extend(bundle.failures.iter().map(|f| RunStatus::Failed {
        spec: f.spec.clone(),
        error: f.error.clone(),
    }));
    let manifest = Manifest {
        plan: bundle.plan.clone(),
        runs,
        global_binning: Some(bundle.global_spec.clone()),
        constrained_binning: Some(bundle.constrained_spec.clone()),
        files: file_entries(&bundle.output_dir)?,
    };
    write_manifest(&bundle.output_dir, &manifest)
}

/// Records failed runs when no evaluation could be made.
pub fn write_failure_manifest(
    plan: &ExperimentPlan,
    dir: &Path,
    failures: &[RunFailure],
) -> Result<()> {
    let manifest = Manifest {
        plan: plan.clone(),
        runs: failures
            .iter()
            .map(|f| RunStatus::Failed {
                spec: f.spec.clone(),
                error: f.error.clone(),
            })
            .collect(),
        global_binning: None,
        constrained_binning: None,
        files: file_entries(dir)?,
    };
    write_manifest(dir, &manifest)
}

pub fn write_sweep(bundle: &ResultBundle) -> Result<()> {
    write_csv(&bundle.output_dir.join(SWEEP_CSV), &sweep_rows(bundle))?;
    update_manifest(bundle)
}

//! Executing plans: independent explorations in parallel, then a pooled evaluation.

use std::fs;
use std::io::BufWriter;
use std::ops::ControlFlow;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use cdexplore_core::explorer::{run_exploration, Method, INLIER};
use cdexplore_core::export::write_history_jsonl;
use cdexplore_core::features::haralick::N_FEATURES;
use cdexplore_core::metrics::{
    self, haralick_f64, BinningSpec, EvalSpace, CONSTRAINED_BINS, GLOBAL_BINS,
};
use cdexplore_core::{system, DynSystem, EvalEmbedding};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::output;
use crate::plan::ExperimentPlan;

/// One exploration to perform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub method: Method,
    pub seed: u64,
    pub balance_prob: f64,
    /// File stem of the run's history.
    pub label: String,
}

impl RunSpec {
    pub fn new(method: Method, seed: u64, balance_prob: f64) -> Self {
        Self {
            method,
            seed,
            balance_prob,
            label: format!("{method}_{seed}"),
        }
    }

    pub fn sweep(seed: u64, balance_prob: f64) -> Self {
        Self {
            method: Method::NRAB,
            seed,
            balance_prob,
            label: format!("NRAB_b{balance_prob}_{seed}"),
        }
    }
}

/// A finished run with its evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub spec: RunSpec,
    pub classifications: Vec<i8>,
    pub homogeneous: Vec<bool>,
    pub invalid: usize,
    /// Exploration wall time, rollouts and feature extraction included.
    pub wall_seconds: f64,
    /// Diversity after each sample.
    pub global: Vec<usize>,
    pub constrained: Vec<usize>,
}

impl RunResult {
    pub fn samples(&self) -> usize {
        self.classifications.len()
    }

    pub fn acceptance_rate(&self, n_init: usize) -> Option<f64> {
        metrics::acceptance_rate(&self.classifications, n_init).ok()
    }

    pub fn ms_per_sample(&self) -> f64 {
        1000.0 * self.wall_seconds / self.samples().max(1) as f64
    }

    pub fn homogeneous_count(&self) -> usize {
        self.homogeneous.iter().filter(|&&h| h).count()
    }

    pub fn final_global(&self) -> usize {
        self.global.last().copied().unwrap_or(0)
    }

    pub fn final_constrained(&self) -> usize {
        self.constrained.last().copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub spec: RunSpec,
    pub error: String,
}

/// Mean and population standard deviation over the seeds of one group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupCurve {
    pub method: Method,
    pub balance_prob: f64,
    pub runs: usize,
    pub global_mean: Vec<f64>,
    pub global_std: Vec<f64>,
    pub constrained_mean: Vec<f64>,
    pub constrained_std: Vec<f64>,
}

/// Everything a plan produced.
#[derive(Debug, Clone)]
pub struct ResultBundle {
    pub plan: ExperimentPlan,
    pub output_dir: PathBuf,
    pub runs: Vec<RunResult>,
    pub failures: Vec<RunFailure>,
    pub eval_space: EvalSpace,
    pub global_spec: BinningSpec,
    pub constrained_spec: BinningSpec,
    pub curves: Vec<GroupCurve>,
}

impl ResultBundle {
    pub fn runs_of(&self, method: Method) -> impl Iterator<Item = &RunResult> {
        self.runs.iter().filter(move |r| r.spec.method == method)
    }

    pub fn curve(&self, method: Method, balance_prob: f64) -> Option<&GroupCurve> {
        self.curves
            .iter()
            .find(|c| c.method == method && c.balance_prob == balance_prob)
    }
}

/// Every method of the plan on every seed.
pub fn plan_specs(plan: &ExperimentPlan) -> Vec<RunSpec> {
    plan.methods
        .iter()
        .flat_map(|&m| {
            plan.seeds
                .iter()
                .map(move |&s| RunSpec::new(m, s, plan.balance_prob))
        })
        .collect()
}

/// NRAB on every seed for each balance value of the sweep.
pub fn sweep_specs(plan: &ExperimentPlan) -> Result<Vec<RunSpec>> {
    let sweep = plan
        .balance_sweep
        .as_ref()
        .ok_or_else(|| Error::Plan("plan has no balance_sweep".into()))?;
    Ok(sweep
        .iter()
        .flat_map(|&b| plan.seeds.iter().map(move |&s| RunSpec::sweep(s, b)))
        .collect())
}

/// Runs every (method, seed) of the plan into `plan.output_dir`.
pub fn run_plan(plan: &ExperimentPlan) -> Result<ResultBundle> {
    plan.validate()?;
    run_specs(plan, &plan_specs(plan), &plan.output_dir)
}

/// Runs the plan's balance sweep into `plan.output_dir` and writes `sweep.csv`.
pub fn run_balance_sweep(plan: &ExperimentPlan) -> Result<ResultBundle> {
    plan.validate()?;
    let bundle = run_specs(plan, &sweep_specs(plan)?, &plan.output_dir)?;
    output::write_sweep(&bundle)?;
    Ok(bundle)
}

/// Features kept from a run once its history is released.
struct RawRun {
    spec: RunSpec,
    classifications: Vec<i8>,
    homogeneous: Vec<bool>,
    invalid: usize,
    wall_seconds: f64,
    haralick: Vec<[f64; N_FEATURES]>,
}

fn explore_one(
    sys: &DynSystem,
    plan: &ExperimentPlan,
    spec: &RunSpec,
    runs_dir: &Path,
) -> Result<RawRun> {
    let config = plan.explorer_config(spec.method, spec.seed, spec.balance_prob);
    let start = Instant::now();
    let history = run_exploration(sys.clone(), config, plan.roi.clone(), |_, _| {
        ControlFlow::Continue(())
    })?;
    let wall_seconds = start.elapsed().as_secs_f64();

    let path = runs_dir.join(format!("{}.jsonl", spec.label));
    let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    write_history_jsonl(history.entries(), BufWriter::new(file))?;

    let entries = history.entries();
    Ok(RawRun {
        spec: spec.clone(),
        classifications: history.classifications().to_vec(),
        homogeneous: entries.iter().map(|e| e.homogeneous).collect(),
        invalid: entries.iter().filter(|e| e.invalid).count(),
        wall_seconds,
        haralick: entries
            .iter()
            .map(|e| haralick_f64(&e.observation))
            .collect(),
    })
}

/// Runs `specs` in parallel, fits the evaluation space on the pooled
/// observations of all successful runs and writes the outputs to `dir`.
pub fn run_specs(plan: &ExperimentPlan, specs: &[RunSpec], dir: &Path) -> Result<ResultBundle> {
    let runs_dir = dir.join("runs");
    fs::create_dir_all(&runs_dir).map_err(|e| Error::io(&runs_dir, e))?;
    let sys = system(plan.system, plan.rollout_config());

    let outcomes: Vec<std::result::Result<RawRun, RunFailure>> = specs
        .par_iter()
        .map(|spec| {
            let fail = |error: String| RunFailure {
                spec: spec.clone(),
                error,
            };
            match catch_unwind(AssertUnwindSafe(|| {
                explore_one(&sys, plan, spec, &runs_dir)
            })) {
                Ok(Ok(raw)) => Ok(raw),
                Ok(Err(e)) => Err(fail(e.to_string())),
                Err(panic) => Err(fail(panic_message(&panic))),
            }
        })
        .collect();
    let mut raws = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => raws.push(r),
            Err(f) => failures.push(f),
        }
    }

    let pooled: Vec<[f64; N_FEATURES]> = raws
        .iter()
        .flat_map(|r| r.haralick.iter().copied())
        .collect();
    let eval_space = match EvalSpace::fit(&pooled) {
        Ok(space) => space,
        Err(e) => {
            output::write_failure_manifest(plan, dir, &failures)?;
            return Err(if pooled.is_empty() {
                Error::NoResults
            } else {
                e.into()
            });
        }
    };
    let embeddings: Vec<Vec<EvalEmbedding>> = raws
        .iter()
        .map(|r| {
            r.haralick
                .iter()
                .map(|h| eval_space.embed_features(h))
                .collect()
        })
        .collect();
    let all: Vec<EvalEmbedding> = embeddings.iter().flatten().copied().collect();
    let global_spec = BinningSpec::from_points(GLOBAL_BINS, &all)?;
    let constrained_spec = BinningSpec::from_points(CONSTRAINED_BINS, &all)?;

    let runs: Vec<RunResult> = raws
        .into_iter()
        .zip(&embeddings)
        .map(|(raw, emb)| {
            let report = metrics::diversity_report(
                emb,
                &raw.classifications,
                &global_spec,
                &constrained_spec,
                plan.n_init,
            );
            RunResult {
                spec: raw.spec,
                classifications: raw.classifications,
                homogeneous: raw.homogeneous,
                invalid: raw.invalid,
                wall_seconds: raw.wall_seconds,
                global: report.global,
                constrained: report.constrained,
            }
        })
        .collect();
    let curves = group_curves(&runs);

    let bundle = ResultBundle {
        plan: plan.clone(),
        output_dir: dir.to_path_buf(),
        runs,
        failures,
        eval_space,
        global_spec,
        constrained_spec,
        curves,
    };
    output::write_bundle(&bundle)?;
    Ok(bundle)
}

fn panic_message(panic: &Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = panic.downcast_ref::<&str>() {
        format!("panic: {s}")
    } else if let Some(s) = panic.downcast_ref::<String>() {
        format!("panic: {s}")
    } else {
        "panic".into()
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Per (method, balance) group, in order of first appearance.
pub fn group_curves(runs: &[RunResult]) -> Vec<GroupCurve> {
    let mut keys: Vec<(Method, f64)> = Vec::new();
    for r in runs {
        let key = (r.spec.method, r.spec.balance_prob);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(method, balance_prob)| {
            let group: Vec<&RunResult> = runs
                .iter()
                .filter(|r| r.spec.method == method && r.spec.balance_prob == balance_prob)
                .collect();
            let len = group.iter().map(|r| r.samples()).min().unwrap_or(0);
            let column = |i: usize, pick: fn(&RunResult) -> &Vec<usize>| {
                mean_std(&group.iter().map(|r| pick(r)[i] as f64).collect::<Vec<_>>())
            };
            let (global_mean, global_std) = (0..len).map(|i| column(i, |r| &r.global)).unzip();
            let (constrained_mean, constrained_std) =
                (0..len).map(|i| column(i, |r| &r.constrained)).unzip();
            GroupCurve {
                method,
                balance_prob,
                runs: group.len(),
                global_mean,
                global_std,
                constrained_mean,
                constrained_std,
            }
        })
        .collect()
}

/// Inlier flag of a classification as written to CSV.
pub(crate) fn inlier_flag(c: i8) -> u8 {
    u8::from(c == INLIER)
}

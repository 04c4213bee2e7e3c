//! Benchmark runner comparing the exploration methods on a system.
//!
//! A plan lists methods and seeds; every (method, seed) pair is an independent
//! exploration. After all runs finish, one evaluation space is fitted on the
//! pooled observations and per-run diversity curves, acceptance rates and
//! timings are written as CSV next to a hashed manifest:
//!
//! ```text
//! <output_dir>/runs/<method>_<seed>.jsonl
//! <output_dir>/diversity.csv   per run and sample
//! <output_dir>/curves.csv      per method and sample, mean and std over seeds
//! <output_dir>/acceptance.csv  per run
//! <output_dir>/timing.csv      per run, wall time
//! <output_dir>/sweep.csv       balance sweeps only
//! <output_dir>/manifest.json
//! ```
//!
//! All files except `timing.csv` (and the manifest, which hashes it) are
//! byte-identical across reruns of the same plan.

pub mod error;
pub mod output;
pub mod plan;
pub mod run;
pub mod summary;

pub use cdexplore_core::systems::RolloutOverrides;
pub use error::{Error, Result};
pub use plan::ExperimentPlan;
pub use run::{
    run_balance_sweep, run_plan, run_specs, GroupCurve, ResultBundle, RunResult, RunSpec,
};
pub use summary::{summarize, summarize_dir, MethodSummary, Summary};

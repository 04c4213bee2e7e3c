//! Declarative experiment plans, read from TOML or JSON.

use std::path::{Path, PathBuf};

use cdexplore_core::explorer::{ExplorerConfig, Method, Roi};
use cdexplore_core::systems::{RolloutConfig, RolloutOverrides, SystemKind};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn default_budget() -> usize {
    1000
}

fn default_n_init() -> usize {
    250
}

fn default_balance() -> f64 {
    0.5
}

fn default_subspace_dims() -> usize {
    3
}

fn default_roi() -> Roi {
    Roi::volume(0.6, 0.7)
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub system: SystemKind,
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default = "default_n_init")]
    pub n_init: usize,
    #[serde(default = "default_roi")]
    pub roi: Roi,
    /// Constrained-mode probability of NRAB runs outside a sweep.
    #[serde(default = "default_balance")]
    pub balance_prob: f64,
    /// NRAB balance values for `sweep-balance`.
    #[serde(default)]
    pub balance_sweep: Option<Vec<f64>>,
    #[serde(default = "default_subspace_dims")]
    pub subspace_dims: usize,
    /// Raw-unit mutation scales; the system's defaults when absent.
    #[serde(default)]
    pub mutation_sigmas: Option<Vec<f64>>,
    #[serde(default)]
    pub rollout: RolloutOverrides,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
}

impl ExperimentPlan {
    /// A plan with default settings for every other field.
    pub fn new(system: SystemKind, methods: Vec<Method>, seeds: Vec<u64>) -> Self {
        Self {
            system,
            methods,
            seeds,
            budget: default_budget(),
            n_init: default_n_init(),
            roi: default_roi(),
            balance_prob: default_balance(),
            balance_sweep: None,
            subspace_dims: default_subspace_dims(),
            mutation_sigmas: None,
            rollout: RolloutOverrides::default(),
            output_dir: default_output(),
        }
    }

    /// Reads a plan, choosing the format from the extension (`.json`, otherwise TOML).
    /// A relative `output_dir` resolves against the plan file's directory.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut plan = if path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("json"))
        {
            Self::from_json(&text)?
        } else {
            Self::from_toml(&text)?
        };
        if plan.output_dir.is_relative() {
            if let Some(parent) = path.parent() {
                plan.output_dir = parent.join(&plan.output_dir);
            }
        }
        Ok(plan)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let plan: Self = toml::from_str(text).map_err(|e| Error::Plan(e.to_string()))?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let plan: Self = serde_json::from_str(text).map_err(|e| Error::Plan(e.to_string()))?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn rollout_config(&self) -> RolloutConfig {
        self.rollout.apply(RolloutConfig::for_kind(self.system))
    }

    pub fn explorer_config(&self, method: Method, seed: u64, balance_prob: f64) -> ExplorerConfig {
        ExplorerConfig {
            method,
            n_init: self.n_init,
            budget: self.budget,
            balance_prob,
            subspace_dims: self.subspace_dims,
            mutation_sigmas: self.mutation_sigmas.clone(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::Plan("methods must not be empty".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Plan("seeds must not be empty".into()));
        }
        self.explorer_config(Method::NRAB, 0, self.balance_prob)
            .validate()?;
        self.roi.validate()?;
        self.rollout_config().validate().map_err(Error::Plan)?;
        if let Some(sweep) = &self.balance_sweep {
            if sweep.is_empty() {
                return Err(Error::Plan("balance_sweep must not be empty".into()));
            }
            if let Some(b) = sweep.iter().find(|b| !(0.0..=1.0).contains(*b)) {
                return Err(Error::Plan(format!("balance value {b} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

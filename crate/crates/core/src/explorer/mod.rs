//! Goal exploration with an inlier/outlier-augmented history.
//!
//! Each run owns one master seed. Every source of randomness draws from its own
//! ChaCha8 stream of that seed, so switching a method only changes the streams
//! that method actually consumes.

pub mod policy;
pub mod roi;

use std::fmt;
use std::ops::ControlFlow;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{BehaviorVector, ConstraintFeatures, ObservationFeatures};
use crate::grid::Grid2D;
use crate::params::{mutate, ParamVector};
use crate::scalar::Scalar;
use crate::systems::{is_homogeneous, System, HOMOGENEITY_TOL};

pub use policy::{draw_axes, sample_goal, select_candidate, Mode};
pub use roi::{classify, Constraint, Roi, INLIER, OUTLIER};

/// Behavior-space dimension.
pub const BEHAVIOR_DIM: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    /// Uniform random parameters.
    R,
    /// Nearest neighbour over the full behavior space.
    N,
    /// Nearest neighbour over random axis subsets.
    NRA,
    /// `NRA` with a Bernoulli choice between inlier-only and global candidates.
    NRAB,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::R, Method::N, Method::NRA, Method::NRAB];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::R => "R",
            Method::N => "N",
            Method::NRA => "NRA",
            Method::NRAB => "NRAB",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "R" => Ok(Method::R),
            "N" => Ok(Method::N),
            "NRA" => Ok(Method::NRA),
            "NRAB" => Ok(Method::NRAB),
            _ => Err(Error::InvalidConfig(format!("unknown method `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExplorerConfig {
    pub method: Method,
    pub n_init: usize,
    pub budget: usize,
    pub balance_prob: f64,
    pub subspace_dims: usize,
    /// Per-parameter mutation scales in raw units; `None` uses the system's.
    pub mutation_sigmas: Option<Vec<f64>>,
    pub seed: u64,
}

impl Default for ExplorerConfig {
    fn default() -> Self {
        Self {
            method: Method::NRAB,
            n_init: 250,
            budget: 1000,
            balance_prob: 0.5,
            subspace_dims: 3,
            mutation_sigmas: None,
            seed: 0,
        }
    }
}

impl ExplorerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n_init == 0 {
            return bad("n_init must be at least 1".into());
        }
        if self.n_init > self.budget {
            return bad(format!(
                "n_init ({}) exceeds budget ({})",
                self.n_init, self.budget
            ));
        }
        if !(0.0..=1.0).contains(&self.balance_prob) {
            return bad(format!("balance_prob {} outside [0, 1]", self.balance_prob));
        }
        if self.subspace_dims == 0 || self.subspace_dims > BEHAVIOR_DIM {
            return bad(format!("subspace_dims must be in 1..={BEHAVIOR_DIM}"));
        }
        if let Some(s) = &self.mutation_sigmas {
            if s.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return bad("mutation sigmas must be finite and non-negative".into());
            }
        }
        Ok(())
    }
}

/// How an entry's parameters were produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Origin {
    Random,
    Mutation { source: usize, mode: Mode },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry<T> {
    pub index: usize,
    pub params: ParamVector<T>,
    pub observation: Grid2D<T>,
    pub behavior: BehaviorVector<T>,
    pub constraint_features: ConstraintFeatures<T>,
    pub classification: i8,
    pub origin: Origin,
    /// The rollout failed and the constant-0 observation was recorded.
    pub invalid: bool,
    /// The final system state had no spatial variation.
    pub homogeneous: bool,
}

impl<T: Scalar> HistoryEntry<T> {
    pub fn is_inlier(&self) -> bool {
        self.classification == INLIER
    }
}

/// Append-only record of every sample. Only classifications change after
/// insertion, through [`History::update_roi`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct History<T> {
    entries: Vec<HistoryEntry<T>>,
    behaviors: Vec<[T; BEHAVIOR_DIM]>,
    classifications: Vec<i8>,
}

impl<T: Scalar> History<T> {
    pub fn new() -> Self {
        Self {
            entries: Vec::new(),
            behaviors: Vec::new(),
            classifications: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[HistoryEntry<T>] {
        &self.entries
    }

    pub fn get(&self, index: usize) -> Option<&HistoryEntry<T>> {
        self.entries.get(index)
    }

    pub fn behaviors(&self) -> &[[T; BEHAVIOR_DIM]] {
        &self.behaviors
    }

    pub fn classifications(&self) -> &[i8] {
        &self.classifications
    }

    pub fn inlier_count(&self) -> usize {
        self.classifications
            .iter()
            .filter(|&&c| c == INLIER)
            .count()
    }

    /// Appends `entry`, overwriting its index with the next position.
    pub fn push(&mut self, mut entry: HistoryEntry<T>) -> &HistoryEntry<T> {
        entry.index = self.entries.len();
        self.behaviors.push(entry.behavior.to_array());
        self.classifications.push(entry.classification);
        self.entries.push(entry);
        self.entries.last().expect("just pushed")
    }

    /// Re-classify every entry from its stored constraint features. Returns the
    /// inlier count. On error nothing changes.
    pub fn update_roi(&mut self, roi: &Roi) -> Result<usize> {
        roi.validate()?;
        let new: Vec<i8> = self
            .entries
            .iter()
            .map(|e| classify(&e.constraint_features, roi))
            .collect::<Result<_>>()?;
        for (e, &c) in self.entries.iter_mut().zip(&new) {
            e.classification = c;
        }
        self.classifications = new;
        Ok(self.inlier_count())
    }
}

/// Sub-stream ids of the master seed.
mod stream {
    pub const INIT: u64 = 1;
    pub const GOAL: u64 = 2;
    pub const AXES: u64 = 3;
    pub const BERNOULLI: u64 = 4;
    pub const MUTATION: u64 = 5;
    pub const ROLLOUT_INIT: u64 = 6;
}

fn sub_stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

#[derive(Debug, Clone)]
struct Streams {
    init: ChaCha8Rng,
    goal: ChaCha8Rng,
    axes: ChaCha8Rng,
    bernoulli: ChaCha8Rng,
    mutation: ChaCha8Rng,
}

impl Streams {
    fn new(seed: u64) -> Self {
        Self {
            init: sub_stream(seed, stream::INIT),
            goal: sub_stream(seed, stream::GOAL),
            axes: sub_stream(seed, stream::AXES),
            bernoulli: sub_stream(seed, stream::BERNOULLI),
            mutation: sub_stream(seed, stream::MUTATION),
        }
    }
}

/// Parameters chosen for the next sample, before the rollout.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal<T> {
    pub params: ParamVector<T>,
    pub origin: Origin,
}

/// Outcome of rolling out and featurizing one proposal; classification is
/// deferred to [`Explorer::commit`] so a ROI edit in between is honoured.
#[derive(Debug, Clone)]
pub struct Evaluation<T> {
    pub proposal: Proposal<T>,
    pub observation: Grid2D<T>,
    pub features: ObservationFeatures<T>,
    pub invalid: bool,
    pub homogeneous: bool,
}

/// Exploration state of one run.
pub struct Explorer<T: Scalar> {
    system: Arc<dyn System<T>>,
    config: ExplorerConfig,
    sigmas: Vec<T>,
    roi: Roi,
    history: History<T>,
    streams: Streams,
    init_seed: u64,
}

impl<T: Scalar> fmt::Debug for Explorer<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Explorer")
            .field("system", &self.system.kind())
            .field("config", &self.config)
            .field("roi", &self.roi)
            .field("len", &self.history.len())
            .finish()
    }
}

impl<T: Scalar> Explorer<T> {
    pub fn new(system: Arc<dyn System<T>>, config: ExplorerConfig, roi: Roi) -> Result<Self> {
        config.validate()?;
        roi.validate()?;
        let space = system.param_space();
        let sigmas = match &config.mutation_sigmas {
            Some(s) if s.len() != space.len() => {
                return Err(Error::InvalidConfig(format!(
                    "{} mutation sigmas for {} parameters",
                    s.len(),
                    space.len()
                )))
            }
            Some(s) => s.iter().map(|&v| T::lit(v)).collect(),
            None => space.sigmas(),
        };
        let init_seed = sub_stream(config.seed, stream::ROLLOUT_INIT).next_u64();
        Ok(Self {
            streams: Streams::new(config.seed),
            system,
            config,
            sigmas,
            roi,
            history: History::new(),
            init_seed,
        })
    }

    pub fn system(&self) -> &Arc<dyn System<T>> {
        &self.system
    }

    pub fn config(&self) -> &ExplorerConfig {
        &self.config
    }

    pub fn roi(&self) -> &Roi {
        &self.roi
    }

    pub fn history(&self) -> &History<T> {
        &self.history
    }

    pub fn into_history(self) -> History<T> {
        self.history
    }

    /// Seed of the initial state shared by every rollout of this run.
    pub fn init_seed(&self) -> u64 {
        self.init_seed
    }

    pub fn is_done(&self) -> bool {
        self.history.len() >= self.config.budget
    }

    /// Changes the constrained-mode probability for subsequent steps.
    pub fn set_balance_prob(&mut self, p: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidConfig(format!(
                "balance_prob {p} outside [0, 1]"
            )));
        }
        self.config.balance_prob = p;
        Ok(())
    }

    /// Replaces the ROI and re-classifies the history. Returns the inlier count.
    pub fn set_roi(&mut self, roi: Roi) -> Result<usize> {
        let count = self.history.update_roi(&roi)?;
        self.roi = roi;
        Ok(count)
    }

    /// Picks the next parameters from the current history.
    pub fn propose(&mut self) -> Proposal<T> {
        let space = self.system.param_space();
        if self.history.len() < self.config.n_init || self.config.method == Method::R {
            return Proposal {
                params: space.sample_uniform(&mut self.streams.init),
                origin: Origin::Random,
            };
        }
        let behaviors = self.history.behaviors();
        let goal = sample_goal(behaviors, &mut self.streams.goal);
        let axes = match self.config.method {
            Method::N => (0..BEHAVIOR_DIM).collect(),
            _ => draw_axes(
                BEHAVIOR_DIM,
                self.config.subspace_dims,
                &mut self.streams.axes,
            ),
        };
        let mode = if self.config.method == Method::NRAB
            && self.streams.bernoulli.random_bool(self.config.balance_prob)
        {
            Mode::Constrained
        } else {
            Mode::Global
        };
        let source = select_candidate(
            behaviors,
            self.history.classifications(),
            &goal,
            mode,
            &axes,
        );
        let params = mutate(
            space,
            &self.history.entries()[source].params,
            &self.sigmas,
            &mut self.streams.mutation,
        );
        Proposal {
            params,
            origin: Origin::Mutation { source, mode },
        }
    }

    /// Rolls out a proposal and extracts its features. Does not touch the history.
    pub fn evaluate(&self, proposal: Proposal<T>) -> Evaluation<T> {
        evaluate(self.system.as_ref(), self.init_seed, proposal)
    }

    /// Classifies an evaluation under the current ROI and appends it.
    pub fn commit(&mut self, eval: Evaluation<T>) -> &HistoryEntry<T> {
        let classification =
            classify(&eval.features.constraints, &self.roi).expect("roi validated on set");
        self.history.push(HistoryEntry {
            index: 0,
            params: eval.proposal.params,
            observation: eval.observation,
            behavior: eval.features.behavior,
            constraint_features: eval.features.constraints,
            classification,
            origin: eval.proposal.origin,
            invalid: eval.invalid,
            homogeneous: eval.homogeneous,
        })
    }

    /// One full sample: propose, evaluate, commit.
    pub fn step(&mut self) -> &HistoryEntry<T> {
        let proposal = self.propose();
        let eval = self.evaluate(proposal);
        self.commit(eval)
    }
}

/// Rollout plus feature extraction. Failed rollouts yield the system's invalid
/// observation and count as homogeneous.
pub fn evaluate<T: Scalar>(
    system: &dyn System<T>,
    init_seed: u64,
    proposal: Proposal<T>,
) -> Evaluation<T> {
    let (observation, invalid, homogeneous) =
        match system.rollout(&proposal.params.values, init_seed) {
            Ok(state) => {
                let homogeneous = is_homogeneous(&state, T::lit(HOMOGENEITY_TOL));
                (system.observe(&state), false, homogeneous)
            }
            Err(_) => (system.invalid_observation(), true, true),
        };
    let features = ObservationFeatures::extract(&observation);
    Evaluation {
        proposal,
        observation,
        features,
        invalid,
        homogeneous,
    }
}

/// Running totals handed to the progress callback.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Progress {
    pub index: usize,
    pub inliers: usize,
    /// Inlier fraction among post-bootstrap samples, once there are any.
    pub acceptance: Option<f64>,
}

/// Runs a whole exploration. The callback sees every new entry and may stop
/// the run early by returning `ControlFlow::Break`; the partial history is
/// returned in that case.
pub fn run_exploration<T: Scalar>(
    system: Arc<dyn System<T>>,
    config: ExplorerConfig,
    roi: Roi,
    mut progress: impl FnMut(&HistoryEntry<T>, Progress) -> ControlFlow<()>,
) -> Result<History<T>> {
    let n_init = config.n_init;
    let mut explorer = Explorer::new(system, config, roi)?;
    let mut post_inliers = 0usize;
    let mut inliers = 0usize;
    while !explorer.is_done() {
        let entry = explorer.step();
        if entry.is_inlier() {
            inliers += 1;
            if entry.index >= n_init {
                post_inliers += 1;
            }
        }
        let post = (entry.index + 1).saturating_sub(n_init);
        let p = Progress {
            index: entry.index,
            inliers,
            acceptance: (post > 0).then(|| post_inliers as f64 / post as f64),
        };
        if progress(entry, p).is_break() {
            break;
        }
    }
    Ok(explorer.into_history())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{ParamDim, ParamSpace};
    use crate::systems::{RolloutConfig, SystemKind};

    /// Renders a disc whose radius and brightness are the two parameters.
    struct Disc {
        space: ParamSpace<f64>,
        config: RolloutConfig,
    }

    impl Disc {
        fn new() -> Self {
            let dims = vec![
                ParamDim {
                    name: "radius".into(),
                    lo: 0.0,
                    hi: 8.0,
                    sigma: 0.5,
                },
                ParamDim {
                    name: "level".into(),
                    lo: 0.0,
                    hi: 1.0,
                    sigma: 0.05,
                },
            ];
            let config = RolloutConfig {
                size: 16,
                steps: 1,
                ..RolloutConfig::gray_scott()
            };
            Self {
                space: ParamSpace::new(dims).unwrap(),
                config,
            }
        }
    }

    impl System<f64> for Disc {
        fn kind(&self) -> SystemKind {
            SystemKind::GrayScott
        }
        fn param_space(&self) -> &ParamSpace<f64> {
            &self.space
        }
        fn config(&self) -> &RolloutConfig {
            &self.config
        }
        fn rollout(&self, p: &[f64], _seed: u64) -> Result<Grid2D<f64>> {
            if p[1] > 0.98 {
                return Err(Error::DivergentRollout { step: 0 });
            }
            Ok(Grid2D::from_fn(16, 16, |x, y| {
                let d = ((x as f64 - 7.5).powi(2) + (y as f64 - 7.5).powi(2)).sqrt();
                if d < p[0] {
                    p[1]
                } else {
                    0.0
                }
            }))
        }
        fn observe(&self, s: &Grid2D<f64>) -> Grid2D<f64> {
            s.clone()
        }
    }

    fn disc() -> Arc<dyn System<f64>> {
        Arc::new(Disc::new())
    }

    fn cfg(method: Method, seed: u64) -> ExplorerConfig {
        ExplorerConfig {
            method,
            n_init: 20,
            budget: 80,
            seed,
            ..Default::default()
        }
    }

    fn run(config: ExplorerConfig, roi: Roi) -> History<f64> {
        run_exploration(disc(), config, roi, |_, _| ControlFlow::Continue(())).unwrap()
    }

    fn params(h: &History<f64>) -> Vec<Vec<f64>> {
        h.entries()
            .iter()
            .map(|e| e.params.values.clone())
            .collect()
    }

    #[test]
    fn budget_and_bootstrap() {
        let h = run(cfg(Method::NRAB, 1), Roi::volume(0.2, 0.4));
        assert_eq!(h.len(), 80);
        assert!(h.entries()[..20].iter().all(|e| e.origin == Origin::Random));
        assert!(h.entries()[20..]
            .iter()
            .all(|e| matches!(e.origin, Origin::Mutation { .. })));
        assert!(h.entries().iter().enumerate().all(|(i, e)| e.index == i));
    }

    #[test]
    fn bootstrap_is_shared_across_methods() {
        let r = run(cfg(Method::R, 4), Roi::volume(0.2, 0.4));
        for m in [Method::N, Method::NRA, Method::NRAB] {
            let h = run(cfg(m, 4), Roi::volume(0.2, 0.4));
            assert_eq!(params(&h)[..20], params(&r)[..20]);
        }
        let only_init = run(
            ExplorerConfig {
                budget: 20,
                ..cfg(Method::NRAB, 4)
            },
            Roi::volume(0.2, 0.4),
        );
        assert_eq!(params(&only_init), params(&r)[..20]);
    }

    #[test]
    fn deterministic() {
        let a = run(cfg(Method::NRAB, 7), Roi::volume(0.2, 0.4));
        let b = run(cfg(Method::NRAB, 7), Roi::volume(0.2, 0.4));
        assert_eq!(a, b);
        let c = run(cfg(Method::NRAB, 8), Roi::volume(0.2, 0.4));
        assert_ne!(params(&a), params(&c));
    }

    #[test]
    fn nrab_without_balance_is_nra() {
        for seed in 0..5 {
            let nra = run(cfg(Method::NRA, seed), Roi::volume(0.2, 0.4));
            let nrab = run(
                ExplorerConfig {
                    balance_prob: 0.0,
                    ..cfg(Method::NRAB, seed)
                },
                Roi::volume(0.2, 0.4),
            );
            assert_eq!(params(&nra), params(&nrab));
            assert_eq!(nra.classifications(), nrab.classifications());
        }
    }

    #[test]
    fn constrained_mode_picks_inliers() {
        let h = run(
            ExplorerConfig {
                balance_prob: 1.0,
                ..cfg(Method::NRAB, 3)
            },
            Roi::volume(0.2, 0.4),
        );
        for e in &h.entries()[20..] {
            if let Origin::Mutation { source, mode } = e.origin {
                assert_eq!(mode, Mode::Constrained);
                let had_inlier = h.classifications()[..e.index].contains(&INLIER);
                if had_inlier {
                    assert!(h.entries()[source].is_inlier());
                }
            }
        }
    }

    #[test]
    fn parameters_stay_in_bounds() {
        let h = run(
            ExplorerConfig {
                budget: 200,
                ..cfg(Method::N, 2)
            },
            Roi::unconstrained(),
        );
        let space = Disc::new().space;
        assert!(h.entries().iter().all(|e| space.contains(&e.params)));
    }

    #[test]
    fn failed_rollouts_record_black_observation() {
        let h = run(
            ExplorerConfig {
                budget: 200,
                ..cfg(Method::R, 5)
            },
            Roi::unconstrained(),
        );
        let bad: Vec<_> = h.entries().iter().filter(|e| e.invalid).collect();
        assert!(!bad.is_empty());
        for e in bad {
            assert!(e.homogeneous);
            assert!(e.observation.values().iter().all(|&v| v == 0.0));
            assert_eq!(e.behavior.to_array(), [0.0; 9]);
        }
    }

    #[test]
    fn roi_updates() {
        let mut h = run(
            ExplorerConfig {
                budget: 150,
                ..cfg(Method::NRAB, 6)
            },
            Roi::volume(0.2, 0.4),
        );
        let before = h.classifications().to_vec();
        assert_eq!(
            h.update_roi(&Roi::volume(0.2, 0.4)).unwrap(),
            h.inlier_count()
        );
        assert_eq!(h.classifications(), &before[..]);

        h.update_roi(&Roi::volume(0.25, 0.4)).unwrap();
        for (new, old) in h.classifications().iter().zip(&before) {
            assert!(
                *new == OUTLIER || *old == INLIER,
                "narrowing added an inlier"
            );
        }
        assert_eq!(h.update_roi(&Roi::volume(0.0, 1.0)).unwrap(), h.len());
        assert!(h.entries().iter().all(|e| e.is_inlier()));

        let snapshot = h.clone();
        assert!(h
            .update_roi(&Roi {
                constraints: vec![Constraint::new("area", 0.0, 1.0)]
            })
            .is_err());
        assert_eq!(h, snapshot);
    }

    #[test]
    fn callback_can_cancel() {
        let h = run_exploration(disc(), cfg(Method::NRA, 1), Roi::unconstrained(), |e, p| {
            assert_eq!(p.index, e.index);
            assert_eq!(p.acceptance.is_some(), e.index >= 20);
            if e.index == 29 {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        })
        .unwrap();
        assert_eq!(h.len(), 30);
    }

    #[test]
    fn step_matches_run() {
        let mut ex = Explorer::new(disc(), cfg(Method::NRAB, 9), Roi::volume(0.2, 0.4)).unwrap();
        while !ex.is_done() {
            let p = ex.propose();
            let e = ex.evaluate(p);
            ex.commit(e);
        }
        assert_eq!(
            ex.into_history(),
            run(cfg(Method::NRAB, 9), Roi::volume(0.2, 0.4))
        );
    }

    #[test]
    fn config_validation() {
        assert!(ExplorerConfig {
            n_init: 300,
            budget: 200,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(ExplorerConfig {
            balance_prob: 1.5,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(ExplorerConfig {
            subspace_dims: 10,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(ExplorerConfig::default().validate().is_ok());
        let bad_sigmas = ExplorerConfig {
            mutation_sigmas: Some(vec![0.1]),
            ..Default::default()
        };
        assert!(Explorer::new(disc(), bad_sigmas, Roi::unconstrained()).is_err());
        assert_eq!("nrab".parse::<Method>().unwrap(), Method::NRAB);
    }
}

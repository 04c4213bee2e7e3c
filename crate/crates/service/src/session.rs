//! Sessions: one driver thread per exploration, a command queue drained between
//! steps, and a published snapshot that request handlers read.

use std::sync::mpsc;
use std::sync::{Arc, RwLock};

use cdexplore_core::explorer::{Explorer, ExplorerConfig, Roi, INLIER};
use cdexplore_core::metrics::{
    self, BinningSpec, DiversityTracker, EvalSpace, CONSTRAINED_BINS, GLOBAL_BINS,
};
use cdexplore_core::systems::{RolloutConfig, SystemKind};
use cdexplore_core::{system, BehaviorVector, ConstraintFeatures, EvalEmbedding, HistoryEntry};
use serde::{Deserialize, Serialize};
use tokio::sync::{oneshot, watch};

/// Fewest samples the evaluation space can be fitted on.
const MIN_EVAL_SAMPLES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    Idle,
    Running,
    Paused,
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum Action {
    Run,
    Pause,
    Step { n: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IllegalTransition {
    pub from: SessionState,
    pub action: Action,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Census {
    pub inlier_count: usize,
    pub total: usize,
}

/// Events in the order they happened. Discoveries carry the history index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SessionEvent {
    Discovery {
        index: usize,
        classification: i8,
        params: Vec<f64>,
        behavior: BehaviorVector,
        constraint_features: ConstraintFeatures,
        thumbnail_url: String,
    },
    Metrics {
        index: usize,
        global_div: usize,
        constrained_div: usize,
        #[serde(skip_serializing_if = "Option::is_none")]
        acceptance: Option<f64>,
    },
    State {
        state: SessionState,
    },
    RoiApplied {
        inlier_count: usize,
        total: usize,
        roi: Roi,
    },
}

impl SessionEvent {
    pub fn name(&self) -> &'static str {
        match self {
            SessionEvent::Discovery { .. } => "discovery",
            SessionEvent::Metrics { .. } => "metrics",
            SessionEvent::State { .. } => "state",
            SessionEvent::RoiApplied { .. } => "roi_applied",
        }
    }

    /// History index the event refers to, if any.
    pub fn index(&self) -> Option<usize> {
        match self {
            SessionEvent::Discovery { index, .. } | SessionEvent::Metrics { index, .. } => {
                Some(*index)
            }
            _ => None,
        }
    }
}

/// Evaluation space and binning, fitted once on the bootstrap samples.
#[derive(Debug, Clone)]
pub struct LiveMetrics {
    pub space: EvalSpace,
    pub global_spec: BinningSpec,
    pub constrained_spec: BinningSpec,
}

/// What readers see. Replaced field by field under one write lock per step,
/// so an entry and its events always appear together.
#[derive(Debug)]
pub struct Snapshot {
    pub state: SessionState,
    pub roi: Roi,
    pub balance_prob: f64,
    pub entries: Vec<HistoryEntry>,
    pub embeddings: Vec<EvalEmbedding>,
    pub metrics: Option<LiveMetrics>,
    pub events: Vec<SessionEvent>,
    /// Position in `events` of each discovery, by history index.
    pub discovery_pos: Vec<usize>,
    pub global_div: usize,
    pub constrained_div: usize,
}

impl Snapshot {
    pub fn inlier_count(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| e.classification == INLIER)
            .count()
    }

    pub fn acceptance(&self, n_init: usize) -> Option<f64> {
        let classes: Vec<i8> = self.entries.iter().map(|e| e.classification).collect();
        metrics::acceptance_rate(&classes, n_init).ok()
    }

    /// First event position to send a client that already has discoveries `0..since`.
    pub fn replay_start(&self, since: usize) -> usize {
        match since.checked_sub(1) {
            None => 0,
            Some(last) => self
                .discovery_pos
                .get(last)
                .map_or(self.events.len(), |p| p + 1),
        }
    }

    fn push_event(&mut self, event: SessionEvent) {
        if let SessionEvent::Discovery { index, .. } = &event {
            debug_assert_eq!(*index, self.discovery_pos.len());
            self.discovery_pos.push(self.events.len());
        }
        self.events.push(event);
    }
}

pub(crate) enum Command {
    Control(
        Action,
        oneshot::Sender<Result<SessionState, IllegalTransition>>,
    ),
    PutRoi(Roi, oneshot::Sender<cdexplore_core::Result<Census>>),
    SetBalance(f64, oneshot::Sender<cdexplore_core::Result<f64>>),
}

/// State shared between the driver and request handlers.
pub struct Shared {
    pub snapshot: RwLock<Snapshot>,
    /// Bumped to the event count after every publish.
    pub changed: watch::Sender<usize>,
}

pub struct Session {
    pub id: String,
    pub system: SystemKind,
    pub config: ExplorerConfig,
    pub rollout: RolloutConfig,
    pub shared: Arc<Shared>,
    commands: mpsc::Sender<Command>,
}

impl Session {
    /// Validates nothing: callers check the configuration first.
    pub fn spawn(
        id: String,
        system_kind: SystemKind,
        config: ExplorerConfig,
        rollout: RolloutConfig,
        roi: Roi,
    ) -> cdexplore_core::Result<Arc<Self>> {
        let explorer = Explorer::new(
            system(system_kind, rollout.clone()),
            config.clone(),
            roi.clone(),
        )?;
        let (changed, _) = watch::channel(0);
        let shared = Arc::new(Shared {
            snapshot: RwLock::new(Snapshot {
                state: SessionState::Idle,
                roi,
                balance_prob: config.balance_prob,
                entries: Vec::new(),
                embeddings: Vec::new(),
                metrics: None,
                events: Vec::new(),
                discovery_pos: Vec::new(),
                global_div: 0,
                constrained_div: 0,
            }),
            changed,
        });
        let (tx, rx) = mpsc::channel();
        let driver = Driver {
            id: id.clone(),
            explorer,
            shared: shared.clone(),
            commands: rx,
            state: SessionState::Idle,
            steps_left: None,
            live: None,
        };
        std::thread::Builder::new()
            .name(format!("session-{id}"))
            .spawn(move || driver.run())
            .expect("spawn session driver");
        Ok(Arc::new(Self {
            id,
            system: system_kind,
            config,
            rollout,
            shared,
            commands: tx,
        }))
    }

    async fn request<R>(&self, make: impl FnOnce(oneshot::Sender<R>) -> Command) -> R {
        let (tx, rx) = oneshot::channel();
        self.commands.send(make(tx)).expect("session driver alive");
        rx.await.expect("session driver replies")
    }

    pub async fn control(&self, action: Action) -> Result<SessionState, IllegalTransition> {
        self.request(|tx| Command::Control(action, tx)).await
    }

    pub async fn put_roi(&self, roi: Roi) -> cdexplore_core::Result<Census> {
        self.request(|tx| Command::PutRoi(roi, tx)).await
    }

    pub async fn set_balance(&self, p: f64) -> cdexplore_core::Result<f64> {
        self.request(|tx| Command::SetBalance(p, tx)).await
    }

    pub fn snapshot(&self) -> std::sync::RwLockReadGuard<'_, Snapshot> {
        self.shared.snapshot.read().expect("snapshot lock")
    }

    pub fn thumbnail_url(id: &str, index: usize) -> String {
        format!("/sessions/{id}/patterns/{index}.png")
    }
}

struct Driver {
    id: String,
    explorer: Explorer<f64>,
    shared: Arc<Shared>,
    commands: mpsc::Receiver<Command>,
    state: SessionState,
    /// Remaining samples of a `step(n)` request.
    steps_left: Option<usize>,
    live: Option<Live>,
}

/// Driver-side metric state once the evaluation space exists.
struct Live {
    space: EvalSpace,
    tracker: DiversityTracker,
    embeddings: Vec<EvalEmbedding>,
}

impl Driver {
    fn run(mut self) {
        loop {
            let busy = self.state == SessionState::Running;
            let cmd = if busy {
                match self.commands.try_recv() {
                    Ok(c) => Some(c),
                    Err(mpsc::TryRecvError::Empty) => None,
                    Err(mpsc::TryRecvError::Disconnected) => return,
                }
            } else {
                match self.commands.recv() {
                    Ok(c) => Some(c),
                    Err(_) => return,
                }
            };
            match cmd {
                Some(c) => self.handle(c),
                None => self.step(),
            }
        }
    }

    fn publish(&self, f: impl FnOnce(&mut Snapshot)) {
        let len = {
            let mut snap = self.shared.snapshot.write().expect("snapshot lock");
            f(&mut snap);
            snap.events.len()
        };
        self.shared.changed.send_replace(len);
    }

    fn set_state(&mut self, state: SessionState) {
        if self.state != state {
            self.state = state;
            self.publish(|s| {
                s.state = state;
                s.push_event(SessionEvent::State { state });
            });
        }
    }

    fn handle(&mut self, cmd: Command) {
        match cmd {
            Command::Control(action, reply) => {
                let r = self.control(action);
                let _ = reply.send(r);
            }
            Command::PutRoi(roi, reply) => {
                let r = self.put_roi(roi);
                let _ = reply.send(r);
            }
            Command::SetBalance(p, reply) => {
                let r = self.explorer.set_balance_prob(p).map(|_| p);
                if r.is_ok() {
                    self.publish(|s| s.balance_prob = p);
                }
                let _ = reply.send(r);
            }
        }
    }

    fn control(&mut self, action: Action) -> Result<SessionState, IllegalTransition> {
        use SessionState::*;
        let illegal = Err(IllegalTransition {
            from: self.state,
            action,
        });
        match (self.state, action) {
            (Idle | Paused, Action::Run) => {
                self.steps_left = None;
                self.set_state(Running);
            }
            (Idle | Paused, Action::Step { n }) => {
                if n > 0 {
                    self.steps_left = Some(n);
                    self.set_state(Running);
                }
            }
            (Running, Action::Pause) => {
                self.steps_left = None;
                self.set_state(Paused);
            }
            _ => return illegal,
        }
        Ok(self.state)
    }

    fn put_roi(&mut self, roi: Roi) -> cdexplore_core::Result<Census> {
        let inlier_count = self.explorer.set_roi(roi.clone())?;
        let history = self.explorer.history();
        let total = history.len();
        let classes = history.classifications().to_vec();
        if let Some(live) = &mut self.live {
            live.tracker.reset_constrained(&live.embeddings, &classes);
        }
        let divs = self.live.as_ref().map(|l| l.tracker.current());
        let n_init = self.explorer.config().n_init;
        self.publish(|s| {
            for (e, &c) in s.entries.iter_mut().zip(&classes) {
                e.classification = c;
            }
            s.roi = roi.clone();
            s.push_event(SessionEvent::RoiApplied {
                inlier_count,
                total,
                roi,
            });
            if let (Some((g, c)), Some(last)) = (divs, total.checked_sub(1)) {
                s.constrained_div = c;
                let acceptance = s.acceptance(n_init);
                s.push_event(SessionEvent::Metrics {
                    index: last,
                    global_div: g,
                    constrained_div: c,
                    acceptance,
                });
            }
        });
        Ok(Census {
            inlier_count,
            total,
        })
    }

    fn step(&mut self) {
        let entry = self.explorer.step().clone();
        let index = entry.index;
        let n_init = self.explorer.config().n_init;

        // The evaluation space is fitted once, on the bootstrap samples.
        let mut fitted: Option<(LiveMetrics, Vec<EvalEmbedding>)> = None;
        let mut new_embedding = None;
        match &mut self.live {
            None if index + 1 >= n_init.max(MIN_EVAL_SAMPLES) => {
                let history = self.explorer.history();
                let obs: Vec<_> = history.entries().iter().map(|e| &e.observation).collect();
                match fit_live(&obs) {
                    Ok((metrics, embeddings)) => {
                        let mut tracker = DiversityTracker::new(
                            metrics.global_spec.clone(),
                            metrics.constrained_spec.clone(),
                        );
                        for (p, &c) in embeddings.iter().zip(history.classifications()) {
                            tracker.push(p, c == INLIER);
                        }
                        self.live = Some(Live {
                            space: metrics.space.clone(),
                            tracker,
                            embeddings: embeddings.clone(),
                        });
                        fitted = Some((metrics, embeddings));
                    }
                    Err(e) => {
                        tracing::warn!(session = %self.id, "evaluation space not fitted: {e}")
                    }
                }
            }
            None => {}
            Some(live) => {
                let p: EvalEmbedding = live.space.embed(&entry.observation);
                live.tracker.push(&p, entry.classification == INLIER);
                live.embeddings.push(p);
                new_embedding = Some(p);
            }
        }
        let divs = self.live.as_ref().map(|l| l.tracker.current());

        let id = self.id.clone();
        self.publish(|s| {
            s.push_event(SessionEvent::Discovery {
                index,
                classification: entry.classification,
                params: entry.params.values.clone(),
                behavior: entry.behavior,
                constraint_features: entry.constraint_features,
                thumbnail_url: Session::thumbnail_url(&id, index),
            });
            s.entries.push(entry);
            if let Some((live, emb)) = fitted {
                s.embeddings = emb;
                s.metrics = Some(live);
            } else if let Some(p) = new_embedding {
                s.embeddings.push(p);
            }
            if let Some((g, c)) = divs {
                s.global_div = g;
                s.constrained_div = c;
                let acceptance = s.acceptance(n_init);
                s.push_event(SessionEvent::Metrics {
                    index,
                    global_div: g,
                    constrained_div: c,
                    acceptance,
                });
            }
        });

        if self.explorer.is_done() {
            self.steps_left = None;
            self.set_state(SessionState::Done);
        } else if let Some(n) = self.steps_left.as_mut() {
            *n -= 1;
            if *n == 0 {
                self.steps_left = None;
                self.set_state(SessionState::Paused);
            }
        }
    }
}

fn fit_live(
    observations: &[&cdexplore_core::Grid],
) -> cdexplore_core::Result<(LiveMetrics, Vec<EvalEmbedding>)> {
    let space = EvalSpace::fit_observations(observations)?;
    let emb: Vec<EvalEmbedding> = observations.iter().map(|o| space.embed(o)).collect();
    let global_spec = BinningSpec::from_points(GLOBAL_BINS, &emb)?;
    let constrained_spec = BinningSpec::from_points(CONSTRAINED_BINS, &emb)?;
    Ok((
        LiveMetrics {
            space,
            global_spec,
            constrained_spec,
        },
        emb,
    ))
}

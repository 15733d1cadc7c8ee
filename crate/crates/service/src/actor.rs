//! The session owner task and the real-time simulator task.
//!
//! The owner task holds the only mutable [`Session`]. The simulator, job
//! tasks and API handlers reach it through a bounded message queue, so slow
//! backends never block event detection.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sonify_core::acquisition::{AcquisitionError, AcquisitionMethod, AssetMeta, AudioClip, SoundAsset};
use sonify_core::controller::{ControllerError, ParsedReply};
use sonify_core::engine::{ActionKind, EngineError, SimConfig};
use sonify_core::textualizer::textualize_captured;
use sonify_core::{ArEvent, AssetId, CandidateSet, EventId, EventType, Scene, SessionState, UserAction};
use thiserror::Error;
use tokio::sync::{broadcast, mpsc, oneshot, watch, Semaphore};

use crate::backends::Backends;
use crate::config::{Config, ConfigError};
use crate::jobs::{plan_specs, AcquisitionJob, JobSpec};
use crate::session::{CandidatesView, EventView, PlaybackDirective, Session, SessionError, SessionView};

const QUEUE_DEPTH: usize = 1024;
const STREAM_DEPTH: usize = 4096;

/// One message on the session stream. `seq` starts at 1 and has no gaps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamMessage {
    pub seq: u64,
    #[serde(flatten)]
    pub body: StreamBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StreamBody {
    NewEvent {
        event_id: EventId,
        event_type: EventType,
        text: String,
    },
    /// Every detected occurrence, new or repeated.
    Occurrence {
        event_id: EventId,
        timestamp: f64,
        /// Wall-clock seconds since session start when the simulator emitted it.
        emitted_wall: f64,
        occurrence_count: u64,
    },
    Job {
        job: AcquisitionJob,
    },
    Candidates {
        event_id: EventId,
        candidates: CandidateSet,
    },
    Playback(PlaybackDirective),
    Selection {
        event_id: EventId,
        asset_id: AssetId,
    },
}

impl StreamBody {
    pub fn kind(&self) -> &'static str {
        match self {
            StreamBody::NewEvent { .. } => "new_event",
            StreamBody::Occurrence { .. } => "occurrence",
            StreamBody::Job { .. } => "job",
            StreamBody::Candidates { .. } => "candidates",
            StreamBody::Playback(_) => "playback",
            StreamBody::Selection { .. } => "selection",
        }
    }
}

/// How a user-requested job uses the chosen asset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransferMode {
    /// Restyle the asset's audio with the prompt.
    #[default]
    Transfer,
    /// Generate a new sound from the asset's prompt plus the user's text.
    Similar,
}

type Reply<T> = oneshot::Sender<T>;

enum Msg {
    SimEvent {
        event: ArEvent,
        emitted_wall: f64,
    },
    View(Reply<SessionView>),
    Events(Reply<Vec<EventView>>),
    Candidates(EventId, Reply<Result<CandidatesView, SessionError>>),
    Select {
        event_id: EventId,
        asset_id: AssetId,
        reply: Reply<Result<(), SessionError>>,
    },
    Transfer {
        event_id: EventId,
        asset_id: AssetId,
        prompt: String,
        mode: TransferMode,
        reply: Reply<Result<AcquisitionJob, SessionError>>,
    },
    Alternatives {
        event_id: EventId,
        method: AcquisitionMethod,
        reply: Reply<Result<Vec<AssetMeta>, SessionError>>,
    },
    Audio(AssetId, Reply<Option<Arc<AudioClip>>>),
    Snapshot(Reply<Session>),
    WhenIdle(Reply<()>),
    Subscribe(Reply<(Vec<StreamMessage>, broadcast::Receiver<StreamMessage>)>),
}

/// Results reported back by controller and job tasks.
enum Work {
    ControllerDone {
        event_id: EventId,
        event_type: EventType,
        result: Result<ParsedReply, ControllerError>,
    },
    JobStarted(String),
    JobFinished {
        job_id: String,
        outcome: Result<Vec<SoundAsset>, AcquisitionError>,
    },
}

/// Cheap, cloneable access to a running session.
#[derive(Clone)]
pub struct SessionHandle {
    tx: mpsc::Sender<Msg>,
    started: Instant,
}

impl SessionHandle {
    /// Starts the owner task for `session`. Jobs run on at most
    /// `parallelism` concurrent tasks.
    pub fn spawn(session: Session, backends: Backends, parallelism: usize) -> Self {
        let (tx, rx) = mpsc::channel(QUEUE_DEPTH);
        let (work_tx, work_rx) = mpsc::channel(QUEUE_DEPTH);
        let (stream, _) = broadcast::channel(STREAM_DEPTH);
        let started = Instant::now();
        let owner = Owner {
            session,
            backends,
            jobs: Arc::new(Semaphore::new(parallelism.max(1))),
            work_tx,
            stream,
            history: Vec::new(),
            pending_controllers: 0,
            idle_waiters: Vec::new(),
            started,
        };
        tokio::spawn(owner.run(rx, work_rx));
        Self { tx, started }
    }

    pub fn started(&self) -> Instant {
        self.started
    }

    /// Wall-clock seconds since the session started.
    pub fn wall(&self) -> f64 {
        self.started.elapsed().as_secs_f64()
    }

    async fn ask<T>(&self, make: impl FnOnce(Reply<T>) -> Msg) -> Result<T, SessionError> {
        let (reply, rx) = oneshot::channel();
        self.tx.send(make(reply)).await.map_err(|_| SessionError::Closed)?;
        rx.await.map_err(|_| SessionError::Closed)
    }

    /// Feeds one detected event into the session.
    pub async fn sim_event(&self, event: ArEvent, emitted_wall: f64) -> Result<(), SessionError> {
        self.tx
            .send(Msg::SimEvent { event, emitted_wall })
            .await
            .map_err(|_| SessionError::Closed)
    }

    pub async fn view(&self) -> Result<SessionView, SessionError> {
        self.ask(Msg::View).await
    }

    pub async fn events(&self) -> Result<Vec<EventView>, SessionError> {
        self.ask(Msg::Events).await
    }

    pub async fn candidates(&self, event_id: EventId) -> Result<CandidatesView, SessionError> {
        self.ask(|r| Msg::Candidates(event_id, r)).await?
    }

    pub async fn select(&self, event_id: EventId, asset_id: AssetId) -> Result<(), SessionError> {
        self.ask(|reply| Msg::Select { event_id, asset_id, reply }).await?
    }

    /// Queues a transfer (or generate-similar) job seeded by `asset_id`.
    pub async fn request_transfer(
        &self,
        event_id: EventId,
        asset_id: AssetId,
        prompt: String,
        mode: TransferMode,
    ) -> Result<AcquisitionJob, SessionError> {
        self.ask(|reply| Msg::Transfer {
            event_id,
            asset_id,
            prompt,
            mode,
            reply,
        })
        .await?
    }

    pub async fn alternatives(&self, event_id: EventId, method: AcquisitionMethod) -> Result<Vec<AssetMeta>, SessionError> {
        self.ask(|reply| Msg::Alternatives { event_id, method, reply }).await?
    }

    pub async fn audio(&self, asset_id: AssetId) -> Result<Option<Arc<AudioClip>>, SessionError> {
        self.ask(|r| Msg::Audio(asset_id, r)).await
    }

    pub async fn snapshot(&self) -> Result<Session, SessionError> {
        self.ask(Msg::Snapshot).await
    }

    /// Resolves once every controller call and job caused by earlier
    /// messages has finished.
    pub async fn when_idle(&self) -> Result<(), SessionError> {
        self.ask(Msg::WhenIdle).await
    }

    /// Past stream messages plus a receiver for later ones, with no gap
    /// between them.
    pub async fn subscribe(&self) -> Result<(Vec<StreamMessage>, broadcast::Receiver<StreamMessage>), SessionError> {
        self.ask(Msg::Subscribe).await
    }
}

struct Owner {
    session: Session,
    backends: Backends,
    jobs: Arc<Semaphore>,
    work_tx: mpsc::Sender<Work>,
    stream: broadcast::Sender<StreamMessage>,
    history: Vec<StreamMessage>,
    pending_controllers: usize,
    idle_waiters: Vec<Reply<()>>,
    started: Instant,
}

impl Owner {
    async fn run(mut self, mut rx: mpsc::Receiver<Msg>, mut work_rx: mpsc::Receiver<Work>) {
        loop {
            tokio::select! {
                msg = rx.recv() => match msg {
                    Some(msg) => self.handle(msg),
                    None => break,
                },
                Some(work) = work_rx.recv() => self.handle_work(work),
            }
            if self.is_idle() {
                for w in self.idle_waiters.drain(..) {
                    let _ = w.send(());
                }
            }
        }
        tracing::debug!(session = %self.session.session_id, "session owner stopped");
    }

    fn wall(&self) -> f64 {
        self.started.elapsed().as_secs_f64()
    }

    fn is_idle(&self) -> bool {
        self.pending_controllers == 0 && self.session.active_jobs() == 0
    }

    fn publish(&mut self, body: StreamBody) {
        let msg = StreamMessage {
            seq: self.history.len() as u64 + 1,
            body,
        };
        self.history.push(msg.clone());
        let _ = self.stream.send(msg);
    }

    fn handle(&mut self, msg: Msg) {
        match msg {
            Msg::SimEvent { event, emitted_wall } => self.on_event(event, emitted_wall),
            Msg::View(r) => {
                let _ = r.send(self.session.view());
            }
            Msg::Events(r) => {
                let _ = r.send(self.session.event_views());
            }
            Msg::Candidates(id, r) => {
                let _ = r.send(self.session.candidates_view(&id));
            }
            Msg::Select { event_id, asset_id, reply } => {
                let res = self.session.select(&event_id, &asset_id);
                if res.is_ok() {
                    self.publish(StreamBody::Selection { event_id, asset_id });
                }
                let _ = reply.send(res);
            }
            Msg::Transfer {
                event_id,
                asset_id,
                prompt,
                mode,
                reply,
            } => {
                let _ = reply.send(self.user_job(&event_id, &asset_id, prompt, mode));
            }
            Msg::Alternatives { event_id, method, reply } => {
                let _ = reply.send(self.session.alternatives(&event_id, method));
            }
            Msg::Audio(id, r) => {
                let _ = r.send(self.session.assets.get(&id).cloned());
            }
            Msg::Snapshot(r) => {
                let _ = r.send(self.session.clone());
            }
            Msg::WhenIdle(r) => self.idle_waiters.push(r),
            Msg::Subscribe(r) => {
                let _ = r.send((self.history.clone(), self.stream.subscribe()));
            }
        }
    }

    fn on_event(&mut self, event: ArEvent, emitted_wall: f64) {
        let timestamp = event.timestamp;
        let reg = self.session.register(event.clone());
        if reg.is_new {
            let text = textualize_captured(&event).map(|t| t.text).unwrap_or_default();
            self.publish(StreamBody::NewEvent {
                event_id: reg.event_id.clone(),
                event_type: event.event_type,
                text,
            });
        }
        self.publish(StreamBody::Occurrence {
            event_id: reg.event_id.clone(),
            timestamp,
            emitted_wall,
            occurrence_count: reg.occurrence_count,
        });
        if let Some(p) = reg.playback {
            self.publish(StreamBody::Playback(p));
        }
        if reg.is_new {
            self.pending_controllers += 1;
            let backends = self.backends.clone();
            let work = self.work_tx.clone();
            let event_id = reg.event_id;
            tokio::spawn(async move {
                let result = backends.ask_controller(&event).await;
                let _ = work
                    .send(Work::ControllerDone {
                        event_id,
                        event_type: event.event_type,
                        result,
                    })
                    .await;
            });
        }
    }

    fn handle_work(&mut self, work: Work) {
        let now = self.wall();
        match work {
            Work::ControllerDone {
                event_id,
                event_type,
                result,
            } => {
                self.pending_controllers -= 1;
                match result {
                    Ok(parsed) => {
                        for d in &parsed.diagnostics {
                            tracing::debug!(event = %event_id, "controller reply: {d:?}");
                        }
                        for spec in plan_specs(parsed.commands.iter().map(|c| &c.command)) {
                            if let Err(e) = self.spawn_job(&event_id, event_type, spec) {
                                tracing::warn!("cannot queue job for {event_id}: {e}");
                            }
                        }
                    }
                    Err(e) => {
                        tracing::warn!(event = %event_id, "controller failed: {e}");
                        if let Ok(job) = self.session.controller_failed(&event_id, &e, now) {
                            self.publish(StreamBody::Job { job });
                        }
                    }
                }
            }
            Work::JobStarted(job_id) => {
                if let Ok(job) = self.session.job_started(&job_id, now) {
                    self.publish(StreamBody::Job { job });
                }
            }
            Work::JobFinished { job_id, outcome } => match self.session.job_finished(&job_id, outcome, now) {
                Ok(job) => {
                    if let Some(c) = self.session.candidates.get(&job.event_id) {
                        let body = StreamBody::Candidates {
                            event_id: job.event_id.clone(),
                            candidates: c.clone(),
                        };
                        self.publish(StreamBody::Job { job });
                        self.publish(body);
                    }
                }
                Err(e) => tracing::warn!("job {job_id}: {e}"),
            },
        }
    }

    fn spawn_job(&mut self, event_id: &EventId, event_type: EventType, spec: JobSpec) -> Result<AcquisitionJob, SessionError> {
        let job = self.session.add_job(event_id, &spec)?;
        self.publish(StreamBody::Job { job: job.clone() });
        let backends = self.backends.clone();
        let permits = self.jobs.clone();
        let work = self.work_tx.clone();
        let job_id = job.job_id.clone();
        tokio::spawn(async move {
            let Ok(_permit) = permits.acquire_owned().await else {
                return;
            };
            let _ = work.send(Work::JobStarted(job_id.clone())).await;
            let outcome = backends.run(&spec, event_type).await;
            let _ = work.send(Work::JobFinished { job_id, outcome }).await;
        });
        Ok(job)
    }

    fn user_job(
        &mut self,
        event_id: &EventId,
        asset_id: &AssetId,
        prompt: String,
        mode: TransferMode,
    ) -> Result<AcquisitionJob, SessionError> {
        let asset = self.session.asset(event_id, asset_id)?;
        let prompt = prompt.trim().to_owned();
        if prompt.is_empty() {
            return Err(SessionError::InvalidRequest("prompt must not be empty".into()));
        }
        let event_type = self
            .session
            .log
            .get(event_id)
            .map(|r| r.first_event.event_type)
            .ok_or_else(|| SessionError::UnknownEvent(event_id.clone()))?;
        let spec = match mode {
            TransferMode::Transfer => JobSpec::Transfer {
                prompt,
                seed: Some(asset),
            },
            TransferMode::Similar => JobSpec::Generate {
                prompt: format!("{} {prompt}", asset.meta.prompt_or_query).trim().to_owned(),
                parent: Some(asset),
            },
        };
        self.spawn_job(event_id, event_type, spec)
    }
}

/// Real-time pacing and scripted input for the simulator task.
#[derive(Debug, Clone)]
pub struct SimulatorOptions {
    pub dt: f64,
    /// Simulated seconds per wall-clock second.
    pub speed: f64,
    /// Stop once the session clock reaches this many seconds.
    pub duration: Option<f64>,
    /// Actions applied at the first step at or after their timestamp.
    pub script: Vec<UserAction>,
    pub sim: SimConfig,
}

impl Default for SimulatorOptions {
    fn default() -> Self {
        Self {
            dt: sonify_core::engine::DEFAULT_DT,
            speed: 1.0,
            duration: None,
            script: Vec::new(),
            sim: SimConfig::default(),
        }
    }
}

type ActionRequest = (ActionKind, Reply<Result<Vec<ArEvent>, EngineError>>);

/// Injects live user actions into a running simulator.
#[derive(Clone)]
pub struct SimulatorHandle {
    actions: mpsc::Sender<ActionRequest>,
    done: watch::Receiver<bool>,
}

impl SimulatorHandle {
    /// Applies `kind` at the current simulation time. Unknown ids are
    /// rejected without touching the simulation.
    pub async fn inject(&self, kind: ActionKind) -> Result<Vec<ArEvent>, SessionError> {
        let (reply, rx) = oneshot::channel();
        self.actions.send((kind, reply)).await.map_err(|_| SessionError::Closed)?;
        rx.await
            .map_err(|_| SessionError::Closed)?
            .map_err(|e| SessionError::InvalidRequest(e.to_string()))
    }

    /// Resolves when the simulator has stopped.
    pub async fn finished(&self) {
        let mut done = self.done.clone();
        let _ = done.wait_for(|d| *d).await;
    }
}

/// Runs `state` in real time, forwarding every event to `session`.
pub fn spawn_simulator(mut state: SessionState, session: SessionHandle, opts: SimulatorOptions) -> SimulatorHandle {
    let (actions, mut action_rx) = mpsc::channel::<ActionRequest>(64);
    let (done_tx, done) = watch::channel(false);
    tokio::spawn(async move {
        let period = Duration::from_secs_f64(opts.dt / opts.speed.max(1e-6));
        let mut tick = tokio::time::interval(period);
        tick.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Burst);
        let mut next = 0;
        let emit = |events: Vec<ArEvent>| {
            let session = session.clone();
            async move {
                for e in events {
                    let wall = session.wall();
                    if session.sim_event(e, wall).await.is_err() {
                        return false;
                    }
                }
                true
            }
        };
        loop {
            tokio::select! {
                _ = tick.tick() => {
                    if opts.duration.is_some_and(|d| state.time() >= d - 1e-9) {
                        break;
                    }
                    let mut events = Vec::new();
                    while next < opts.script.len() && opts.script[next].timestamp <= state.time() + 1e-9 {
                        match state.ingest_action(&opts.script[next]) {
                            Ok(evs) => events.extend(evs),
                            Err(e) => tracing::warn!("scripted action {next}: {e}"),
                        }
                        next += 1;
                    }
                    events.extend(state.step_physics(opts.dt));
                    if !emit(events).await {
                        break;
                    }
                }
                Some((kind, reply)) = action_rx.recv() => {
                    let action = UserAction { timestamp: state.time(), kind };
                    let res = state.ingest_action(&action);
                    let events = res.as_ref().map(Clone::clone).unwrap_or_default();
                    let _ = reply.send(res);
                    if !emit(events).await {
                        break;
                    }
                }
            }
        }
        let _ = done_tx.send(true);
    });
    SimulatorHandle { actions, done }
}

/// A running session with its simulator.
#[derive(Clone)]
pub struct LiveSession {
    pub session: SessionHandle,
    pub simulator: SimulatorHandle,
    pub scene: Arc<Scene>,
}

#[derive(Debug, Error)]
pub enum StartError {
    #[error(transparent)]
    Scene(#[from] sonify_core::scene::SceneError),
    #[error("materials: {0}")]
    Materials(#[from] sonify_core::material::MaterialError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// Loads the scene, assigns plane materials and starts the session owner
/// and simulator.
pub fn start_session(
    scene_path: &Path,
    config: &Config,
    session_id: Option<String>,
    opts: SimulatorOptions,
) -> Result<LiveSession, StartError> {
    let scene = Arc::new(Scene::load(scene_path)?);
    let materials = scene.resolve_materials()?;
    let backends = Backends::from_config(config)?;
    let session_id = session_id.unwrap_or_else(|| {
        let nanos = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_nanos());
        format!("live-{nanos:x}")
    });
    let session = Session::new(
        session_id,
        Some(scene_path.display().to_string()),
        materials.clone(),
        config.snapshot(),
    );
    let handle = SessionHandle::spawn(session, backends, config.executor.parallelism);
    let state = SessionState::new(scene.clone(), materials, opts.sim.clone());
    let simulator = spawn_simulator(state, handle.clone(), opts);
    Ok(LiveSession {
        session: handle,
        simulator,
        scene,
    })
}

/// Groups stream messages by kind, for quick inspection in tests and logs.
pub fn count_by_kind(messages: &[StreamMessage]) -> BTreeMap<&'static str, usize> {
    let mut out = BTreeMap::new();
    for m in messages {
        *out.entry(m.body.kind()).or_insert(0) += 1;
    }
    out
}

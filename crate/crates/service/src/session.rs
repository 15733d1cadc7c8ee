//! Session state owned by a single writer: the event log, candidates, jobs,
//! selections and the content-addressed asset store.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sonify_core::acquisition::{AcquisitionError, AcquisitionMethod, AssetMeta, AudioClip, SoundAsset};
use sonify_core::controller::ControllerError;
use sonify_core::textualizer::textualize_captured;
use sonify_core::{ArEvent, AssetId, CandidateSet, EventId, EventLog, EventRecord, EventType, MaterialLabel, PlaneId};
use thiserror::Error;

use crate::config::ConfigSnapshot;
use crate::jobs::{controller_failure_reason, AcquisitionJob, FailureKind, JobMethod, JobSpec, JobState};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SessionError {
    #[error("unknown event {0}")]
    UnknownEvent(EventId),
    #[error("unknown asset {0}")]
    UnknownAsset(AssetId),
    #[error("asset {asset_id} is not a candidate of {event_id}")]
    NotACandidate { event_id: EventId, asset_id: AssetId },
    #[error("unknown job {0}")]
    UnknownJob(String),
    #[error("{0}")]
    InvalidRequest(String),
    #[error("session has shut down")]
    Closed,
}

/// Instruction to play the selected asset for a new occurrence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaybackDirective {
    pub event_id: EventId,
    pub asset_id: AssetId,
    pub timestamp: f64,
}

/// Result of feeding one simulator event into the session.
#[derive(Debug, Clone, PartialEq)]
pub struct Registered {
    pub is_new: bool,
    pub event_id: EventId,
    pub occurrence_count: u64,
    pub playback: Option<PlaybackDirective>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub session_id: String,
    /// Scene file the session was started from, if any.
    pub scene_ref: Option<String>,
    /// Plane materials, frozen at session start.
    pub materials: BTreeMap<PlaneId, MaterialLabel>,
    pub log: EventLog,
    pub candidates: BTreeMap<EventId, CandidateSet>,
    /// In creation order.
    pub jobs: Vec<AcquisitionJob>,
    pub assets: BTreeMap<AssetId, Arc<AudioClip>>,
    pub config: ConfigSnapshot,
    /// Session clock: timestamp of the latest event seen.
    pub clock: f64,
}

/// Summary returned by `GET /session`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub scene_ref: Option<String>,
    pub clock: f64,
    pub materials: BTreeMap<PlaneId, MaterialLabel>,
    pub event_count: usize,
    pub asset_count: usize,
    pub jobs: BTreeMap<String, usize>,
    pub selections: BTreeMap<EventId, AssetId>,
}

/// One row of `GET /events`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventView {
    pub event_id: EventId,
    pub event_type: EventType,
    pub text: String,
    pub occurrence_count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected_asset: Option<AssetId>,
    pub candidate_count: usize,
    pub first_event: ArEvent,
}

/// Body of `GET /events/{id}/candidates`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatesView {
    pub candidates: CandidateSet,
    pub jobs: Vec<AcquisitionJob>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected_asset: Option<AssetId>,
}

impl Session {
    pub fn new(session_id: String, scene_ref: Option<String>, materials: BTreeMap<PlaneId, MaterialLabel>, config: ConfigSnapshot) -> Self {
        Self {
            session_id,
            scene_ref,
            materials,
            log: EventLog::new(),
            candidates: BTreeMap::new(),
            jobs: Vec::new(),
            assets: BTreeMap::new(),
            config,
            clock: 0.0,
        }
    }

    /// Records an occurrence. A repeat occurrence of an event with a
    /// selection yields a playback directive; nothing plays before a
    /// selection exists.
    pub fn register(&mut self, event: ArEvent) -> Registered {
        self.clock = self.clock.max(event.timestamp);
        let timestamp = event.timestamp;
        let (is_new, record) = self.log.register_event(event);
        let event_id = record.event_id.clone();
        let occurrence_count = record.occurrence_count;
        let playback = record.selected_asset.clone().map(|asset_id| PlaybackDirective {
            event_id: event_id.clone(),
            asset_id,
            timestamp,
        });
        if is_new {
            self.candidates.insert(event_id.clone(), CandidateSet::new(event_id.clone()));
        }
        Registered {
            is_new,
            event_id,
            occurrence_count,
            playback,
        }
    }

    fn record(&self, event_id: &EventId) -> Result<&EventRecord, SessionError> {
        self.log.get(event_id).ok_or_else(|| SessionError::UnknownEvent(event_id.clone()))
    }

    fn next_job_id(&self, event_id: &EventId) -> String {
        let n = self.jobs.iter().filter(|j| &j.event_id == event_id).count() + 1;
        format!("{event_id}/{n}")
    }

    /// Creates a Pending job for `spec`.
    pub fn add_job(&mut self, event_id: &EventId, spec: &JobSpec) -> Result<AcquisitionJob, SessionError> {
        self.record(event_id)?;
        let job = AcquisitionJob::new(
            self.next_job_id(event_id),
            event_id.clone(),
            spec.method(),
            spec.input(),
            self.clock,
        );
        self.jobs.push(job.clone());
        Ok(job)
    }

    /// Records a failed controller call as a single Failed job.
    pub fn controller_failed(&mut self, event_id: &EventId, err: &ControllerError, now: f64) -> Result<AcquisitionJob, SessionError> {
        self.record(event_id)?;
        let mut job = AcquisitionJob::new(
            self.next_job_id(event_id),
            event_id.clone(),
            JobMethod::Controller,
            String::new(),
            self.clock,
        );
        job.start(now).expect("fresh job is pending");
        job.fail(FailureKind::Controller, controller_failure_reason(err), now)
            .expect("job was just started");
        self.jobs.push(job.clone());
        Ok(job)
    }

    pub fn job(&self, job_id: &str) -> Option<&AcquisitionJob> {
        self.jobs.iter().find(|j| j.job_id == job_id)
    }

    fn job_mut(&mut self, job_id: &str) -> Result<&mut AcquisitionJob, SessionError> {
        self.jobs
            .iter_mut()
            .find(|j| j.job_id == job_id)
            .ok_or_else(|| SessionError::UnknownJob(job_id.to_owned()))
    }

    pub fn job_started(&mut self, job_id: &str, now: f64) -> Result<AcquisitionJob, SessionError> {
        let job = self.job_mut(job_id)?;
        job.start(now).map_err(|e| SessionError::InvalidRequest(e.to_string()))?;
        Ok(job.clone())
    }

    /// Stores produced assets, adds them to the event's candidates and
    /// finishes the job.
    pub fn job_finished(
        &mut self,
        job_id: &str,
        outcome: Result<Vec<SoundAsset>, AcquisitionError>,
        now: f64,
    ) -> Result<AcquisitionJob, SessionError> {
        let (event_id, method, created_at) = {
            let job = self.job_mut(job_id)?;
            (job.event_id.clone(), job.method, job.created_at)
        };
        match outcome {
            Ok(assets) => {
                let metas: Vec<AssetMeta> = assets
                    .iter()
                    .map(|a| AssetMeta {
                        created_at,
                        ..a.meta.clone()
                    })
                    .collect();
                for a in &assets {
                    self.assets.entry(a.id().clone()).or_insert_with(|| a.audio.clone());
                }
                if let (Some(m), Some(set)) = (method.acquisition_method(), self.candidates.get_mut(&event_id)) {
                    set.add(m, &metas);
                }
                let ids = metas.into_iter().map(|m| m.asset_id).collect();
                let job = self.job_mut(job_id)?;
                job.complete(ids, now).map_err(|e| SessionError::InvalidRequest(e.to_string()))?;
                Ok(job.clone())
            }
            Err(e) => {
                let job = self.job_mut(job_id)?;
                job.fail(FailureKind::from(&e), e.to_string(), now)
                    .map_err(|e| SessionError::InvalidRequest(e.to_string()))?;
                Ok(job.clone())
            }
        }
    }

    pub fn select(&mut self, event_id: &EventId, asset_id: &AssetId) -> Result<(), SessionError> {
        self.record(event_id)?;
        let is_candidate = self.candidates.get(event_id).is_some_and(|c| c.contains(asset_id));
        if !is_candidate {
            return Err(SessionError::NotACandidate {
                event_id: event_id.clone(),
                asset_id: asset_id.clone(),
            });
        }
        self.log.get_mut(event_id).expect("checked above").selected_asset = Some(asset_id.clone());
        Ok(())
    }

    pub fn selections(&self) -> BTreeMap<EventId, AssetId> {
        self.log
            .records()
            .iter()
            .filter_map(|r| r.selected_asset.clone().map(|a| (r.event_id.clone(), a)))
            .collect()
    }

    /// The stored asset `asset_id`, with the metadata it has among `event_id`'s
    /// candidates (or any event's, when it is not one of them).
    pub fn asset(&self, event_id: &EventId, asset_id: &AssetId) -> Result<SoundAsset, SessionError> {
        self.record(event_id)?;
        let audio = self
            .assets
            .get(asset_id)
            .ok_or_else(|| SessionError::UnknownAsset(asset_id.clone()))?;
        let meta = self
            .candidates
            .get(event_id)
            .and_then(|c| c.find(asset_id))
            .or_else(|| self.candidates.values().find_map(|c| c.find(asset_id)))
            .ok_or_else(|| SessionError::UnknownAsset(asset_id.clone()))?;
        Ok(SoundAsset {
            meta: meta.clone(),
            audio: audio.clone(),
        })
    }

    pub fn alternatives(&self, event_id: &EventId, method: AcquisitionMethod) -> Result<Vec<AssetMeta>, SessionError> {
        self.record(event_id)?;
        Ok(self
            .candidates
            .get(event_id)
            .map(|c| c.alternatives(method).to_vec())
            .unwrap_or_default())
    }

    pub fn candidates_view(&self, event_id: &EventId) -> Result<CandidatesView, SessionError> {
        let record = self.record(event_id)?;
        Ok(CandidatesView {
            candidates: self.candidates.get(event_id).cloned().unwrap_or_else(|| CandidateSet::new(event_id.clone())),
            jobs: self.jobs.iter().filter(|j| &j.event_id == event_id).cloned().collect(),
            selected_asset: record.selected_asset.clone(),
        })
    }

    pub fn event_views(&self) -> Vec<EventView> {
        self.log
            .records()
            .iter()
            .map(|r| EventView {
                event_id: r.event_id.clone(),
                event_type: r.first_event.event_type,
                text: textualize_captured(&r.first_event).map(|t| t.text).unwrap_or_default(),
                occurrence_count: r.occurrence_count,
                selected_asset: r.selected_asset.clone(),
                candidate_count: self.candidates.get(&r.event_id).map_or(0, |c| c.iter().count()),
                first_event: r.first_event.clone(),
            })
            .collect()
    }

    pub fn view(&self) -> SessionView {
        let mut jobs = BTreeMap::new();
        for j in &self.jobs {
            let key = match &j.state {
                JobState::Pending => "pending",
                JobState::Running => "running",
                JobState::Done => "done",
                JobState::Failed { .. } => "failed",
            };
            *jobs.entry(key.to_string()).or_insert(0) += 1;
        }
        SessionView {
            session_id: self.session_id.clone(),
            scene_ref: self.scene_ref.clone(),
            clock: self.clock,
            materials: self.materials.clone(),
            event_count: self.log.len(),
            asset_count: self.assets.len(),
            jobs,
            selections: self.selections(),
        }
    }

    pub fn active_jobs(&self) -> usize {
        self.jobs.iter().filter(|j| !j.state.is_terminal()).count()
    }
}

//! Acquisition jobs: one per controller command (recommendations share a
//! job), each moving Pending -> Running -> Done | Failed.

use serde::{Deserialize, Serialize};
use sonify_core::acquisition::{AcquisitionError, AcquisitionMethod, AssetId, SoundAsset};
use sonify_core::controller::{Command, ControllerError};
use sonify_core::EventId;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobMethod {
    /// The controller call itself; only appears when it fails.
    Controller,
    Recommend,
    Retrieve,
    Generate,
    Transfer,
}

impl JobMethod {
    pub fn acquisition_method(self) -> Option<AcquisitionMethod> {
        match self {
            JobMethod::Controller => None,
            JobMethod::Recommend => Some(AcquisitionMethod::Recommended),
            JobMethod::Retrieve => Some(AcquisitionMethod::Retrieved),
            JobMethod::Generate => Some(AcquisitionMethod::Generated),
            JobMethod::Transfer => Some(AcquisitionMethod::Transferred),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    ServiceUnavailable,
    EmptyResults,
    UnknownFilename,
    InvalidAudio,
    NoDefault,
    Io,
    Controller,
}

impl From<&AcquisitionError> for FailureKind {
    fn from(e: &AcquisitionError) -> Self {
        match e {
            AcquisitionError::UnknownFilename(_) => FailureKind::UnknownFilename,
            AcquisitionError::ServiceUnavailable(_) => FailureKind::ServiceUnavailable,
            AcquisitionError::EmptyResults(_) => FailureKind::EmptyResults,
            AcquisitionError::InvalidAudio(_) => FailureKind::InvalidAudio,
            AcquisitionError::NoDefault(_) => FailureKind::NoDefault,
            AcquisitionError::Io(_) => FailureKind::Io,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum JobState {
    Pending,
    Running,
    Done,
    Failed { kind: FailureKind, reason: String },
}

impl JobState {
    pub fn is_terminal(&self) -> bool {
        matches!(self, JobState::Done | JobState::Failed { .. })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("job {job_id}: cannot go from {from:?} to {to}")]
pub struct InvalidTransition {
    pub job_id: String,
    pub from: JobState,
    pub to: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionJob {
    pub job_id: String,
    pub event_id: EventId,
    pub method: JobMethod,
    /// Command payload(s) the job was created from.
    pub input: String,
    #[serde(flatten)]
    pub state: JobState,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub result: Vec<AssetId>,
    /// Session clock at creation.
    pub created_at: f64,
    /// Wall-clock seconds since the session started; not exported.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub started_at: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finished_at: Option<f64>,
}

impl AcquisitionJob {
    pub fn new(job_id: String, event_id: EventId, method: JobMethod, input: String, created_at: f64) -> Self {
        Self {
            job_id,
            event_id,
            method,
            input,
            state: JobState::Pending,
            result: Vec::new(),
            created_at,
            started_at: None,
            finished_at: None,
        }
    }

    fn invalid(&self, to: &'static str) -> InvalidTransition {
        InvalidTransition {
            job_id: self.job_id.clone(),
            from: self.state.clone(),
            to,
        }
    }

    pub fn start(&mut self, now: f64) -> Result<(), InvalidTransition> {
        if self.state != JobState::Pending {
            return Err(self.invalid("running"));
        }
        self.state = JobState::Running;
        self.started_at = Some(now);
        Ok(())
    }

    /// Done with the produced asset ids; an empty list counts as a failure
    /// so that Done always carries at least one asset.
    pub fn complete(&mut self, assets: Vec<AssetId>, now: f64) -> Result<(), InvalidTransition> {
        if assets.is_empty() {
            return self.fail(FailureKind::EmptyResults, "no assets produced".into(), now);
        }
        if self.state != JobState::Running {
            return Err(self.invalid("done"));
        }
        self.state = JobState::Done;
        self.result = assets;
        self.finished_at = Some(now);
        Ok(())
    }

    pub fn fail(&mut self, kind: FailureKind, reason: String, now: f64) -> Result<(), InvalidTransition> {
        if self.state != JobState::Running {
            return Err(self.invalid("failed"));
        }
        self.state = JobState::Failed { kind, reason };
        self.finished_at = Some(now);
        Ok(())
    }
}

/// What a job will execute.
#[derive(Debug, Clone, PartialEq)]
pub enum JobSpec {
    /// Filenames in controller order; the first that resolves is primary.
    Recommend(Vec<String>),
    Retrieve(String),
    Generate {
        prompt: String,
        /// Set for "generate similar" requests.
        parent: Option<SoundAsset>,
    },
    /// `seed == None` uses the configured default seed for the event type.
    Transfer {
        prompt: String,
        seed: Option<SoundAsset>,
    },
}

impl JobSpec {
    pub fn method(&self) -> JobMethod {
        match self {
            JobSpec::Recommend(_) => JobMethod::Recommend,
            JobSpec::Retrieve(_) => JobMethod::Retrieve,
            JobSpec::Generate { .. } => JobMethod::Generate,
            JobSpec::Transfer { .. } => JobMethod::Transfer,
        }
    }

    pub fn input(&self) -> String {
        match self {
            JobSpec::Recommend(names) => names.join("\n"),
            JobSpec::Retrieve(p) => p.clone(),
            JobSpec::Generate { prompt, parent: Some(a) } | JobSpec::Transfer { prompt, seed: Some(a) } => {
                format!("{prompt}\nfrom:{}", a.id())
            }
            JobSpec::Generate { prompt, .. } | JobSpec::Transfer { prompt, .. } => prompt.clone(),
        }
    }
}

/// Turns parsed controller commands into job specs: all recommendations
/// become one job (ranked, at most five names), every other command its own
/// job, in reply order.
pub fn plan_specs<'a>(commands: impl IntoIterator<Item = &'a Command>) -> Vec<JobSpec> {
    let mut specs = Vec::new();
    let mut recommend: Option<usize> = None;
    for cmd in commands {
        match cmd {
            Command::Recommend(name) => match recommend {
                Some(i) => {
                    if let JobSpec::Recommend(names) = &mut specs[i] {
                        if names.len() < 5 && !names.contains(name) {
                            names.push(name.clone());
                        }
                    }
                }
                None => {
                    recommend = Some(specs.len());
                    specs.push(JobSpec::Recommend(vec![name.clone()]));
                }
            },
            Command::Retrieve(p) => specs.push(JobSpec::Retrieve(p.clone())),
            Command::Generate(p) => specs.push(JobSpec::Generate {
                prompt: p.clone(),
                parent: None,
            }),
            Command::Transfer(p) => specs.push(JobSpec::Transfer {
                prompt: p.clone(),
                seed: None,
            }),
        }
    }
    specs
}

pub fn controller_failure_reason(e: &ControllerError) -> String {
    format!("controller: {e}")
}

//! Session export: `session.json` plus one WAV blob per stored asset.
//!
//! ```text
//! <dir>/session.json
//! <dir>/blobs/<asset_id>.wav
//! ```
//!
//! Wall-clock job timings are left out so that identical inputs export
//! byte-identical directories.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sonify_core::acquisition::AudioClip;
use sonify_core::{AssetId, CandidateSet, EventId, EventLog, EventRecord, MaterialLabel, PlaneId};
use thiserror::Error;

use crate::config::ConfigSnapshot;
use crate::jobs::AcquisitionJob;
use crate::session::Session;

pub const SCHEMA_VERSION: u32 = 1;
pub const SESSION_FILE: &str = "session.json";
pub const BLOB_DIR: &str = "blobs";

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("session schema mismatch: {0}")]
    SchemaMismatch(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionFile {
    pub schema_version: u32,
    pub session_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene_ref: Option<String>,
    pub clock: f64,
    pub materials: BTreeMap<PlaneId, MaterialLabel>,
    pub config: ConfigSnapshot,
    pub events: Vec<EventRecord>,
    pub candidates: BTreeMap<EventId, CandidateSet>,
    pub jobs: Vec<AcquisitionJob>,
}

impl SessionFile {
    pub fn from_session(session: &Session) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            session_id: session.session_id.clone(),
            scene_ref: session.scene_ref.clone(),
            clock: session.clock,
            materials: session.materials.clone(),
            config: session.config.clone(),
            events: session.log.records().to_vec(),
            candidates: session.candidates.clone(),
            jobs: session
                .jobs
                .iter()
                .map(|j| AcquisitionJob {
                    started_at: None,
                    finished_at: None,
                    ..j.clone()
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("session file serializes");
        s.push('\n');
        s
    }
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> ExportError + '_ {
    move |source| ExportError::Io {
        path: path.to_owned(),
        source,
    }
}

pub fn blob_path(dir: &Path, id: &AssetId) -> PathBuf {
    dir.join(BLOB_DIR).join(format!("{id}.wav"))
}

/// Writes `session` under `dir`, creating it if needed.
pub fn export_session(session: &Session, dir: &Path) -> Result<(), ExportError> {
    let blobs = dir.join(BLOB_DIR);
    std::fs::create_dir_all(&blobs).map_err(io(&blobs))?;
    for (id, clip) in &session.assets {
        let path = blob_path(dir, id);
        std::fs::write(&path, clip.to_wav_bytes()).map_err(io(&path))?;
    }
    let path = dir.join(SESSION_FILE);
    std::fs::write(&path, SessionFile::from_session(session).to_json()).map_err(io(&path))
}

/// Reads a session back. Every blob must exist and hash to its asset id.
pub fn import_session(dir: &Path) -> Result<Session, ExportError> {
    let path = dir.join(SESSION_FILE);
    let text = std::fs::read_to_string(&path).map_err(io(&path))?;
    let file: SessionFile =
        serde_json::from_str(&text).map_err(|e| ExportError::SchemaMismatch(e.to_string()))?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(ExportError::SchemaMismatch(format!(
            "unsupported schema_version {}",
            file.schema_version
        )));
    }
    let mut assets = BTreeMap::new();
    let referenced = file
        .candidates
        .values()
        .flat_map(|c| c.iter().map(|m| m.asset_id.clone()))
        .chain(file.jobs.iter().flat_map(|j| j.result.iter().cloned()));
    for id in referenced {
        if assets.contains_key(&id) {
            continue;
        }
        let path = blob_path(dir, &id);
        let bytes = std::fs::read(&path)
            .map_err(|e| ExportError::SchemaMismatch(format!("missing blob for asset {id}: {e}")))?;
        let clip = AudioClip::from_wav_bytes(&bytes)
            .map_err(|e| ExportError::SchemaMismatch(format!("blob for asset {id}: {e}")))?;
        if clip.content_id() != id {
            return Err(ExportError::SchemaMismatch(format!("blob for asset {id} does not match its hash")));
        }
        assets.insert(id, Arc::new(clip));
    }
    for r in &file.events {
        if let Some(sel) = &r.selected_asset {
            let ok = file.candidates.get(&r.event_id).is_some_and(|c| c.contains(sel));
            if !ok {
                return Err(ExportError::SchemaMismatch(format!(
                    "selection {sel} of {} is not a candidate",
                    r.event_id
                )));
            }
        }
    }
    Ok(Session {
        session_id: file.session_id,
        scene_ref: file.scene_ref,
        materials: file.materials,
        log: EventLog::from_records(file.events),
        candidates: file.candidates,
        jobs: file.jobs,
        assets,
        config: file.config,
        clock: file.clock,
    })
}

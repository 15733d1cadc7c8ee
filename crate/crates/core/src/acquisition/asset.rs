use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::AudioClip;
use crate::engine::EventId;

/// Content hash of an asset's audio (hex SHA-256 of its WAV bytes).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AssetId(pub String);

impl fmt::Display for AssetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for AssetId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AcquisitionMethod {
    Recommended,
    Retrieved,
    Generated,
    Transferred,
}

impl AcquisitionMethod {
    pub const ALL: [AcquisitionMethod; 4] = [
        AcquisitionMethod::Recommended,
        AcquisitionMethod::Retrieved,
        AcquisitionMethod::Generated,
        AcquisitionMethod::Transferred,
    ];

    /// Recommendation and retrieval produce ranked top-five lists.
    pub fn is_ranked(self) -> bool {
        matches!(self, AcquisitionMethod::Recommended | AcquisitionMethod::Retrieved)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "ref", rename_all = "snake_case")]
pub enum SourceRef {
    Library(String),
    Remote(String),
    Parent(AssetId),
}

/// Everything about an asset except its samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetMeta {
    pub asset_id: AssetId,
    pub method: AcquisitionMethod,
    pub prompt_or_query: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_ref: Option<SourceRef>,
    pub sample_rate: u32,
    pub sample_count: usize,
    /// Session clock when the asset was acquired.
    pub created_at: f64,
    /// Set when a backend's output was padded or truncated to the seed length.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub length_adjusted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoundAsset {
    pub meta: AssetMeta,
    pub audio: Arc<AudioClip>,
}

impl SoundAsset {
    pub fn new(
        audio: AudioClip,
        method: AcquisitionMethod,
        prompt_or_query: impl Into<String>,
        source_ref: Option<SourceRef>,
    ) -> Self {
        let meta = AssetMeta {
            asset_id: audio.content_id(),
            method,
            prompt_or_query: prompt_or_query.into(),
            source_ref,
            sample_rate: audio.sample_rate(),
            sample_count: audio.len(),
            created_at: 0.0,
            length_adjusted: false,
        };
        Self {
            meta,
            audio: Arc::new(audio),
        }
    }

    pub fn id(&self) -> &AssetId {
        &self.meta.asset_id
    }
}

const RANKED_LIMIT: usize = 5;

/// Candidates of one event, grouped by acquisition method. Ranked methods
/// keep their rank-1 result in `primary` and ranks 2-5 in `alternates`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub event_id: EventId,
    pub primary: BTreeMap<AcquisitionMethod, Vec<AssetMeta>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub alternates: BTreeMap<AcquisitionMethod, Vec<AssetMeta>>,
}

impl CandidateSet {
    pub fn new(event_id: EventId) -> Self {
        Self {
            event_id,
            primary: BTreeMap::new(),
            alternates: BTreeMap::new(),
        }
    }

    /// Adds a ranked or unranked result list for `method`. The first asset
    /// is primary; for ranked methods the rest become alternates, capped so
    /// the method holds at most five assets. Assets already present are
    /// skipped. Returns the ids that were actually added.
    pub fn add(&mut self, method: AcquisitionMethod, assets: &[AssetMeta]) -> Vec<AssetId> {
        let mut added = Vec::new();
        for (rank, meta) in assets.iter().enumerate() {
            if self.contains(&meta.asset_id) {
                continue;
            }
            let held = self.primary.get(&method).map_or(0, Vec::len)
                + self.alternates.get(&method).map_or(0, Vec::len);
            if method.is_ranked() && held >= RANKED_LIMIT {
                break;
            }
            let list = if method.is_ranked() && (rank > 0 || self.primary.contains_key(&method)) {
                self.alternates.entry(method).or_default()
            } else {
                self.primary.entry(method).or_default()
            };
            list.push(meta.clone());
            added.push(meta.asset_id.clone());
        }
        added
    }

    pub fn iter(&self) -> impl Iterator<Item = &AssetMeta> {
        self.primary.values().chain(self.alternates.values()).flatten()
    }

    pub fn find(&self, id: &AssetId) -> Option<&AssetMeta> {
        self.iter().find(|m| &m.asset_id == id)
    }

    pub fn contains(&self, id: &AssetId) -> bool {
        self.find(id).is_some()
    }

    /// Ranks 2-5 of a ranked method; empty for other methods.
    pub fn alternatives(&self, method: AcquisitionMethod) -> &[AssetMeta] {
        if !method.is_ranked() {
            return &[];
        }
        self.alternates.get(&method).map_or(&[], Vec::as_slice)
    }

    /// Methods with at least one primary candidate.
    pub fn methods(&self) -> impl Iterator<Item = AcquisitionMethod> + '_ {
        self.primary.iter().filter(|(_, v)| !v.is_empty()).map(|(m, _)| *m)
    }
}

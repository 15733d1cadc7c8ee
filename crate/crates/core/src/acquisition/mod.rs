//! The four acquisition methods: local recommendation, online retrieval,
//! text-to-audio generation and duration-preserving transfer.
//!
//! Network services sit behind [`RetrievalClient`] and [`GenerationClient`];
//! the mocks here are deterministic in their text inputs.

mod asset;
mod audio;
mod clients;
pub mod dsp;
mod library;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::EventType;
use crate::tokens::{overlap, token_set};

pub use asset::{AcquisitionMethod, AssetId, AssetMeta, CandidateSet, SoundAsset, SourceRef};
pub use audio::{AudioClip, SUPPORTED_RATES};
pub use clients::{
    corpus_audio, GenerationClient, MockGenerator, MockRetrieval, RetrievalClient, RetrievalHit,
};
pub use library::{LibraryEntry, LibraryIndex, LibrarySource};

pub const RETRIEVAL_TOP_K: usize = 5;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AcquisitionError {
    #[error("no library sound named {0:?}")]
    UnknownFilename(String),
    #[error("service unavailable: {0}")]
    ServiceUnavailable(String),
    #[error("no results for {0:?}")]
    EmptyResults(String),
    #[error("invalid audio: {0}")]
    InvalidAudio(String),
    #[error("no default seed configured for {0}")]
    NoDefault(EventType),
    #[error("io: {0}")]
    Io(String),
}

/// Resolves a recommended filename against the library (exact, then unique
/// case-insensitive match).
pub fn recommend_local(filename: &str, library: &LibraryIndex) -> Result<SoundAsset, AcquisitionError> {
    let entry = library
        .resolve(filename)
        .ok_or_else(|| AcquisitionError::UnknownFilename(filename.to_owned()))?;
    Ok(SoundAsset::new(
        entry.load()?,
        AcquisitionMethod::Recommended,
        filename,
        Some(SourceRef::Library(entry.filename.clone())),
    ))
}

/// Orders hits by token overlap between `query` and the hit's name and
/// description, best first; ties by name, then id.
pub fn rank_hits(query: &str, mut hits: Vec<RetrievalHit>) -> Vec<RetrievalHit> {
    let q = token_set(query);
    hits.sort_by_cached_key(|h| (std::cmp::Reverse(overlap(&q, &h.text())), h.name.clone(), h.id.clone()));
    hits
}

/// Searches, re-ranks, and downloads up to five hits. The first asset is the
/// primary candidate. Hits whose download fails are skipped; if none
/// succeed the last error is returned.
pub async fn retrieve_online(
    query: &str,
    client: &dyn RetrievalClient,
) -> Result<Vec<SoundAsset>, AcquisitionError> {
    let hits = client.search(query).await?;
    if hits.is_empty() {
        return Err(AcquisitionError::EmptyResults(query.to_owned()));
    }
    let mut assets = Vec::new();
    let mut last_err = None;
    for hit in rank_hits(query, hits).into_iter().take(RETRIEVAL_TOP_K) {
        match client.download(&hit).await {
            Ok(clip) => assets.push(SoundAsset::new(
                clip,
                AcquisitionMethod::Retrieved,
                query,
                Some(SourceRef::Remote(hit.id.clone())),
            )),
            Err(e) => last_err = Some(e),
        }
    }
    match (assets.is_empty(), last_err) {
        (true, Some(e)) => Err(e),
        _ => Ok(assets),
    }
}

pub async fn generate_sound(
    prompt: &str,
    client: &dyn GenerationClient,
) -> Result<SoundAsset, AcquisitionError> {
    let clip = client.generate(prompt).await?;
    Ok(SoundAsset::new(clip, AcquisitionMethod::Generated, prompt, None))
}

/// Restyles `seed` with `prompt`. The result always has the seed's length
/// and sample rate; a backend that returns a different length is padded or
/// truncated and the asset is flagged `length_adjusted`.
pub async fn transfer_sound(
    seed: &SoundAsset,
    prompt: &str,
    client: &dyn GenerationClient,
) -> Result<SoundAsset, AcquisitionError> {
    let out = client.transfer(&seed.audio, prompt).await?;
    if out.sample_rate() != seed.audio.sample_rate() {
        return Err(AcquisitionError::InvalidAudio(format!(
            "transfer changed sample rate from {} to {}",
            seed.audio.sample_rate(),
            out.sample_rate()
        )));
    }
    let adjusted = out.len() != seed.audio.len();
    let out = if adjusted { out.fit_to_len(seed.audio.len()) } else { out };
    let mut asset = SoundAsset::new(
        out,
        AcquisitionMethod::Transferred,
        prompt,
        Some(SourceRef::Parent(seed.id().clone())),
    );
    asset.meta.length_adjusted = adjusted;
    Ok(asset)
}

/// Library sounds used as transfer seeds for time-sensitive event types.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefaultSeeds {
    pub tap: Option<String>,
    pub slide: Option<String>,
    pub collide: Option<String>,
}

impl DefaultSeeds {
    pub fn for_event(&self, event_type: EventType) -> Option<&str> {
        match event_type {
            EventType::TapRealWorldStructure => self.tap.as_deref(),
            EventType::Slide => self.slide.as_deref(),
            EventType::Collide => self.collide.as_deref(),
            _ => None,
        }
    }
}

/// Default seed clip for a tap, slide or collide event.
pub fn default_seed_for(
    event_type: EventType,
    library: &LibraryIndex,
    seeds: &DefaultSeeds,
) -> Result<SoundAsset, AcquisitionError> {
    let name = seeds
        .for_event(event_type)
        .ok_or(AcquisitionError::NoDefault(event_type))?;
    recommend_local(name, library)
}

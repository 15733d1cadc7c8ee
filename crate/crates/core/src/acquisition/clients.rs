use async_trait::async_trait;
use serde::{Deserialize, Serialize};

use super::dsp;
use super::{AcquisitionError, AudioClip};
use crate::tokens::token_set;

/// One search hit from a FreeSound-style text search.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrievalHit {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub download_url: Option<String>,
}

impl RetrievalHit {
    /// Text compared against the query when ranking.
    pub fn text(&self) -> String {
        format!("{} {}", self.name, self.description)
    }
}

#[async_trait]
pub trait RetrievalClient: Send + Sync {
    async fn search(&self, query: &str) -> Result<Vec<RetrievalHit>, AcquisitionError>;
    async fn download(&self, hit: &RetrievalHit) -> Result<AudioClip, AcquisitionError>;
}

#[async_trait]
pub trait GenerationClient: Send + Sync {
    async fn generate(&self, prompt: &str) -> Result<AudioClip, AcquisitionError>;
    async fn transfer(&self, seed: &AudioClip, prompt: &str) -> Result<AudioClip, AcquisitionError>;
}

/// Audio served for a corpus entry by the mock retrieval service.
pub fn corpus_audio(id: &str) -> AudioClip {
    dsp::synth_partials(&format!("freesound:{id}"), 1.0, 16000)
}

/// In-process retrieval over a fixed corpus. A hit is any entry sharing at
/// least one token with the query, in corpus order.
#[derive(Debug, Clone, Default)]
pub struct MockRetrieval {
    corpus: Vec<RetrievalHit>,
}

impl MockRetrieval {
    pub fn new(corpus: Vec<RetrievalHit>) -> Self {
        Self { corpus }
    }

    /// Loads a JSON array of `{id, name, description}` objects.
    pub fn from_json(json: &str) -> Result<Self, AcquisitionError> {
        serde_json::from_str(json)
            .map(Self::new)
            .map_err(|e| AcquisitionError::Io(format!("retrieval corpus: {e}")))
    }

    pub fn corpus(&self) -> &[RetrievalHit] {
        &self.corpus
    }

    pub fn search_sync(&self, query: &str) -> Vec<RetrievalHit> {
        let q = token_set(query);
        self.corpus
            .iter()
            .filter(|h| token_set(&h.text()).intersection(&q).next().is_some())
            .cloned()
            .collect()
    }

    pub fn lookup(&self, id: &str) -> Option<&RetrievalHit> {
        self.corpus.iter().find(|h| h.id == id)
    }
}

#[async_trait]
impl RetrievalClient for MockRetrieval {
    async fn search(&self, query: &str) -> Result<Vec<RetrievalHit>, AcquisitionError> {
        Ok(self.search_sync(query))
    }

    async fn download(&self, hit: &RetrievalHit) -> Result<AudioClip, AcquisitionError> {
        self.lookup(&hit.id)
            .map(|h| corpus_audio(&h.id))
            .ok_or_else(|| AcquisitionError::InvalidAudio(format!("no audio for sound {}", hit.id)))
    }
}

/// In-process generation backed by [`dsp::mock_generate`] and
/// [`dsp::mock_transfer`].
#[derive(Debug, Clone, Copy, Default)]
pub struct MockGenerator;

#[async_trait]
impl GenerationClient for MockGenerator {
    async fn generate(&self, prompt: &str) -> Result<AudioClip, AcquisitionError> {
        Ok(dsp::mock_generate(prompt))
    }

    async fn transfer(&self, seed: &AudioClip, prompt: &str) -> Result<AudioClip, AcquisitionError> {
        Ok(dsp::mock_transfer(seed, prompt))
    }
}

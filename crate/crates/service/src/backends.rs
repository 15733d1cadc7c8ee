//! The set of backends a session talks to, and job execution against them.

use std::sync::Arc;
use std::time::Duration;

use sonify_core::acquisition::{
    default_seed_for, generate_sound, recommend_local, retrieve_online, transfer_sound, AcquisitionError,
    DefaultSeeds, GenerationClient, LibraryIndex, MockGenerator, MockRetrieval, RetrievalClient, SoundAsset,
    SourceRef,
};
use sonify_core::controller::{
    build_controller_request, parse_commands, BackendOptions, ControllerBackend, ControllerError, MockController,
    ParsedReply,
};
use sonify_core::{ArEvent, EventType};
use sonify_core::textualizer::textualize_captured;

use crate::clients::{ChatController, FreesoundClient, HttpGenerator};
use crate::config::{Config, ConfigError, ControllerBackendKind, ServiceBackendKind};
use crate::jobs::JobSpec;

#[derive(Clone)]
pub struct Backends {
    pub controller: Arc<dyn ControllerBackend>,
    pub retrieval: Arc<dyn RetrievalClient>,
    pub generation: Arc<dyn GenerationClient>,
    pub library: Arc<LibraryIndex>,
    pub seeds: DefaultSeeds,
    pub options: BackendOptions,
}

impl Backends {
    pub fn from_config(cfg: &Config) -> Result<Self, ConfigError> {
        let controller: Arc<dyn ControllerBackend> = match cfg.controller.backend {
            ControllerBackendKind::Mock => Arc::new(MockController),
            ControllerBackendKind::Openai => Arc::new(ChatController::new(
                cfg.controller.endpoint.clone(),
                cfg.controller.api_key.clone(),
            )),
        };
        let retrieval: Arc<dyn RetrievalClient> = match cfg.retrieval.backend {
            ServiceBackendKind::Mock => {
                let path = cfg.retrieval.corpus.as_ref().expect("validated");
                let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
                    path: path.clone(),
                    source,
                })?;
                Arc::new(MockRetrieval::from_json(&text).map_err(|e| ConfigError::Invalid(e.to_string()))?)
            }
            ServiceBackendKind::Http => Arc::new(FreesoundClient::new(
                cfg.retrieval.endpoint.clone(),
                cfg.retrieval.api_key.clone(),
                Duration::from_secs_f64(cfg.retrieval.timeout_secs),
            )),
        };
        let generation: Arc<dyn GenerationClient> = match cfg.generation.backend {
            ServiceBackendKind::Mock => Arc::new(MockGenerator),
            ServiceBackendKind::Http => Arc::new(HttpGenerator::new(
                cfg.generation.endpoint.clone(),
                cfg.generation.api_key.clone(),
                Duration::from_secs_f64(cfg.generation.timeout_secs),
            )),
        };
        let library = match &cfg.library.dir {
            Some(dir) => LibraryIndex::load(dir).map_err(|e| ConfigError::Invalid(format!("library: {e}")))?,
            None => LibraryIndex::default(),
        };
        for (ty, name) in [
            (EventType::TapRealWorldStructure, &cfg.defaults.tap),
            (EventType::Slide, &cfg.defaults.slide),
            (EventType::Collide, &cfg.defaults.collide),
        ] {
            if let Some(name) = name {
                if library.resolve(name).is_none() {
                    return Err(ConfigError::Invalid(format!(
                        "default seed {name:?} for {ty} is not in the library"
                    )));
                }
            }
        }
        Ok(Self {
            controller,
            retrieval,
            generation,
            library: Arc::new(library),
            seeds: cfg.defaults.clone(),
            options: BackendOptions {
                model: cfg.controller.model.clone(),
                temperature: cfg.controller.temperature,
                timeout: cfg.controller_timeout(),
            },
        })
    }

    /// Describes the event, asks the controller, and parses its reply.
    pub async fn ask_controller(&self, event: &ArEvent) -> Result<ParsedReply, ControllerError> {
        let text = textualize_captured(event)
            .map_err(|e| ControllerError::InvalidResponse(format!("event text: {e}")))?;
        let mut bundle = build_controller_request(&text, &self.library);
        bundle.options = self.options.clone();
        let reply = tokio::time::timeout(self.options.timeout, self.controller.complete(&bundle))
            .await
            .map_err(|_| ControllerError::Timeout)??;
        parse_commands(&reply)
    }

    /// Runs one job. The result lists assets in rank order.
    pub async fn run(&self, spec: &JobSpec, event_type: EventType) -> Result<Vec<SoundAsset>, AcquisitionError> {
        match spec {
            JobSpec::Recommend(names) => {
                let mut out = Vec::new();
                let mut first_err = None;
                for name in names {
                    match recommend_local(name, &self.library) {
                        Ok(a) => out.push(a),
                        Err(e) => {
                            tracing::warn!("recommendation {name:?}: {e}");
                            first_err.get_or_insert(e);
                        }
                    }
                }
                match (out.is_empty(), first_err) {
                    (true, Some(e)) => Err(e),
                    _ => Ok(out),
                }
            }
            JobSpec::Retrieve(query) => retrieve_online(query, self.retrieval.as_ref()).await,
            JobSpec::Generate { prompt, parent } => {
                let mut asset = generate_sound(prompt, self.generation.as_ref()).await?;
                if let Some(p) = parent {
                    asset.meta.source_ref = Some(SourceRef::Parent(p.id().clone()));
                }
                Ok(vec![asset])
            }
            JobSpec::Transfer { prompt, seed } => {
                let seed = match seed {
                    Some(s) => s.clone(),
                    None => default_seed_for(event_type, &self.library, &self.seeds)?,
                };
                Ok(vec![transfer_sound(&seed, prompt, self.generation.as_ref()).await?])
            }
        }
    }
}

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use sonify_core::controller::{ControllerBackend, ControllerError, PromptBundle};
use sonify_core::engine::{read_trace, replay, SimConfig, DEFAULT_DT};
use sonify_core::{ArEvent, EventLog, Scene, SessionState};
use sonify_service::{Backends, Config};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn mock_config() -> Config {
    Config::load(fixtures().join("config/mock.toml")).unwrap()
}

pub fn mock_backends() -> Backends {
    Backends::from_config(&mock_config()).unwrap()
}

/// All events of a scene/trace fixture pair, replayed headlessly.
pub fn replay_fixture(name: &str, until: f64) -> Vec<ArEvent> {
    let scene = Scene::load(fixtures().join(format!("scenes/{name}.json"))).unwrap();
    let materials = scene.resolve_materials().unwrap();
    let file = std::fs::File::open(fixtures().join(format!("traces/{name}.jsonl"))).unwrap();
    let trace = read_trace(std::io::BufReader::new(file)).unwrap();
    let mut state = SessionState::new(Arc::new(scene), materials, SimConfig::default());
    replay(&mut state, &trace, DEFAULT_DT, until).unwrap()
}

pub fn robot_events() -> Vec<ArEvent> {
    replay_fixture("robot", 7.0)
}

/// First occurrence of each unique event, in order.
pub fn unique(events: &[ArEvent]) -> Vec<ArEvent> {
    let mut log = EventLog::new();
    for e in events {
        log.register_event(e.clone());
    }
    log.records().iter().map(|r| r.first_event.clone()).collect()
}

/// A controller that never answers in time.
pub struct StalledController(pub Duration);

#[async_trait]
impl ControllerBackend for StalledController {
    async fn complete(&self, _bundle: &PromptBundle) -> Result<String, ControllerError> {
        tokio::time::sleep(self.0).await;
        Ok(String::new())
    }
}

/// A controller with a fixed reply.
pub struct FixedController(pub String);

#[async_trait]
impl ControllerBackend for FixedController {
    async fn complete(&self, _bundle: &PromptBundle) -> Result<String, ControllerError> {
        Ok(self.0.clone())
    }
}

//! Session orchestration for AR sound authoring: backend clients, the job
//! model, the session owner and simulator tasks, the HTTP API, export and
//! the headless batch pipeline.

pub mod actor;
pub mod api;
pub mod backends;
pub mod batch;
pub mod clients;
pub mod config;
pub mod export;
pub mod jobs;
pub mod mock_server;
pub mod session;

pub use actor::{start_session, LiveSession, SessionHandle, SimulatorHandle, SimulatorOptions, StreamBody, StreamMessage, TransferMode};
pub use backends::Backends;
pub use config::{Config, ConfigError, ConfigSnapshot};
pub use export::{export_session, import_session, ExportError};
pub use jobs::{AcquisitionJob, FailureKind, JobMethod, JobState};
pub use session::{PlaybackDirective, Session, SessionError};

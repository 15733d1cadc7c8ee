//! Core of the AR sound authoring pipeline: scene model, material labels,
//! event simulation, event text, controller grammar and sound acquisition.

pub mod acquisition;
pub mod controller;
pub mod engine;
pub mod geometry;
pub mod material;
pub mod scene;
pub mod textualizer;
pub mod tokens;

pub use acquisition::{AcquisitionMethod, AssetId, AudioClip, CandidateSet, LibraryIndex, SoundAsset};
pub use engine::{ArEvent, EventId, EventLog, EventRecord, EventType, SessionState, UserAction};
pub use geometry::Vec3;
pub use material::MaterialLabel;
pub use scene::{ObjectId, PlaneId, Scene};
pub use textualizer::{textualize, EventText};

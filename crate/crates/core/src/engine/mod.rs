//! Sound-producing AR events: the six event types, the fixed-timestep
//! simulator that detects them, and the deduplicating event log.

mod log;
mod sim;
mod trace;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Vec3;
use crate::material::MaterialLabel;
use crate::scene::{ObjectId, PlaneId, Scene};

pub use log::{EventId, EventLog, EventRecord};
pub use sim::{SessionState, SimConfig, DEFAULT_DT};
pub use trace::{read_events, read_trace, replay, write_events, write_trace, TraceError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventType {
    TapRealWorldStructure,
    Slide,
    Collide,
    ShowUp,
    TapVirtualObject,
    PlayAnimation,
}

impl EventType {
    pub const ALL: [EventType; 6] = [
        EventType::TapRealWorldStructure,
        EventType::Slide,
        EventType::Collide,
        EventType::ShowUp,
        EventType::TapVirtualObject,
        EventType::PlayAnimation,
    ];

    /// Name used in event text.
    pub fn display_name(self) -> &'static str {
        match self {
            EventType::TapRealWorldStructure => "Tap Real World Structure",
            EventType::Slide => "Slide",
            EventType::Collide => "Collide",
            EventType::ShowUp => "Show Up",
            EventType::TapVirtualObject => "Tap Virtual Objects",
            EventType::PlayAnimation => "Play Animation",
        }
    }

    pub fn from_display_name(name: &str) -> Option<EventType> {
        EventType::ALL.into_iter().find(|t| t.display_name() == name)
    }

    /// Event types timed tightly enough to an action that they get a
    /// duration-preserving transfer from a default seed clip.
    pub fn is_time_sensitive(self) -> bool {
        matches!(
            self,
            EventType::TapRealWorldStructure | EventType::Slide | EventType::Collide
        )
    }
}

impl fmt::Display for EventType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Actor {
    User,
    VirtualObject { id: ObjectId },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Target {
    VirtualObject { id: ObjectId },
    Plane { id: PlaneId },
    Animation { object_id: ObjectId, animation_id: String },
}

/// Descriptions and materials of the involved entities, captured when the
/// event was detected so the event can be described without the scene.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextSnapshot {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_material: Option<MaterialLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub animation_description: Option<String>,
}

impl ContextSnapshot {
    /// Resolves every entity referenced by `source`/`target`. Fails with the
    /// unresolvable id.
    pub fn capture(
        source: &Actor,
        target: Option<&Target>,
        scene: &Scene,
        materials: &BTreeMap<PlaneId, MaterialLabel>,
    ) -> Result<Self, String> {
        let mut snap = ContextSnapshot::default();
        if let Actor::VirtualObject { id } = source {
            let obj = scene.object(id).ok_or_else(|| id.0.clone())?;
            snap.source_name = Some(obj.name.clone());
            snap.source_description = Some(obj.description.clone());
        }
        match target {
            None => {}
            Some(Target::VirtualObject { id }) => {
                let obj = scene.object(id).ok_or_else(|| id.0.clone())?;
                snap.target_name = Some(obj.name.clone());
                snap.target_description = Some(obj.description.clone());
            }
            Some(Target::Plane { id }) => {
                let plane = scene.plane(id).ok_or_else(|| id.0.clone())?;
                snap.target_material = Some(materials.get(id).copied().unwrap_or(plane.material));
            }
            Some(Target::Animation {
                object_id,
                animation_id,
            }) => {
                let obj = scene.object(object_id).ok_or_else(|| object_id.0.clone())?;
                let anim = obj
                    .animation(animation_id)
                    .ok_or_else(|| format!("{object_id}/{animation_id}"))?;
                snap.target_name = Some(anim.animation_id.clone());
                snap.animation_description = Some(anim.description.clone());
            }
        }
        Ok(snap)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArEvent {
    pub event_type: EventType,
    pub source: Actor,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Target>,
    /// Session clock, seconds.
    pub timestamp: f64,
    /// Collider joint that produced a Collide/Slide, informational only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joint: Option<String>,
    /// Collider joint of the target object in an object-object Collide.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_joint: Option<String>,
    pub context: ContextSnapshot,
}

impl ArEvent {
    /// Type/target invariants: Collide and Slide have a target, taps on the
    /// world target a plane, animation events target an animation.
    pub fn is_well_formed(&self) -> bool {
        match (self.event_type, &self.target) {
            (EventType::Collide, Some(_)) => true,
            (EventType::Slide, Some(Target::Plane { .. })) => true,
            (EventType::TapRealWorldStructure, Some(Target::Plane { .. })) => true,
            (EventType::PlayAnimation, Some(Target::Animation { .. })) => true,
            (EventType::TapVirtualObject, Some(Target::VirtualObject { .. })) => true,
            (EventType::ShowUp, None) => true,
            _ => false,
        }
    }

    pub fn dedupe_key(&self) -> DedupeKey {
        DedupeKey {
            event_type: self.event_type,
            source: self.source.clone(),
            target: self.target.clone(),
            material: self.context.target_material,
        }
    }
}

/// Identity under which repeated occurrences collapse into one record.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DedupeKey {
    pub event_type: EventType,
    pub source: Actor,
    pub target: Option<Target>,
    pub material: Option<MaterialLabel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ActionKind {
    TapScreenOnPlane { plane_id: PlaneId },
    TapScreenOnObject { object_id: ObjectId },
    DragStart { object_id: ObjectId },
    DragMove { object_id: ObjectId, position: Vec3 },
    DragEnd { object_id: ObjectId },
    PlaceObject { object_id: ObjectId, position: Vec3 },
    StartAnimation { object_id: ObjectId, animation_id: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserAction {
    pub timestamp: f64,
    #[serde(flatten)]
    pub kind: ActionKind,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EngineError {
    #[error("unknown id `{0}`")]
    UnknownId(String),
}

//! Renders events into the fixed description template
//!
//! ```text
//! This event is [Event Type], caused by [Source]. This event casts on [Target Object]. [Additional Information]
//! ```
//!
//! The target sentence is omitted when the event has no target, and the
//! additional information is omitted when there is none. Additional
//! information is, in order: the source object description, the target
//! object description or `The surface is [material].`, and the animation
//! description.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{Actor, ArEvent, ContextSnapshot, EventId, EventType, Target};
use crate::material::{material_name, MaterialLabel};
use crate::scene::{PlaneId, Scene};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventText {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_id: Option<EventId>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TextError {
    #[error("event references `{0}`, which is not in the scene")]
    UnresolvedReference(String),
}

/// Describes `event` using the current scene and plane materials.
pub fn textualize(
    event: &ArEvent,
    scene: &Scene,
    materials: &BTreeMap<PlaneId, MaterialLabel>,
) -> Result<EventText, TextError> {
    let ctx = ContextSnapshot::capture(&event.source, event.target.as_ref(), scene, materials)
        .map_err(TextError::UnresolvedReference)?;
    render(event.event_type, &event.source, event.target.as_ref(), &ctx)
}

/// Describes `event` from the context captured at detection time.
pub fn textualize_captured(event: &ArEvent) -> Result<EventText, TextError> {
    render(event.event_type, &event.source, event.target.as_ref(), &event.context)
}

fn missing(what: &str) -> TextError {
    TextError::UnresolvedReference(what.to_owned())
}

fn render(
    event_type: EventType,
    source: &Actor,
    target: Option<&Target>,
    ctx: &ContextSnapshot,
) -> Result<EventText, TextError> {
    let source_text = match source {
        Actor::User => "user",
        Actor::VirtualObject { id } => ctx.source_name.as_deref().ok_or_else(|| missing(&id.0))?,
    };
    let mut text = format!("This event is {}, caused by {source_text}.", event_type.display_name());

    let mut extra: Vec<String> = Vec::new();
    if let Some(desc) = &ctx.source_description {
        extra.push(desc.clone());
    }
    if let Some(target) = target {
        let target_text = match target {
            Target::VirtualObject { id } => {
                if let Some(desc) = &ctx.target_description {
                    extra.push(desc.clone());
                }
                ctx.target_name.clone().ok_or_else(|| missing(&id.0))?
            }
            Target::Plane { id } => {
                let material = material_name(ctx.target_material.ok_or_else(|| missing(&id.0))?);
                extra.push(format!("The surface is {material}."));
                format!("a {material} plane")
            }
            Target::Animation { animation_id, .. } => format!("the {animation_id} animation"),
        };
        text.push_str(" This event casts on ");
        text.push_str(&target_text);
        text.push('.');
    }
    if let Some(desc) = &ctx.animation_description {
        extra.push(desc.clone());
    }
    for piece in extra {
        text.push(' ');
        text.push_str(&piece);
    }
    Ok(EventText {
        text,
        event_id: None,
    })
}

/// Target slot of a rendered description.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TargetText {
    Object(String),
    Plane(String),
    Animation(String),
}

/// Event type, source and target recovered from a rendered description.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedEventText {
    pub event_type: EventType,
    /// `"user"` or the source object's name.
    pub source: String,
    pub target: Option<TargetText>,
}

/// Inverse of the template for the leading sentences. Returns `None` when
/// `text` does not follow the template.
pub fn parse_event_text(text: &str) -> Option<ParsedEventText> {
    let rest = text.strip_prefix("This event is ")?;
    let (type_name, rest) = rest.split_once(", caused by ")?;
    let event_type = EventType::from_display_name(type_name)?;
    let (source, rest) = rest.split_once('.')?;
    let target = match rest.strip_prefix(" This event casts on ") {
        None => None,
        Some(rest) => {
            let (t, _) = rest.split_once('.')?;
            Some(
                if let Some(m) = t.strip_prefix("a ").and_then(|t| t.strip_suffix(" plane")) {
                    TargetText::Plane(m.to_owned())
                } else if let Some(a) = t.strip_prefix("the ").and_then(|t| t.strip_suffix(" animation")) {
                    TargetText::Animation(a.to_owned())
                } else {
                    TargetText::Object(t.to_owned())
                },
            )
        }
    };
    Some(ParsedEventText {
        event_type,
        source: source.to_owned(),
        target,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::Scene;

    const ROBOT: &str = r#"{
        "schema_version": 1,
        "objects": [{
            "id": "robot", "name": "toy robot", "description": "This model is a toy robot made of metal.",
            "position": [0, 0.07, 0],
            "joints": [{"joint_name": "left_foot", "offset": [0, -0.05, 0], "radius": 0.02}],
            "animations": [{"animation_id": "walk", "description": "A toy robot walks.", "duration": 1.0}]
        }],
        "planes": [
            {"id": "table", "anchor": [0, 0, 0], "normal": [0, 1, 0], "extents": [1, 1], "material": "wood"},
            {"id": "wall", "anchor": [0, 1, -1], "normal": [0, 0, 1], "extents": [2, 2]}
        ]
    }"#;

    fn ev(event_type: EventType, source: Actor, target: Option<Target>) -> ArEvent {
        ArEvent {
            event_type,
            source,
            target,
            timestamp: 0.0,
            joint: None,
            target_joint: None,
            context: ContextSnapshot::default(),
        }
    }

    fn robot() -> Actor {
        Actor::VirtualObject { id: "robot".into() }
    }

    fn text(e: &ArEvent) -> String {
        let scene = Scene::parse(ROBOT).unwrap();
        textualize(e, &scene, &scene.declared_materials()).unwrap().text
    }

    #[test]
    fn collide_on_wood() {
        let e = ev(EventType::Collide, robot(), Some(Target::Plane { id: "table".into() }));
        assert_eq!(
            text(&e),
            "This event is Collide, caused by toy robot. This event casts on a wood plane. \
             This model is a toy robot made of metal. The surface is wood."
        );
    }

    #[test]
    fn show_up_has_no_target_sentence() {
        let e = ev(EventType::ShowUp, robot(), None);
        assert_eq!(
            text(&e),
            "This event is Show Up, caused by toy robot. This model is a toy robot made of metal."
        );
    }

    #[test]
    fn tap_on_unknown_surface() {
        let e = ev(
            EventType::TapRealWorldStructure,
            Actor::User,
            Some(Target::Plane { id: "wall".into() }),
        );
        assert_eq!(
            text(&e),
            "This event is Tap Real World Structure, caused by user. \
             This event casts on a unknown surface plane. The surface is unknown surface."
        );
    }

    #[test]
    fn play_animation_appends_animation_description() {
        let e = ev(
            EventType::PlayAnimation,
            robot(),
            Some(Target::Animation { object_id: "robot".into(), animation_id: "walk".into() }),
        );
        assert_eq!(
            text(&e),
            "This event is Play Animation, caused by toy robot. This event casts on the walk animation. \
             This model is a toy robot made of metal. A toy robot walks."
        );
    }

    #[test]
    fn unresolved_reference() {
        let scene = Scene::parse(ROBOT).unwrap();
        let e = ev(EventType::ShowUp, Actor::VirtualObject { id: "ghost".into() }, None);
        assert_eq!(
            textualize(&e, &scene, &BTreeMap::new()),
            Err(TextError::UnresolvedReference("ghost".into()))
        );
    }

    #[test]
    fn captured_context_matches_live_scene() {
        let scene = Scene::parse(ROBOT).unwrap();
        let mats = scene.declared_materials();
        let mut e = ev(EventType::Slide, robot(), Some(Target::Plane { id: "table".into() }));
        e.context = ContextSnapshot::capture(&e.source, e.target.as_ref(), &scene, &mats).unwrap();
        assert_eq!(textualize_captured(&e).unwrap(), textualize(&e, &scene, &mats).unwrap());
    }

    #[test]
    fn parses_back() {
        let e = ev(EventType::Collide, robot(), Some(Target::Plane { id: "table".into() }));
        let parsed = parse_event_text(&text(&e)).unwrap();
        assert_eq!(parsed.event_type, EventType::Collide);
        assert_eq!(parsed.source, "toy robot");
        assert_eq!(parsed.target, Some(TargetText::Plane("wood".into())));
        assert!(parse_event_text("sure! here you go").is_none());
    }
}

//! The simulated AR world: virtual objects with joint colliders and
//! keyframed animations, detected planes, and the material label inputs.
//!
//! Scenes are loaded from a versioned JSON document (see `docs/scene-format.md`)
//! and validated once; everything downstream can assume the invariants hold.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Vec3;
use crate::material::{assign_plane_materials, LabelImage, MaterialError, MaterialLabel, PlaneMask};

pub const SCENE_SCHEMA_VERSION: u32 = 1;

macro_rules! string_id {
    ($name:ident) => {
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }
    };
}

string_id!(ObjectId);
string_id!(PlaneId);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointCollider {
    pub joint_name: String,
    /// Relative to the object origin.
    pub offset: Vec3,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Keyframe {
    pub time: f64,
    pub joint_name: String,
    /// Displacement added to the joint's rest offset.
    pub offset: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnimationDesc {
    pub animation_id: String,
    pub description: String,
    pub duration: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub looping: bool,
    #[serde(default)]
    pub keyframes: Vec<Keyframe>,
}

impl AnimationDesc {
    /// Piecewise-linear displacement of `joint` at local time `t`, clamped to
    /// the first/last keyframe outside the keyed range. Unkeyed joints do not
    /// move.
    pub fn displacement(&self, joint: &str, t: f64) -> Vec3 {
        let mut prev: Option<&Keyframe> = None;
        for kf in self.keyframes.iter().filter(|k| k.joint_name == joint) {
            if t <= kf.time {
                return match prev {
                    None => kf.offset,
                    Some(p) => {
                        let span = kf.time - p.time;
                        let w = if span > 0.0 { (t - p.time) / span } else { 1.0 };
                        p.offset + (kf.offset - p.offset) * w
                    }
                };
            }
            prev = Some(kf);
        }
        prev.map(|k| k.offset).unwrap_or(Vec3::ZERO)
    }
}

fn default_mass() -> f64 {
    1.0
}

fn is_default_mass(m: &f64) -> bool {
    *m == 1.0
}

fn is_zero(v: &Vec3) -> bool {
    *v == Vec3::ZERO
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirtualObject {
    pub id: ObjectId,
    pub name: String,
    pub description: String,
    pub position: Vec3,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub velocity: Vec3,
    #[serde(default = "default_mass", skip_serializing_if = "is_default_mass")]
    pub mass: f64,
    pub joints: Vec<JointCollider>,
    #[serde(default)]
    pub animations: Vec<AnimationDesc>,
}

impl VirtualObject {
    pub fn animation(&self, animation_id: &str) -> Option<&AnimationDesc> {
        self.animations.iter().find(|a| a.animation_id == animation_id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub id: PlaneId,
    pub anchor: Vec3,
    pub normal: Vec3,
    /// (width, height) centered on the anchor. Width runs along the in-plane
    /// projection of world +X (world +Z when the normal is parallel to X).
    pub extents: (f64, f64),
    #[serde(default)]
    pub material: MaterialLabel,
}

impl Plane {
    /// In-plane unit axes (width, height).
    pub fn axes(&self) -> (Vec3, Vec3) {
        let n = self.normal;
        let u = (Vec3::X - n * Vec3::X.dot(n))
            .normalized()
            .or_else(|| (Vec3::Z - n * Vec3::Z.dot(n)).normalized())
            .unwrap_or(Vec3::X);
        (u, n.cross(u))
    }

    /// Whether the orthogonal projection of `point` falls inside the extents.
    pub fn covers(&self, point: Vec3) -> bool {
        let (u, v) = self.axes();
        let rel = point - self.anchor;
        rel.dot(u).abs() <= self.extents.0 / 2.0 && rel.dot(v).abs() <= self.extents.1 / 2.0
    }

    /// Signed distance from `point` to the (infinite) plane along the normal.
    pub fn signed_distance(&self, point: Vec3) -> f64 {
        (point - self.anchor).dot(self.normal)
    }
}

/// Pixels of the label image owned by a plane, as rectangles and/or single
/// pixels. Rectangles are `[x, y, width, height]`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskRef {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rects: Vec<[u32; 4]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pixels: Vec<[u32; 2]>,
}

impl MaskRef {
    pub fn to_mask(&self, plane_id: PlaneId) -> PlaneMask {
        let rect_px = self.rects.iter().flat_map(|&[x, y, w, h]| {
            (y..y.saturating_add(h)).flat_map(move |py| (x..x.saturating_add(w)).map(move |px| (px, py)))
        });
        let single = self.pixels.iter().map(|&[x, y]| (x, y));
        PlaneMask::new(plane_id, rect_px.chain(single))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub schema_version: u32,
    pub objects: Vec<VirtualObject>,
    pub planes: Vec<Plane>,
    /// Path of the material label PNG, relative to the scene file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_image: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub plane_masks: BTreeMap<PlaneId, MaskRef>,
}

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("cannot read scene file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed scene at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid scene field `{field}`: {message}")]
    Validation { field: String, message: String },
    #[error("no such entity `{0}` in scene")]
    NotFound(String),
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> SceneError {
    SceneError::Validation {
        field: field.into(),
        message: message.into(),
    }
}

/// Names appear verbatim inside event text, so they must stay on one line
/// and must not contain sentence terminators.
fn check_label(field: String, value: &str) -> Result<(), SceneError> {
    if value.trim().is_empty() {
        return Err(invalid(field, "must be non-empty"));
    }
    if value.contains(['.', '\n', '\r']) {
        return Err(invalid(field, "must not contain '.' or line breaks"));
    }
    Ok(())
}

fn check_finite(field: String, v: Vec3) -> Result<(), SceneError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, "must be finite"))
    }
}

impl Scene {
    pub fn parse(json: &str) -> Result<Self, SceneError> {
        let scene: Scene = serde_json::from_str(json).map_err(|e| SceneError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        scene.validate()?;
        Ok(scene)
    }

    /// Loads and validates a scene file. A relative `label_image` is resolved
    /// against the scene file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, SceneError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| SceneError::Io {
            path: path.to_owned(),
            source,
        })?;
        let mut scene = Self::parse(&text)?;
        if let (Some(img), Some(dir)) = (&scene.label_image, path.parent()) {
            if img.is_relative() {
                scene.label_image = Some(dir.join(img));
            }
        }
        Ok(scene)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serialization is infallible")
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        if self.schema_version != SCENE_SCHEMA_VERSION {
            return Err(invalid(
                "schema_version",
                format!("unsupported version {}, expected {SCENE_SCHEMA_VERSION}", self.schema_version),
            ));
        }
        let mut ids = BTreeSet::new();
        for (i, obj) in self.objects.iter().enumerate() {
            let at = |f: &str| format!("objects[{i}].{f}");
            if obj.id.0.is_empty() {
                return Err(invalid(at("id"), "must be non-empty"));
            }
            if !ids.insert(obj.id.0.clone()) {
                return Err(invalid(at("id"), format!("duplicate id `{}`", obj.id)));
            }
            check_label(at("name"), &obj.name)?;
            if obj.description.trim().is_empty() {
                return Err(invalid(at("description"), "must be non-empty"));
            }
            check_finite(at("position"), obj.position)?;
            check_finite(at("velocity"), obj.velocity)?;
            if !(obj.mass > 0.0 && obj.mass.is_finite()) {
                return Err(invalid(at("mass"), "must be positive"));
            }
            let mut joints = BTreeSet::new();
            for (j, joint) in obj.joints.iter().enumerate() {
                let jat = |f: &str| format!("objects[{i}].joints[{j}].{f}");
                if joint.joint_name.is_empty() {
                    return Err(invalid(jat("joint_name"), "must be non-empty"));
                }
                if !joints.insert(joint.joint_name.as_str()) {
                    return Err(invalid(
                        jat("joint_name"),
                        format!("duplicate joint `{}`", joint.joint_name),
                    ));
                }
                check_finite(jat("offset"), joint.offset)?;
                if !(joint.radius > 0.0 && joint.radius.is_finite()) {
                    return Err(invalid(jat("radius"), "must be > 0"));
                }
            }
            let mut anims = BTreeSet::new();
            for (a, anim) in obj.animations.iter().enumerate() {
                let aat = |f: &str| format!("objects[{i}].animations[{a}].{f}");
                check_label(aat("animation_id"), &anim.animation_id)?;
                if !anims.insert(anim.animation_id.as_str()) {
                    return Err(invalid(
                        aat("animation_id"),
                        format!("duplicate animation `{}`", anim.animation_id),
                    ));
                }
                if anim.description.trim().is_empty() {
                    return Err(invalid(aat("description"), "must be non-empty"));
                }
                if !(anim.duration > 0.0 && anim.duration.is_finite()) {
                    return Err(invalid(aat("duration"), "must be > 0"));
                }
                let mut last: BTreeMap<&str, f64> = BTreeMap::new();
                for (k, kf) in anim.keyframes.iter().enumerate() {
                    let kat = format!("objects[{i}].animations[{a}].keyframes[{k}]");
                    if !joints.contains(kf.joint_name.as_str()) {
                        return Err(invalid(
                            format!("{kat}.joint_name"),
                            format!("unknown joint `{}`", kf.joint_name),
                        ));
                    }
                    if !(kf.time >= 0.0 && kf.time <= anim.duration) {
                        return Err(invalid(format!("{kat}.time"), "must lie within [0, duration]"));
                    }
                    if let Some(&prev) = last.get(kf.joint_name.as_str()) {
                        if kf.time <= prev {
                            return Err(invalid(
                                format!("{kat}.time"),
                                "must be strictly increasing per joint",
                            ));
                        }
                    }
                    last.insert(kf.joint_name.as_str(), kf.time);
                    check_finite(format!("{kat}.offset"), kf.offset)?;
                }
            }
        }
        let mut plane_ids = BTreeSet::new();
        for (i, plane) in self.planes.iter().enumerate() {
            let at = |f: &str| format!("planes[{i}].{f}");
            if plane.id.0.is_empty() {
                return Err(invalid(at("id"), "must be non-empty"));
            }
            if ids.contains(&plane.id.0) || !plane_ids.insert(plane.id.0.clone()) {
                return Err(invalid(at("id"), format!("duplicate id `{}`", plane.id)));
            }
            check_finite(at("anchor"), plane.anchor)?;
            if !plane.normal.is_finite() || (plane.normal.norm() - 1.0).abs() > 1e-9 {
                return Err(invalid(at("normal"), "must be a unit vector"));
            }
            let (w, h) = plane.extents;
            if !(w > 0.0 && h > 0.0 && w.is_finite() && h.is_finite()) {
                return Err(invalid(at("extents"), "must be > 0"));
            }
        }
        for key in self.plane_masks.keys() {
            if !plane_ids.contains(&key.0) {
                return Err(invalid(
                    format!("plane_masks.{key}"),
                    format!("unknown plane `{key}`"),
                ));
            }
        }
        Ok(())
    }

    pub fn object(&self, id: &ObjectId) -> Option<&VirtualObject> {
        self.objects.iter().find(|o| &o.id == id)
    }

    pub fn plane(&self, id: &PlaneId) -> Option<&Plane> {
        self.planes.iter().find(|p| &p.id == id)
    }

    pub fn object_description(&self, id: &ObjectId) -> Result<&str, SceneError> {
        self.object(id)
            .map(|o| o.description.as_str())
            .ok_or_else(|| SceneError::NotFound(id.0.clone()))
    }

    pub fn masks(&self) -> Vec<PlaneMask> {
        self.plane_masks
            .iter()
            .map(|(id, m)| m.to_mask(id.clone()))
            .collect()
    }

    /// Materials declared inline in the scene file (Unknown when absent).
    pub fn declared_materials(&self) -> BTreeMap<PlaneId, MaterialLabel> {
        self.planes.iter().map(|p| (p.id.clone(), p.material)).collect()
    }

    /// Plane materials for a session: declared materials, overridden by the
    /// label image vote for every masked plane when an image is present.
    pub fn resolve_materials(&self) -> Result<BTreeMap<PlaneId, MaterialLabel>, MaterialError> {
        let mut out = self.declared_materials();
        if let Some(path) = &self.label_image {
            let image = LabelImage::load_png(path)?;
            out.extend(assign_plane_materials(&image, &self.masks())?);
        }
        Ok(out)
    }
}

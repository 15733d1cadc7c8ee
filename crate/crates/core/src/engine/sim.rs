use std::collections::BTreeMap;
use std::sync::Arc;

use super::{ActionKind, Actor, ArEvent, ContextSnapshot, EngineError, EventType, Target, UserAction};
use crate::geometry::Vec3;
use crate::material::MaterialLabel;
use crate::scene::{ObjectId, Plane, PlaneId, Scene};

pub const DEFAULT_DT: f64 = 1.0 / 60.0;
const MAX_DT: f64 = 0.1;

/// Tuning for the fixed-timestep simulator.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// m/s², applied along -Y.
    pub gravity: f64,
    /// Minimum closing speed (m/s) for a contact to count as a collision.
    pub min_approach_speed: f64,
    /// Seconds before the same collider pair may collide again.
    pub collide_cooldown: f64,
    /// Distance (m) within which a collider is considered touching a plane,
    /// and beyond which an existing contact is considered broken.
    pub contact_epsilon: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            gravity: 9.81,
            min_approach_speed: 0.05,
            collide_cooldown: 0.25,
            contact_epsilon: 0.005,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum PairKey {
    Plane { body: usize, joint: usize, plane: usize },
    Bodies { a: (usize, usize), b: (usize, usize) },
}

#[derive(Debug, Clone, Copy, Default)]
struct PairState {
    in_contact: bool,
    last_collide: Option<f64>,
}

#[derive(Debug, Clone)]
struct Body {
    position: Vec3,
    velocity: Vec3,
    held: bool,
    /// Per-joint animation displacement.
    displacement: Vec<Vec3>,
    animation: Option<(usize, f64)>,
    slide_plane: Option<usize>,
}

/// Mutable state of one simulated session. Single writer: whoever owns it
/// drives both user actions and physics steps.
#[derive(Debug, Clone)]
pub struct SessionState {
    scene: Arc<Scene>,
    materials: BTreeMap<PlaneId, MaterialLabel>,
    config: SimConfig,
    time: f64,
    bodies: Vec<Body>,
    pairs: BTreeMap<PairKey, PairState>,
}

impl SessionState {
    /// `materials` overrides the scene's declared plane materials.
    pub fn new(
        scene: Arc<Scene>,
        materials: BTreeMap<PlaneId, MaterialLabel>,
        config: SimConfig,
    ) -> Self {
        let mut merged = scene.declared_materials();
        merged.extend(materials);
        let bodies = scene
            .objects
            .iter()
            .map(|o| Body {
                position: o.position,
                velocity: o.velocity,
                held: false,
                displacement: vec![Vec3::ZERO; o.joints.len()],
                animation: None,
                slide_plane: None,
            })
            .collect();
        let mut state = Self {
            scene,
            materials: merged,
            config,
            time: 0.0,
            bodies,
            pairs: BTreeMap::new(),
        };
        for body in 0..state.bodies.len() {
            state.reset_contacts(body);
        }
        state
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn scene(&self) -> &Arc<Scene> {
        &self.scene
    }

    pub fn materials(&self) -> &BTreeMap<PlaneId, MaterialLabel> {
        &self.materials
    }

    pub fn position(&self, id: &ObjectId) -> Option<Vec3> {
        self.body_index(id).map(|i| self.bodies[i].position)
    }

    pub fn velocity(&self, id: &ObjectId) -> Option<Vec3> {
        self.body_index(id).map(|i| self.bodies[i].velocity)
    }

    fn body_index(&self, id: &ObjectId) -> Option<usize> {
        self.scene.objects.iter().position(|o| &o.id == id)
    }

    fn plane_index(&self, id: &PlaneId) -> Option<usize> {
        self.scene.planes.iter().position(|p| &p.id == id)
    }

    fn center(&self, body: usize, joint: usize) -> Vec3 {
        let b = &self.bodies[body];
        b.position + self.scene.objects[body].joints[joint].offset + b.displacement[joint]
    }

    fn radius(&self, body: usize, joint: usize) -> f64 {
        self.scene.objects[body].joints[joint].radius
    }

    /// Gap between a collider and a plane, if the collider is over the
    /// plane's extents on its front side.
    fn plane_gap(plane: &Plane, center: Vec3, front_ref: Vec3, radius: f64) -> Option<f64> {
        if plane.covers(center) && plane.signed_distance(front_ref) >= 0.0 {
            Some(plane.signed_distance(center) - radius)
        } else {
            None
        }
    }

    /// Re-derives contact flags for every pair involving `body` from the
    /// current geometry, so a teleported or released object only collides
    /// if it actually arrives at a surface.
    fn reset_contacts(&mut self, body: usize) {
        let eps = self.config.contact_epsilon;
        let joints = self.scene.objects[body].joints.len();
        for joint in 0..joints {
            let c = self.center(body, joint);
            let r = self.radius(body, joint);
            for (pi, plane) in self.scene.planes.iter().enumerate() {
                let touching = Self::plane_gap(plane, c, c, r).is_some_and(|d| d <= eps);
                let entry = self
                    .pairs
                    .entry(PairKey::Plane { body, joint, plane: pi })
                    .or_default();
                entry.in_contact = touching;
            }
            for other in 0..self.bodies.len() {
                if other == body {
                    continue;
                }
                for oj in 0..self.scene.objects[other].joints.len() {
                    let d = (c - self.center(other, oj)).norm() - r - self.radius(other, oj);
                    let (a, b) = if (body, joint) < (other, oj) {
                        ((body, joint), (other, oj))
                    } else {
                        ((other, oj), (body, joint))
                    };
                    self.pairs.entry(PairKey::Bodies { a, b }).or_default().in_contact = d <= eps;
                }
            }
        }
    }

    fn event(&self, event_type: EventType, source: Actor, target: Option<Target>, timestamp: f64, joint: Option<String>) -> ArEvent {
        let context = ContextSnapshot::capture(&source, target.as_ref(), &self.scene, &self.materials)
            .expect("simulator only references ids from its own scene");
        ArEvent {
            event_type,
            source,
            target,
            timestamp,
            joint,
            target_joint: None,
            context,
        }
    }

    fn object_actor(&self, body: usize) -> Actor {
        Actor::VirtualObject {
            id: self.scene.objects[body].id.clone(),
        }
    }

    /// Applies one user action and returns the events it causes directly.
    pub fn ingest_action(&mut self, action: &UserAction) -> Result<Vec<ArEvent>, EngineError> {
        let ts = action.timestamp;
        let body_of = |s: &Self, id: &ObjectId| {
            s.body_index(id).ok_or_else(|| EngineError::UnknownId(id.0.clone()))
        };
        let mut out = Vec::new();
        match &action.kind {
            ActionKind::TapScreenOnPlane { plane_id } => {
                self.plane_index(plane_id)
                    .ok_or_else(|| EngineError::UnknownId(plane_id.0.clone()))?;
                out.push(self.event(
                    EventType::TapRealWorldStructure,
                    Actor::User,
                    Some(Target::Plane { id: plane_id.clone() }),
                    ts,
                    None,
                ));
            }
            ActionKind::TapScreenOnObject { object_id } => {
                body_of(self, object_id)?;
                out.push(self.event(
                    EventType::TapVirtualObject,
                    Actor::User,
                    Some(Target::VirtualObject { id: object_id.clone() }),
                    ts,
                    None,
                ));
            }
            ActionKind::DragStart { object_id } => {
                let b = body_of(self, object_id)?;
                let body = &mut self.bodies[b];
                body.held = true;
                body.velocity = Vec3::ZERO;
                body.slide_plane = None;
            }
            ActionKind::DragMove { object_id, position } => {
                let b = body_of(self, object_id)?;
                {
                    let body = &mut self.bodies[b];
                    body.held = true;
                    body.velocity = Vec3::ZERO;
                    body.position = *position;
                }
                let contact = self.lowest_contact(b);
                let body = &mut self.bodies[b];
                match contact {
                    Some((plane, joint)) if body.slide_plane != Some(plane) => {
                        body.slide_plane = Some(plane);
                        let plane_id = self.scene.planes[plane].id.clone();
                        let joint_name = self.scene.objects[b].joints[joint].joint_name.clone();
                        out.push(self.event(
                            EventType::Slide,
                            self.object_actor(b),
                            Some(Target::Plane { id: plane_id }),
                            ts,
                            Some(joint_name),
                        ));
                    }
                    Some(_) => {}
                    None => body.slide_plane = None,
                }
            }
            ActionKind::DragEnd { object_id } => {
                let b = body_of(self, object_id)?;
                let body = &mut self.bodies[b];
                body.held = false;
                body.velocity = Vec3::ZERO;
                body.slide_plane = None;
                self.reset_contacts(b);
            }
            ActionKind::PlaceObject { object_id, position } => {
                let b = body_of(self, object_id)?;
                let body = &mut self.bodies[b];
                body.position = *position;
                body.velocity = Vec3::ZERO;
                body.held = false;
                body.slide_plane = None;
                self.reset_contacts(b);
                out.push(self.event(EventType::ShowUp, self.object_actor(b), None, ts, None));
            }
            ActionKind::StartAnimation {
                object_id,
                animation_id,
            } => {
                let b = body_of(self, object_id)?;
                let anim = self.scene.objects[b]
                    .animations
                    .iter()
                    .position(|a| &a.animation_id == animation_id)
                    .ok_or_else(|| EngineError::UnknownId(format!("{object_id}/{animation_id}")))?;
                self.bodies[b].animation = Some((anim, self.time));
                out.push(self.event(
                    EventType::PlayAnimation,
                    self.object_actor(b),
                    Some(Target::Animation {
                        object_id: object_id.clone(),
                        animation_id: animation_id.clone(),
                    }),
                    ts,
                    None,
                ));
            }
        }
        Ok(out)
    }

    /// Plane touched by the lowest collider of `body`, within the contact
    /// epsilon.
    fn lowest_contact(&self, body: usize) -> Option<(usize, usize)> {
        let mut best: Option<(f64, usize, usize)> = None;
        for joint in 0..self.scene.objects[body].joints.len() {
            let c = self.center(body, joint);
            let r = self.radius(body, joint);
            for (pi, plane) in self.scene.planes.iter().enumerate() {
                if let Some(d) = Self::plane_gap(plane, c, c, r) {
                    if best.is_none_or(|(bd, _, _)| d < bd) {
                        best = Some((d, pi, joint));
                    }
                }
            }
        }
        best.filter(|(d, _, _)| *d <= self.config.contact_epsilon)
            .map(|(_, p, j)| (p, j))
    }

    fn cooldown_ok(&self, state: &PairState, t: f64) -> bool {
        state
            .last_collide
            .is_none_or(|last| t - last >= self.config.collide_cooldown - 1e-9)
    }

    /// Advances the simulation by `dt` seconds and returns detected
    /// collisions. Non-positive or NaN `dt` is a no-op; `dt` above 0.1 s is
    /// clamped.
    pub fn step_physics(&mut self, dt: f64) -> Vec<ArEvent> {
        if !(dt > 0.0) {
            return Vec::new();
        }
        let dt = dt.min(MAX_DT);
        let t = self.time + dt;
        let n_bodies = self.bodies.len();

        let prev_centers: Vec<Vec<Vec3>> = (0..n_bodies)
            .map(|b| (0..self.bodies[b].displacement.len()).map(|j| self.center(b, j)).collect())
            .collect();
        let prev_disp: Vec<Vec<Vec3>> = self.bodies.iter().map(|b| b.displacement.clone()).collect();
        let prev_vel: Vec<Vec3> = self.bodies.iter().map(|b| b.velocity).collect();

        for (i, body) in self.bodies.iter_mut().enumerate() {
            let obj = &self.scene.objects[i];
            let mut active = body.animation;
            if let Some((ai, started)) = active {
                let anim = &obj.animations[ai];
                let mut local = t - started;
                if anim.looping {
                    local = local.rem_euclid(anim.duration);
                } else if local > anim.duration {
                    active = None;
                }
                for (j, joint) in obj.joints.iter().enumerate() {
                    body.displacement[j] = match active {
                        Some(_) => anim.displacement(&joint.joint_name, local),
                        None => Vec3::ZERO,
                    };
                }
            }
            body.animation = active;
            if !body.held {
                body.velocity.y -= self.config.gravity * dt;
                body.position += body.velocity * dt;
            }
        }

        let mut events = Vec::new();
        let eps = self.config.contact_epsilon;

        // collider vs plane
        for b in 0..n_bodies {
            if self.bodies[b].held {
                continue;
            }
            for j in 0..self.bodies[b].displacement.len() {
                let c = self.center(b, j);
                let r = self.radius(b, j);
                let collider_vel =
                    prev_vel[b] + (self.bodies[b].displacement[j] - prev_disp[b][j]) * (1.0 / dt);
                for (pi, plane) in self.scene.planes.iter().enumerate() {
                    let key = PairKey::Plane { body: b, joint: j, plane: pi };
                    let mut state = self.pairs.get(&key).copied().unwrap_or_default();
                    match Self::plane_gap(plane, c, prev_centers[b][j], r) {
                        None => state.in_contact = false,
                        Some(d) if state.in_contact => {
                            if d > eps {
                                state.in_contact = false;
                            }
                        }
                        Some(d) if d <= 0.0 => {
                            state.in_contact = true;
                            let approach = -collider_vel.dot(plane.normal);
                            if approach >= self.config.min_approach_speed && self.cooldown_ok(&state, t) {
                                state.last_collide = Some(t);
                                events.push((
                                    b,
                                    j,
                                    Target::Plane { id: plane.id.clone() },
                                    None,
                                ));
                            }
                        }
                        Some(_) => {}
                    }
                    self.pairs.insert(key, state);
                }
            }
        }

        // collider vs collider
        let mut body_hits = Vec::new();
        for a in 0..n_bodies {
            if self.bodies[a].held {
                continue;
            }
            for b in (a + 1)..n_bodies {
                if self.bodies[b].held {
                    continue;
                }
                for ja in 0..self.bodies[a].displacement.len() {
                    for jb in 0..self.bodies[b].displacement.len() {
                        let ca = self.center(a, ja);
                        let cb = self.center(b, jb);
                        let d = (ca - cb).norm() - self.radius(a, ja) - self.radius(b, jb);
                        let key = PairKey::Bodies { a: (a, ja), b: (b, jb) };
                        let mut state = self.pairs.get(&key).copied().unwrap_or_default();
                        if state.in_contact {
                            if d > eps {
                                state.in_contact = false;
                            }
                        } else if d <= 0.0 {
                            state.in_contact = true;
                            let n = (ca - cb).normalized().unwrap_or(Vec3::Y);
                            let va = prev_vel[a]
                                + (self.bodies[a].displacement[ja] - prev_disp[a][ja]) * (1.0 / dt);
                            let vb = prev_vel[b]
                                + (self.bodies[b].displacement[jb] - prev_disp[b][jb]) * (1.0 / dt);
                            let approach = -(va - vb).dot(n);
                            if approach >= self.config.min_approach_speed && self.cooldown_ok(&state, t) {
                                state.last_collide = Some(t);
                                // the faster mover toward the other is the source
                                let (src, sj, dst, dj) = if vb.dot(n) > -va.dot(n) {
                                    (b, jb, a, ja)
                                } else {
                                    (a, ja, b, jb)
                                };
                                events.push((
                                    src,
                                    sj,
                                    Target::VirtualObject {
                                        id: self.scene.objects[dst].id.clone(),
                                    },
                                    Some((dst, dj)),
                                ));
                            }
                        }
                        self.pairs.insert(key, state);
                        if d < 0.0 {
                            body_hits.push((a, ja, b, jb));
                        }
                    }
                }
            }
        }

        self.resolve_bodies(&body_hits);
        self.resolve_planes(&prev_centers);
        self.time = t;

        events
            .into_iter()
            .map(|(b, j, target, other)| {
                let joint = self.scene.objects[b].joints[j].joint_name.clone();
                let mut e = self.event(EventType::Collide, self.object_actor(b), Some(target), t, Some(joint));
                e.target_joint = other.map(|(o, oj)| self.scene.objects[o].joints[oj].joint_name.clone());
                e
            })
            .collect()
    }

    /// Elastic impulse along the contact normal plus positional separation
    /// weighted by inverse mass.
    fn resolve_bodies(&mut self, hits: &[(usize, usize, usize, usize)]) {
        for &(a, ja, b, jb) in hits {
            let ca = self.center(a, ja);
            let cb = self.center(b, jb);
            let d = (ca - cb).norm() - self.radius(a, ja) - self.radius(b, jb);
            if d >= 0.0 {
                continue;
            }
            let n = (ca - cb).normalized().unwrap_or(Vec3::Y);
            let wa = 1.0 / self.scene.objects[a].mass;
            let wb = 1.0 / self.scene.objects[b].mass;
            let vn = (self.bodies[a].velocity - self.bodies[b].velocity).dot(n);
            if vn < 0.0 {
                let impulse = -2.0 * vn / (wa + wb);
                self.bodies[a].velocity += n * (impulse * wa);
                self.bodies[b].velocity -= n * (impulse * wb);
            }
            let push = -d / (wa + wb);
            self.bodies[a].position += n * (push * wa);
            self.bodies[b].position -= n * (push * wb);
        }
    }

    /// Clamps penetrating colliders back onto plane surfaces and removes the
    /// velocity component into the plane.
    fn resolve_planes(&mut self, prev_centers: &[Vec<Vec3>]) {
        for b in 0..self.bodies.len() {
            if self.bodies[b].held {
                continue;
            }
            for pi in 0..self.scene.planes.len() {
                let plane = &self.scene.planes[pi];
                let mut depth: f64 = 0.0;
                for j in 0..self.bodies[b].displacement.len() {
                    let c = self.center(b, j);
                    if let Some(d) = Self::plane_gap(plane, c, prev_centers[b][j], self.radius(b, j)) {
                        depth = depth.max(-d);
                    }
                }
                if depth > 0.0 {
                    let n = plane.normal;
                    let body = &mut self.bodies[b];
                    body.position += n * depth;
                    let vn = body.velocity.dot(n);
                    if vn < 0.0 {
                        body.velocity -= n * vn;
                    }
                }
            }
        }
    }
}

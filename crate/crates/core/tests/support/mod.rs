//! Corpus generators and independent oracles shared by the property tests
//! and the acceptance suite. Nothing here calls into the code under test
//! except to build inputs.

#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use sonify_core::controller::Command;
use sonify_core::engine::{ActionKind, Actor, ArEvent, ContextSnapshot, Target, UserAction};
use sonify_core::geometry::Vec3;
use sonify_core::material::{LabelImage, PlaneMask};
use sonify_core::scene::{AnimationDesc, JointCollider, Keyframe, Plane, Scene, VirtualObject};
use sonify_core::{EventType, MaterialLabel, PlaneId};

pub type Rng8 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng8 {
    rand::SeedableRng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- text

const WORDS: &[&str] = &[
    "toy", "robot", "metal", "ball", "red", "cube", "lamp", "vase", "wooden", "glass", "tiny", "drum",
    "cat", "bell", "paper", "heavy", "soft", "green", "clock", "duck",
];

const MATERIAL_WORDS: [(MaterialLabel, &str); 7] = [
    (MaterialLabel::Wood, "wood"),
    (MaterialLabel::Carpet, "carpet"),
    (MaterialLabel::Concrete, "concrete"),
    (MaterialLabel::Paper, "paper"),
    (MaterialLabel::Metal, "metal"),
    (MaterialLabel::Glass, "glass"),
    (MaterialLabel::Unknown, "unknown surface"),
];

pub const EVENT_NAMES: [(EventType, &str); 6] = [
    (EventType::TapRealWorldStructure, "Tap Real World Structure"),
    (EventType::Slide, "Slide"),
    (EventType::Collide, "Collide"),
    (EventType::ShowUp, "Show Up"),
    (EventType::TapVirtualObject, "Tap Virtual Objects"),
    (EventType::PlayAnimation, "Play Animation"),
];

fn phrase(r: &mut Rng8, n: std::ops::RangeInclusive<usize>) -> String {
    let k = r.gen_range(n);
    (0..k).map(|_| *WORDS.choose(r).unwrap()).collect::<Vec<_>>().join(" ")
}

fn material(r: &mut Rng8) -> MaterialLabel {
    MATERIAL_WORDS.choose(r).unwrap().0
}

fn v(r: &mut Rng8, span: f64) -> Vec3 {
    Vec3::new(r.gen_range(-span..span), r.gen_range(-span..span), r.gen_range(-span..span))
}

/// A random valid scene with 1-3 objects and 1-3 planes.
pub fn random_scene(r: &mut Rng8) -> Scene {
    let objects = (0..r.gen_range(1..=3))
        .map(|i| {
            let joints: Vec<_> = (0..r.gen_range(1..=3))
                .map(|j| JointCollider { joint_name: format!("j{j}"), offset: v(r, 0.2), radius: r.gen_range(0.005..0.1) })
                .collect();
            let animations = (0..r.gen_range(0..=2))
                .map(|a| {
                    let duration = r.gen_range(0.2..3.0);
                    let mut keyframes = Vec::new();
                    for jc in &joints {
                        let mut t = 0.0;
                        while r.gen_bool(0.6) {
                            t += r.gen_range(0.01..duration / 3.0);
                            if t > duration {
                                break;
                            }
                            keyframes.push(Keyframe { time: t, joint_name: jc.joint_name.clone(), offset: v(r, 0.05) });
                        }
                    }
                    AnimationDesc {
                        animation_id: format!("{}_{a}", phrase(r, 1..=1)),
                        description: format!("It {}s.", phrase(r, 1..=2)),
                        duration,
                        looping: r.gen_bool(0.5),
                        keyframes,
                    }
                })
                .collect();
            let name = phrase(r, 1..=3);
            VirtualObject {
                id: format!("obj{i}").as_str().into(),
                description: format!("This model is a {name} made of {}.", phrase(r, 1..=1)),
                name,
                position: v(r, 2.0),
                velocity: if r.gen_bool(0.3) { v(r, 1.0) } else { Vec3::ZERO },
                mass: r.gen_range(0.1..5.0),
                joints,
                animations,
            }
        })
        .collect();
    let planes = (0..r.gen_range(1..=3))
        .map(|i| Plane {
            id: format!("plane{i}").as_str().into(),
            anchor: v(r, 2.0),
            normal: v(r, 1.0).normalized().unwrap_or(Vec3::Y),
            extents: (r.gen_range(0.1..5.0), r.gen_range(0.1..5.0)),
            material: material(r),
        })
        .collect();
    Scene { schema_version: 1, objects, planes, label_image: None, plane_masks: BTreeMap::new() }
}

/// One textualizer case: an event of `event_type` over a random scene, with
/// a random partial material override.
pub fn text_case(r: &mut Rng8, event_type: EventType) -> (ArEvent, Scene, BTreeMap<PlaneId, MaterialLabel>) {
    let mut scene = random_scene(r);
    if event_type == EventType::PlayAnimation && scene.objects.iter().all(|o| o.animations.is_empty()) {
        scene.objects[0].animations.push(AnimationDesc {
            animation_id: "spin".into(),
            description: "It spins.".into(),
            duration: 1.0,
            looping: false,
            keyframes: vec![],
        });
    }
    let mut materials = BTreeMap::new();
    for p in &scene.planes {
        if r.gen_bool(0.5) {
            materials.insert(p.id.clone(), material(r));
        }
    }
    let obj = |r: &mut Rng8| scene.objects.choose(r).unwrap().id.clone();
    let plane = |r: &mut Rng8| scene.planes.choose(r).unwrap().id.clone();
    let (source, target) = match event_type {
        EventType::TapRealWorldStructure => (Actor::User, Some(Target::Plane { id: plane(r) })),
        EventType::TapVirtualObject => (Actor::User, Some(Target::VirtualObject { id: obj(r) })),
        EventType::ShowUp => (Actor::VirtualObject { id: obj(r) }, None),
        EventType::Slide => (Actor::VirtualObject { id: obj(r) }, Some(Target::Plane { id: plane(r) })),
        EventType::Collide => {
            let t = if r.gen_bool(0.5) { Target::Plane { id: plane(r) } } else { Target::VirtualObject { id: obj(r) } };
            (Actor::VirtualObject { id: obj(r) }, Some(t))
        }
        EventType::PlayAnimation => {
            let o = scene.objects.iter().filter(|o| !o.animations.is_empty()).collect::<Vec<_>>();
            let o = o.choose(r).unwrap();
            let a = o.animations.choose(r).unwrap();
            (
                Actor::VirtualObject { id: o.id.clone() },
                Some(Target::Animation { object_id: o.id.clone(), animation_id: a.animation_id.clone() }),
            )
        }
    };
    let event = ArEvent {
        event_type,
        source,
        target,
        timestamp: r.gen_range(0.0..100.0),
        joint: None,
        target_joint: None,
        context: ContextSnapshot::default(),
    };
    (event, scene, materials)
}

/// Fills the description template by plain slot substitution, straight
/// from the scene data.
pub fn oracle_text(event: &ArEvent, scene: &Scene, materials: &BTreeMap<PlaneId, MaterialLabel>) -> String {
    let type_name = EVENT_NAMES.iter().find(|(t, _)| *t == event.event_type).unwrap().1;
    let object = |id| scene.objects.iter().find(|o| &o.id == id).unwrap();
    let material_word = |id: &PlaneId| {
        let label = materials
            .get(id)
            .copied()
            .unwrap_or_else(|| scene.planes.iter().find(|p| &p.id == id).unwrap().material);
        MATERIAL_WORDS.iter().find(|(l, _)| *l == label).unwrap().1
    };

    let mut info = Vec::new();
    let source = match &event.source {
        Actor::User => "user".to_string(),
        Actor::VirtualObject { id } => {
            info.push(object(id).description.clone());
            object(id).name.clone()
        }
    };
    let mut animation_info = None;
    let target = event.target.as_ref().map(|t| match t {
        Target::VirtualObject { id } => {
            info.push(object(id).description.clone());
            object(id).name.clone()
        }
        Target::Plane { id } => {
            info.push(format!("The surface is {}.", material_word(id)));
            format!("a {} plane", material_word(id))
        }
        Target::Animation { object_id, animation_id } => {
            let anim = object(object_id).animations.iter().find(|a| &a.animation_id == animation_id).unwrap();
            animation_info = Some(anim.description.clone());
            format!("the {animation_id} animation")
        }
    });
    info.extend(animation_info);

    let mut template =
        String::from("This event is [Event Type], caused by [Source]. This event casts on [Target Object]. [Additional Information]");
    if target.is_none() {
        template = template.replace(" This event casts on [Target Object].", "");
    }
    if info.is_empty() {
        template = template.replace(" [Additional Information]", "");
    }
    template
        .replace("[Event Type]", type_name)
        .replace("[Source]", &source)
        .replace("[Target Object]", target.as_deref().unwrap_or(""))
        .replace("[Additional Information]", &info.join(" "))
}

// ---------------------------------------------------------------- materials

/// A label image up to 64x64 with 1-4 plane masks.
pub fn material_case(r: &mut Rng8) -> (LabelImage, Vec<PlaneMask>) {
    let (w, h) = (r.gen_range(1..=64u32), r.gen_range(1..=64u32));
    // a small palette makes ties and threshold edges common
    let palette: Vec<MaterialLabel> = (0..r.gen_range(1..=4)).map(|_| material(r)).collect();
    let labels = (0..w * h).map(|_| *palette.choose(r).unwrap()).collect();
    let image = LabelImage::new(w, h, labels).unwrap();
    let masks = (0..r.gen_range(1..=4))
        .map(|i| {
            let id = PlaneId::from(format!("p{i}").as_str());
            let pixels: Vec<(u32, u32)> = match r.gen_range(0..4) {
                0 => vec![],
                1 => {
                    let (x0, y0) = (r.gen_range(0..w), r.gen_range(0..h));
                    let (x1, y1) = (r.gen_range(x0..w), r.gen_range(y0..h));
                    (y0..=y1).flat_map(|y| (x0..=x1).map(move |x| (x, y))).collect()
                }
                _ => (0..r.gen_range(1..=40)).map(|_| (r.gen_range(0..w), r.gen_range(0..h))).collect(),
            };
            PlaneMask::new(id, pixels)
        })
        .collect();
    (image, masks)
}

/// Scans the whole image once per plane and counts pixels in the mask.
pub fn oracle_materials(image: &LabelImage, masks: &[PlaneMask]) -> BTreeMap<PlaneId, MaterialLabel> {
    const ORDER: [MaterialLabel; 6] = [
        MaterialLabel::Wood,
        MaterialLabel::Carpet,
        MaterialLabel::Concrete,
        MaterialLabel::Paper,
        MaterialLabel::Metal,
        MaterialLabel::Glass,
    ];
    masks
        .iter()
        .map(|m| {
            let mut counts: BTreeMap<MaterialLabel, usize> = BTreeMap::new();
            let mut total = 0usize;
            for y in 0..image.height() {
                for x in 0..image.width() {
                    if m.pixels.contains(&(x, y)) {
                        *counts.entry(image.get(x, y).unwrap()).or_default() += 1;
                        total += 1;
                    }
                }
            }
            let unknown = counts.get(&MaterialLabel::Unknown).copied().unwrap_or(0);
            let known = total - unknown;
            let label = if total == 0 || unknown as f64 / total as f64 >= 0.5 {
                MaterialLabel::Unknown
            } else {
                let best_count = ORDER.iter().map(|l| counts.get(l).copied().unwrap_or(0)).max().unwrap();
                let best = *ORDER.iter().find(|l| counts.get(l).copied().unwrap_or(0) == best_count).unwrap();
                if (best_count as f64) / (known as f64) < 0.3 {
                    MaterialLabel::Unknown
                } else {
                    best
                }
            };
            (m.plane_id.clone(), label)
        })
        .collect()
}

// ---------------------------------------------------------------- commands

const PAYLOAD_CHARS: &[char] = &[
    'a', 'b', 'z', 'A', 'Q', '0', '7', ' ', ' ', ':', '-', '_', '.', ',', '\'', '"', '/', '\t', 'é', 'ß', '漢', '🙂',
    'm', 'e', 't', 'h', 'o', 'd',
];

pub fn payload(r: &mut Rng8) -> String {
    loop {
        let s: String = (0..r.gen_range(1..40)).map(|_| *PAYLOAD_CHARS.choose(r).unwrap()).collect();
        let t = s.trim();
        if !t.is_empty() {
            return t.to_string();
        }
    }
}

/// 1-20 commands with single-line payloads free of surrounding whitespace.
pub fn command_list(r: &mut Rng8) -> Vec<Command> {
    (0..r.gen_range(1..=20))
        .map(|_| {
            let p = payload(r);
            match r.gen_range(0..4) {
                0 => Command::Recommend(p),
                1 => Command::Retrieve(p),
                2 => Command::Generate(p),
                _ => Command::Transfer(p),
            }
        })
        .collect()
}

/// Wire form of a command list, spelled out independently of the crate.
pub fn oracle_format(commands: &[Command]) -> String {
    commands
        .iter()
        .map(|c| match c {
            Command::Recommend(p) => format!("method1recommend:{p}"),
            Command::Retrieve(p) => format!("method2retrieval:{p}"),
            Command::Generate(p) => format!("method3generation:{p}"),
            Command::Transfer(p) => format!("method4transfer:{p}"),
        })
        .collect::<Vec<_>>()
        .join("\n")
}

const FUZZ_PIECES: &[&[u8]] = &[
    b"method1recommend:", b"METHOD2RETRIEVAL:", b"method3generation:", b"method4transfer:", b"method", b":",
    b"\n", b"\r\n", b"\r", b" ", b"\t", b"\xff", b"\xc3", b"\xe6\xbc", b"\xf0\x9f\x99\x82", b"\0", b"sure! ",
    b"Crash Aluminum Tray Bang",
];

/// Arbitrary bytes, biased toward keyword fragments, line breaks and broken
/// UTF-8.
pub fn fuzz_bytes(r: &mut Rng8) -> Vec<u8> {
    let mut out = Vec::new();
    for _ in 0..r.gen_range(0..24) {
        if r.gen_bool(0.5) {
            out.extend_from_slice(FUZZ_PIECES.choose(r).unwrap());
        } else {
            let n = r.gen_range(0..8);
            out.extend((0..n).map(|_| r.gen::<u8>()));
        }
    }
    out
}

// ---------------------------------------------------------------- traces

/// Robot, two balls, a table and a floor, for long fuzzed traces.
pub fn fuzz_scene() -> Scene {
    let ball = |id: &str, x: f64| VirtualObject {
        id: id.into(),
        name: id.replace('_', " "),
        description: format!("This model is a {} made of metal.", id.replace('_', " ")),
        position: Vec3::new(x, 1.0, 0.0),
        velocity: Vec3::ZERO,
        mass: 1.0,
        joints: vec![JointCollider { joint_name: "body".into(), offset: Vec3::ZERO, radius: 0.03 }],
        animations: vec![],
    };
    let foot = |n: &str| JointCollider { joint_name: n.into(), offset: Vec3::new(0.0, -0.05, 0.0), radius: 0.02 };
    let kf = |t: f64, j: &str, dy: f64| Keyframe { time: t, joint_name: j.into(), offset: Vec3::new(0.0, dy, 0.0) };
    let robot = VirtualObject {
        id: "robot".into(),
        name: "toy robot".into(),
        description: "This model is a toy robot made of metal.".into(),
        position: Vec3::new(0.0, 0.82, 0.0),
        velocity: Vec3::ZERO,
        mass: 0.5,
        joints: vec![foot("left_foot"), foot("right_foot")],
        animations: vec![
            AnimationDesc {
                animation_id: "walk".into(),
                description: "A toy robot walks.".into(),
                duration: 1.0,
                looping: true,
                keyframes: vec![
                    kf(0.0, "left_foot", 0.0), kf(0.25, "left_foot", 0.03), kf(0.5, "left_foot", 0.0),
                    kf(0.5, "right_foot", 0.0), kf(0.75, "right_foot", 0.03), kf(1.0, "right_foot", 0.0),
                ],
            },
            AnimationDesc {
                animation_id: "stomp".into(),
                description: "A toy robot stomps quickly.".into(),
                duration: 0.3,
                looping: false,
                keyframes: vec![kf(0.0, "left_foot", 0.0), kf(0.1, "left_foot", 0.05), kf(0.2, "left_foot", 0.0)],
            },
        ],
    };
    let plane = |id: &str, y: f64, w: f64, m: MaterialLabel| Plane {
        id: id.into(),
        anchor: Vec3::new(0.0, y, 0.0),
        normal: Vec3::Y,
        extents: (w, w),
        material: m,
    };
    Scene {
        schema_version: 1,
        objects: vec![robot, ball("ball_a", 0.3), ball("ball_b", -0.3)],
        planes: vec![plane("table", 0.75, 1.2, MaterialLabel::Wood), plane("floor", 0.0, 8.0, MaterialLabel::Carpet)],
        label_image: None,
        plane_masks: BTreeMap::new(),
    }
}

/// A random action trace for [`fuzz_scene`] spanning `seconds`.
pub fn fuzz_trace(r: &mut Rng8, seconds: f64) -> Vec<UserAction> {
    let objects = ["robot", "ball_a", "ball_b"];
    let mut out = Vec::new();
    let mut t = 0.0;
    let mut push = |t: f64, kind| out.push(UserAction { timestamp: t, kind });
    while t < seconds {
        t += r.gen_range(0.05..2.0);
        let obj = *objects.choose(r).unwrap();
        let pos = |r: &mut Rng8| {
            let x: f64 = r.gen_range(-1.5..1.5);
            let base = if x.abs() < 0.6 { 0.75 } else { 0.0 };
            Vec3::new(x, base + r.gen_range(0.0..0.8), r.gen_range(-0.3..0.3))
        };
        match r.gen_range(0..7) {
            0 => push(t, ActionKind::TapScreenOnPlane { plane_id: if r.gen_bool(0.5) { "table" } else { "floor" }.into() }),
            1 => push(t, ActionKind::TapScreenOnObject { object_id: obj.into() }),
            2 | 3 => push(t, ActionKind::PlaceObject { object_id: obj.into(), position: pos(r) }),
            4 => push(
                t,
                ActionKind::StartAnimation {
                    object_id: "robot".into(),
                    animation_id: if r.gen_bool(0.5) { "walk" } else { "stomp" }.into(),
                },
            ),
            _ => {
                push(t, ActionKind::DragStart { object_id: obj.into() });
                for _ in 0..r.gen_range(1..12) {
                    t += r.gen_range(0.01..0.2);
                    let mut p = pos(r);
                    if r.gen_bool(0.5) {
                        // skim a surface so slides happen
                        p.y = if p.x.abs() < 0.6 { 0.75 } else { 0.0 } + if obj == "robot" { 0.07 } else { 0.03 };
                    }
                    push(t, ActionKind::DragMove { object_id: obj.into(), position: p });
                }
                t += r.gen_range(0.01..0.2);
                push(t, ActionKind::DragEnd { object_id: obj.into() });
            }
        }
    }
    out
}

/// Cooldown violations: consecutive Collide events of the same collider
/// pair closer than `cooldown` seconds.
pub fn cooldown_violations(events: &[ArEvent], cooldown: f64) -> Vec<(String, f64, f64)> {
    let mut last: BTreeMap<String, f64> = BTreeMap::new();
    let mut bad = Vec::new();
    for e in events.iter().filter(|e| e.event_type == EventType::Collide) {
        let Actor::VirtualObject { id } = &e.source else { continue };
        let src = format!("{id}/{}", e.joint.as_deref().unwrap_or(""));
        let key = match &e.target {
            Some(Target::Plane { id: p }) => format!("{src}|plane:{p}"),
            Some(Target::VirtualObject { id: o }) => {
                let dst = format!("{o}/{}", e.target_joint.as_deref().unwrap_or(""));
                let (a, b) = if src < dst { (src, dst) } else { (dst, src) };
                format!("{a}|{b}")
            }
            _ => continue,
        };
        if let Some(prev) = last.insert(key.clone(), e.timestamp) {
            if e.timestamp - prev < cooldown - 1e-9 {
                bad.push((key, prev, e.timestamp));
            }
        }
    }
    bad
}

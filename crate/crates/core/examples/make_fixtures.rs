//! Regenerates the repository fixtures under `fixtures/`.
//!
//! ```text
//! cargo run -p sonify-core --example make_fixtures -- fixtures
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;
use sonify_core::acquisition::dsp::synth_partials;
use sonify_core::engine::{write_trace, ActionKind, UserAction};
use sonify_core::material::LabelImage;
use sonify_core::{MaterialLabel, Scene, Vec3};

const TABLE_Y: f64 = 0.75;
const ROBOT_HIP: f64 = 0.07;

const LIBRARY: &[(&str, f64, u32)] = &[
    ("Ball Bounce Rubber", 0.5, 16000),
    ("Carpet Footsteps Soft", 0.5, 16000),
    ("Concrete Impact Thud", 0.5, 16000),
    ("Crash Aluminum Tray Bang", 0.5, 44100),
    ("Footsteps Wood Creak", 0.5, 16000),
    ("Glass Tap Light", 0.25, 16000),
    ("Liquid Mud Suction", 0.75, 16000),
    ("Marble Roll Wood", 1.0, 16000),
    ("Metal Footsteps On Wood", 0.5, 16000),
    ("Metal Slide Scrape", 1.0, 16000),
    ("Neutral Impact", 0.5, 16000),
    ("Neutral Slide", 1.0, 16000),
    ("Neutral Tap", 0.25, 16000),
    ("Paper Rustle", 0.75, 16000),
    ("Robot Servo Whir", 0.75, 16000),
    ("Toy Robot Metal Clank", 0.5, 16000),
    ("Wood Knock Table", 0.25, 16000),
];

const CORPUS: &[(&str, &str, &str)] = &[
    ("1001", "Footsteps on wooden floor", "slow footsteps walking on a wood floor"),
    ("1002", "Wood creak footsteps", "creaky wood footsteps in an old house"),
    ("1003", "Running footsteps gravel", "fast footsteps running on gravel"),
    ("1004", "Wood knock", "knocking on a wooden door"),
    ("1005", "Metal robot walk", "small metal robot walking with servo steps"),
    ("1006", "Carpet footsteps", "soft footsteps on carpet"),
    ("1007", "Glass tap", "finger tapping a glass window"),
    ("1008", "Metal clang", "metal pipe hit with a clang"),
    ("1009", "Table tap wood", "tapping a wood table with a finger"),
    ("1010", "Ball bounce", "rubber ball bouncing on concrete"),
    ("1011", "Marble roll", "glass marble rolling on a wood table"),
    ("1012", "Paper crumple", "crumpling a sheet of paper"),
    ("1013", "Concrete impact", "heavy object dropped on concrete"),
    ("1014", "Toy robot beeps", "toy robot electronic beeps and whirs"),
    ("1015", "Sliding box", "cardboard box slide on a wooden floor"),
    ("1016", "Drag on carpet", "dragging an object across a carpet"),
    ("1017", "Metal impact on wood", "metal object collides with a wood surface"),
    ("1018", "Rain on roof", "rain falling on a tin roof"),
    ("1019", "Door slam", "wooden door slammed shut"),
    ("1020", "Footsteps metal stairs", "footsteps walking up metal stairs"),
];

fn write_scene(path: &Path, value: serde_json::Value) {
    let scene = Scene::parse(&value.to_string()).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    fs::write(path, scene.to_json() + "\n").unwrap();
}

fn ball(id: &str, name: &str, position: [f64; 3]) -> serde_json::Value {
    json!({
        "id": id,
        "name": name,
        "description": format!("This model is a {name} made of metal."),
        "position": position,
        "joints": [{"joint_name": "body", "offset": [0, 0, 0], "radius": 0.02}]
    })
}

fn robot_scene() -> serde_json::Value {
    let foot = |name: &str| json!({"joint_name": name, "offset": [0, -0.05, 0], "radius": 0.02});
    let kf = |t: f64, joint: &str, dy: f64| json!({"time": t, "joint_name": joint, "offset": [0, dy, 0]});
    json!({
        "schema_version": 1,
        "objects": [{
            "id": "robot",
            "name": "toy robot",
            "description": "This model is a toy robot made of metal.",
            "position": [0, TABLE_Y + ROBOT_HIP, 0],
            "mass": 0.5,
            "joints": [foot("left_foot"), foot("right_foot")],
            "animations": [{
                "animation_id": "walk",
                "description": "A toy robot walks.",
                "duration": 1.0,
                "looping": true,
                "keyframes": [
                    kf(0.0, "left_foot", 0.0), kf(0.25, "left_foot", 0.03), kf(0.5, "left_foot", 0.0),
                    kf(0.5, "right_foot", 0.0), kf(0.75, "right_foot", 0.03), kf(1.0, "right_foot", 0.0)
                ]
            }]
        }],
        "planes": [
            {"id": "table", "anchor": [0, TABLE_Y, 0], "normal": [0, 1, 0], "extents": [1.2, 0.8]},
            {"id": "floor", "anchor": [0, 0, 0], "normal": [0, 1, 0], "extents": [6.0, 6.0]}
        ],
        "label_image": "robot_labels.png",
        "plane_masks": {
            "table": {"rects": [[4, 4, 24, 20]]},
            "floor": {"rects": [[36, 8, 24, 36]], "pixels": [[0, 47], [1, 47]]}
        }
    })
}

/// Left half wood, right half carpet, with scattered Unknown and Metal
/// pixels that stay below the voting thresholds.
fn robot_labels() -> LabelImage {
    let (w, h) = (64u32, 48u32);
    let mut labels = Vec::with_capacity((w * h) as usize);
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            labels.push(if i % 7 == 0 {
                MaterialLabel::Unknown
            } else if i % 11 == 0 {
                MaterialLabel::Metal
            } else if x < 32 {
                MaterialLabel::Wood
            } else {
                MaterialLabel::Carpet
            });
        }
    }
    LabelImage::new(w, h, labels).unwrap()
}

fn slope_scene() -> serde_json::Value {
    let theta = 4.0_f64.to_radians();
    let (s, c) = (theta.sin(), theta.cos());
    let len = 0.25;
    let ledge_y = 0.10;
    let r = 0.02;
    // the slope descends toward +x and meets the ledge at x = 0
    let anchor = [-len / 2.0 * c, ledge_y + len / 2.0 * s, 0.0];
    let start = 0.23;
    let top = [-start * c + r * s, ledge_y + start * s + r * c, 0.0];
    json!({
        "schema_version": 1,
        "objects": [ball("top_ball", "top ball", top), ball("bottom_ball", "bottom ball", [0.06, ledge_y + r, 0.0])],
        "planes": [
            {"id": "slope", "anchor": anchor, "normal": [s, c, 0], "extents": [len, 0.2], "material": "wood"},
            {"id": "ledge", "anchor": [0.075, ledge_y, 0], "normal": [0, 1, 0], "extents": [0.15, 0.2], "material": "wood"},
            {"id": "table", "anchor": [0, 0, 0], "normal": [0, 1, 0], "extents": [6.0, 6.0], "material": "wood"}
        ]
    })
}

fn drop_ball_scene() -> serde_json::Value {
    json!({
        "schema_version": 1,
        "objects": [ball("ball", "metal ball", [0.0, 0.52, 0.0])],
        "planes": [{"id": "table", "anchor": [0, 0, 0], "normal": [0, 1, 0], "extents": [2.0, 2.0], "material": "wood"}]
    })
}

fn minimal_scene() -> serde_json::Value {
    json!({
        "schema_version": 1,
        "objects": [{
            "id": "cube", "name": "cube", "description": "A small wooden cube.",
            "position": [0, 0.05, 0],
            "joints": [{"joint_name": "base", "offset": [0, -0.03, 0], "radius": 0.02}]
        }],
        "planes": [{"id": "ground", "anchor": [0, 0, 0], "normal": [0, 1, 0], "extents": [1, 1]}]
    })
}

fn act(timestamp: f64, kind: ActionKind) -> UserAction {
    UserAction { timestamp, kind }
}

fn robot_trace() -> Vec<UserAction> {
    let robot = || "robot".into();
    let at = |x: f64, y: f64| Vec3::new(x, y, 0.0);
    let on_table = TABLE_Y + ROBOT_HIP;
    vec![
        act(0.0, ActionKind::PlaceObject { object_id: robot(), position: at(0.0, on_table) }),
        act(0.2, ActionKind::StartAnimation { object_id: robot(), animation_id: "walk".into() }),
        act(2.5, ActionKind::TapScreenOnObject { object_id: robot() }),
        act(3.0, ActionKind::DragStart { object_id: robot() }),
        act(3.1, ActionKind::DragMove { object_id: robot(), position: at(0.1, on_table) }),
        act(3.2, ActionKind::DragMove { object_id: robot(), position: at(0.2, on_table) }),
        act(3.3, ActionKind::DragMove { object_id: robot(), position: at(0.3, on_table) }),
        act(3.5, ActionKind::DragMove { object_id: robot(), position: at(1.0, 0.5) }),
        act(3.7, ActionKind::DragMove { object_id: robot(), position: at(1.5, ROBOT_HIP) }),
        act(3.8, ActionKind::DragMove { object_id: robot(), position: at(1.6, ROBOT_HIP) }),
        act(4.0, ActionKind::DragEnd { object_id: robot() }),
        act(5.5, ActionKind::TapScreenOnPlane { plane_id: "floor".into() }),
        act(6.0, ActionKind::TapScreenOnPlane { plane_id: "table".into() }),
    ]
}

fn main() {
    let root = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures".into()));
    for sub in ["scenes", "traces", "library"] {
        fs::create_dir_all(root.join(sub)).unwrap();
    }

    let scenes = root.join("scenes");
    write_scene(&scenes.join("robot.json"), robot_scene());
    robot_labels().save_png(scenes.join("robot_labels.png")).unwrap();
    write_scene(&scenes.join("slope.json"), slope_scene());
    write_scene(&scenes.join("drop_ball.json"), drop_ball_scene());
    write_scene(&scenes.join("minimal.json"), minimal_scene());

    let traces = root.join("traces");
    write_trace(fs::File::create(traces.join("robot.jsonl")).unwrap(), &robot_trace()).unwrap();
    for empty in ["slope.jsonl", "drop_ball.jsonl"] {
        fs::write(traces.join(empty), "").unwrap();
    }

    let library = root.join("library");
    for (name, seconds, rate) in LIBRARY {
        synth_partials(&format!("library:{name}"), *seconds, *rate)
            .write_wav(library.join(format!("{name}.wav")))
            .unwrap();
    }

    let corpus: Vec<_> = CORPUS
        .iter()
        .map(|(id, name, description)| json!({"id": id, "name": name, "description": description}))
        .collect();
    fs::write(
        root.join("freesound_corpus.json"),
        serde_json::to_string_pretty(&corpus).unwrap() + "\n",
    )
    .unwrap();
    println!("wrote fixtures to {}", root.display());
}

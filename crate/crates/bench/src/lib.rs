//! Inputs shared by the benchmarks.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use sonify_core::controller::{format_commands, Command};
use sonify_core::material::{LabelImage, PlaneMask};
use sonify_core::engine::SimConfig;
use sonify_core::{MaterialLabel, Scene, SessionState};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

/// A typical controller reply: five recommendations and one line per
/// other method.
pub fn controller_reply() -> String {
    let mut cmds: Vec<Command> = [
        "Toy Robot Metal Clank",
        "Metal Footsteps On Wood",
        "Wood Knock Table",
        "Footsteps Wood Creak",
        "Crash Aluminum Tray Bang",
    ]
    .iter()
    .map(|n| Command::Recommend(n.to_string()))
    .collect();
    let prompt = "collide toy robot wood metal".to_string();
    cmds.push(Command::Retrieve(prompt.clone()));
    cmds.push(Command::Generate(prompt.clone()));
    cmds.push(Command::Transfer(prompt));
    format_commands(&cmds)
}

/// A 64x64 label image in vertical stripes, with two half-image masks.
pub fn label_case() -> (LabelImage, Vec<PlaneMask>) {
    let labels = (0..64 * 64)
        .map(|i| MaterialLabel::ALL[(i % 64) / 10 % MaterialLabel::ALL.len()])
        .collect();
    let image = LabelImage::new(64, 64, labels).unwrap();
    let left = PlaneMask::new("left".into(), (0..64).flat_map(|y| (0..32).map(move |x| (x, y))));
    let right = PlaneMask::new("right".into(), (0..64).flat_map(|y| (32..64).map(move |x| (x, y))));
    (image, vec![left, right])
}

/// Simulation state of a scene fixture at t = 0, e.g. `"slope"`.
pub fn scene_state(name: &str) -> SessionState {
    let scene = Scene::load(fixtures().join(format!("scenes/{name}.json"))).unwrap();
    SessionState::new(Arc::new(scene), Default::default(), SimConfig::default())
}

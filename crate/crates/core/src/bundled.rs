//! Example scenes shipped with the library. Geometry is schematic; grid
//! sizes and transmitter positions follow the published setups.

use crate::scene::{parse_overlay, parse_scene, Scene, SceneOverlay};

pub const SCENES: [(&str, &str); 4] = [
    ("cubicle", include_str!("../scenes/cubicle.json")),
    ("meeting", include_str!("../scenes/meeting.json")),
    ("dallas", include_str!("../scenes/dallas.json")),
    ("houston", include_str!("../scenes/houston.json")),
];

/// Dynamic variants of the indoor scenes, keyed by base scene name.
pub const OVERLAYS: [(&str, &str); 2] = [
    ("cubicle", include_str!("../scenes/cubicle-dynamic.json")),
    ("meeting", include_str!("../scenes/meeting-dynamic.json")),
];

pub fn scene_text(name: &str) -> Option<&'static str> {
    SCENES.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn overlay_text(name: &str) -> Option<&'static str> {
    OVERLAYS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// # Panics
/// If `name` is not a bundled scene.
pub fn scene(name: &str) -> Scene {
    parse_scene(scene_text(name).unwrap_or_else(|| panic!("no bundled scene \"{name}\"")))
        .expect("bundled scenes are valid")
}

pub fn overlay(name: &str) -> Option<SceneOverlay> {
    overlay_text(name).map(|t| parse_overlay(t).expect("bundled overlays are valid"))
}

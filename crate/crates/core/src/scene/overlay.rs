//! Blueprint → dynamic twin edits.

use super::{ObstacleBox, Scene, SceneError};

#[derive(Clone, Debug, PartialEq)]
pub struct ObstacleMove {
    pub id: String,
    pub center: [f64; 2],
}

/// Edits applied on top of a named blueprint scene: additions first, then
/// removals, then moves.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct SceneOverlay {
    pub base_scene: String,
    pub add: Vec<ObstacleBox>,
    pub remove: Vec<String>,
    pub moves: Vec<ObstacleMove>,
}

impl SceneOverlay {
    pub fn empty(base_scene: impl Into<String>) -> Self {
        Self {
            base_scene: base_scene.into(),
            ..Self::default()
        }
    }
}

pub fn apply_overlay(base: &Scene, overlay: &SceneOverlay) -> Result<Scene, SceneError> {
    if overlay.base_scene != base.name {
        return Err(SceneError::BaseSceneMismatch {
            expected: overlay.base_scene.clone(),
            found: base.name.clone(),
        });
    }
    // references resolve against the blueprint, not against additions
    for id in overlay.remove.iter().chain(overlay.moves.iter().map(|m| &m.id)) {
        if base.object(id).is_none() {
            return Err(SceneError::DanglingReference(id.clone()));
        }
    }

    // additions never collide with removals or moves, which only address
    // blueprint objects, so applying them last keeps the same result
    let mut scene = base.clone();
    scene.objects.retain(|o| !overlay.remove.contains(&o.id));
    for m in &overlay.moves {
        let target = scene
            .objects
            .iter_mut()
            .find(|o| o.id == m.id)
            .ok_or_else(|| SceneError::DanglingReference(m.id.clone()))?;
        target.center = m.center;
    }
    scene.objects.extend(overlay.add.iter().cloned());
    scene.validate()?;
    Ok(scene)
}

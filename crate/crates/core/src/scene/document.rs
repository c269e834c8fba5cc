//! JSON scene and overlay documents.

use serde::{Deserialize, Serialize};

use super::{
    GridSpec, Material, ObstacleBox, ObstacleMove, Scene, SceneError, SceneOverlay,
    TransmitterSpec,
};
use crate::geometry::{Rect, Vec3};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneDoc {
    name: String,
    bounds: BoundsDoc,
    ground_material: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ceiling_height: Option<f64>,
    max_reflections: u32,
    objects: Vec<ObjectDoc>,
    transmitters: Vec<TransmitterDoc>,
    grid: GridDoc,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundsDoc {
    min: [f64; 2],
    max: [f64; 2],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectDoc {
    id: String,
    center: [f64; 2],
    height: f64,
    width: f64,
    length: f64,
    material: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransmitterDoc {
    id: String,
    position: [f64; 3],
    power_dbm: f64,
    frequency_hz: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridDoc {
    origin: [f64; 2],
    nx: usize,
    ny: usize,
    cell_size: f64,
    receiver_height: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OverlayDoc {
    base_scene: String,
    #[serde(default)]
    add: Vec<ObjectDoc>,
    #[serde(default)]
    remove: Vec<String>,
    #[serde(default, rename = "move")]
    moves: Vec<MoveDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MoveDoc {
    id: String,
    center: [f64; 2],
}

fn syntax(e: serde_json::Error) -> SceneError {
    SceneError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

impl TryFrom<ObjectDoc> for ObstacleBox {
    type Error = SceneError;

    fn try_from(o: ObjectDoc) -> Result<Self, SceneError> {
        Ok(ObstacleBox {
            material: o.material.parse()?,
            id: o.id,
            center: o.center,
            height: o.height,
            width: o.width,
            length: o.length,
        })
    }
}

impl From<&ObstacleBox> for ObjectDoc {
    fn from(o: &ObstacleBox) -> Self {
        ObjectDoc {
            id: o.id.clone(),
            center: o.center,
            height: o.height,
            width: o.width,
            length: o.length,
            material: o.material.to_string(),
        }
    }
}

/// Parses and validates a scene document.
pub fn parse_scene(text: &str) -> Result<Scene, SceneError> {
    let doc: SceneDoc = serde_json::from_str(text).map_err(syntax)?;
    let scene = Scene {
        name: doc.name,
        bounds: Rect::new(doc.bounds.min, doc.bounds.max),
        ground_material: doc.ground_material.parse::<Material>()?,
        ceiling_height: doc.ceiling_height,
        max_reflections: doc.max_reflections,
        objects: doc
            .objects
            .into_iter()
            .map(ObstacleBox::try_from)
            .collect::<Result<_, _>>()?,
        transmitters: doc
            .transmitters
            .into_iter()
            .map(|t| TransmitterSpec {
                id: t.id,
                position: Vec3::from_array(t.position),
                power_dbm: t.power_dbm,
                frequency_hz: t.frequency_hz,
            })
            .collect(),
        grid: GridSpec {
            origin: doc.grid.origin,
            nx: doc.grid.nx,
            ny: doc.grid.ny,
            cell_size: doc.grid.cell_size,
            receiver_height: doc.grid.receiver_height,
        },
    };
    scene.validate()?;
    Ok(scene)
}

/// Pretty-printed scene document; `parse_scene` reads it back unchanged.
pub fn serialize_scene(scene: &Scene) -> String {
    let doc = SceneDoc {
        name: scene.name.clone(),
        bounds: BoundsDoc {
            min: scene.bounds.min,
            max: scene.bounds.max,
        },
        ground_material: scene.ground_material.to_string(),
        ceiling_height: scene.ceiling_height,
        max_reflections: scene.max_reflections,
        objects: scene.objects.iter().map(ObjectDoc::from).collect(),
        transmitters: scene
            .transmitters
            .iter()
            .map(|t| TransmitterDoc {
                id: t.id.clone(),
                position: t.position.to_array(),
                power_dbm: t.power_dbm,
                frequency_hz: t.frequency_hz,
            })
            .collect(),
        grid: GridDoc {
            origin: scene.grid.origin,
            nx: scene.grid.nx,
            ny: scene.grid.ny,
            cell_size: scene.grid.cell_size,
            receiver_height: scene.grid.receiver_height,
        },
    };
    serde_json::to_string_pretty(&doc).expect("scene documents always serialize")
}

pub fn parse_overlay(text: &str) -> Result<SceneOverlay, SceneError> {
    let doc: OverlayDoc = serde_json::from_str(text).map_err(syntax)?;
    Ok(SceneOverlay {
        base_scene: doc.base_scene,
        add: doc
            .add
            .into_iter()
            .map(ObstacleBox::try_from)
            .collect::<Result<_, _>>()?,
        remove: doc.remove,
        moves: doc
            .moves
            .into_iter()
            .map(|m| ObstacleMove {
                id: m.id,
                center: m.center,
            })
            .collect(),
    })
}

pub fn serialize_overlay(overlay: &SceneOverlay) -> String {
    let doc = OverlayDoc {
        base_scene: overlay.base_scene.clone(),
        add: overlay.add.iter().map(ObjectDoc::from).collect(),
        remove: overlay.remove.clone(),
        moves: overlay
            .moves
            .iter()
            .map(|m| MoveDoc {
                id: m.id.clone(),
                center: m.center,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("overlay documents always serialize")
}

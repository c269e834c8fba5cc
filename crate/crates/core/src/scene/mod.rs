//! Digital-twin scene model: obstacles, transmitters, the receiver grid and
//! the reflection budget, plus the transformations applied to it (overlays,
//! occupancy rasterization, quadrant splitting).

mod document;
mod material;
mod occupancy;
mod overlay;
mod quadrant;

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

use crate::geometry::{Rect, Vec3};

pub use document::{parse_overlay, parse_scene, serialize_overlay, serialize_scene};
pub use material::{
    material_properties, Material, Permittivity, EPSILON_0, MAX_FREQUENCY_HZ, MIN_FREQUENCY_HZ,
};
pub use occupancy::{to_occupancy, OccupancyGrid};
pub use overlay::{apply_overlay, ObstacleMove, SceneOverlay};
pub use quadrant::{split_quadrants, split_quadrants_by_id, Quadrant};

/// Largest reflection depth a scene may request.
pub const MAX_REFLECTION_DEPTH: u32 = 5;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown material \"{0}\"")]
    UnknownMaterial(String),
    #[error("invalid scene: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("overlay references unknown object id \"{0}\"")]
    DanglingReference(String),
    #[error("overlay targets scene \"{expected}\" but was applied to \"{found}\"")]
    BaseSceneMismatch { expected: String, found: String },
    #[error("frequency {0} Hz is outside the 1-10 GHz material model window")]
    FrequencyOutOfRange(f64),
    #[error("transmitter \"{id}\" is not inside quadrant {quadrant}")]
    TransmitterOutsideQuadrant { id: String, quadrant: Quadrant },
    #[error("scene needs exactly 4 transmitters to split into quadrants, found {0}")]
    QuadrantTransmitters(usize),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// One broken scene invariant.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    NonpositiveDimension { id: String },
    OutOfBounds { id: String },
    DuplicateId(String),
    MissingTransmitter,
    NonpositiveFrequency { id: String },
    TransmitterBelowGround { id: String },
    TransmitterAboveCeiling { id: String },
    EmptyBounds,
    BadGrid(String),
    GridOutOfBounds,
    BadCeiling,
    TooManyReflections(u32),
    NonFinite(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonpositiveDimension { id } => {
                write!(f, "object \"{id}\": nonpositive dimension")
            }
            Violation::OutOfBounds { id } => write!(f, "\"{id}\": out of scene bounds"),
            Violation::DuplicateId(id) => write!(f, "duplicate id \"{id}\""),
            Violation::MissingTransmitter => f.write_str("missing transmitter"),
            Violation::NonpositiveFrequency { id } => {
                write!(f, "transmitter \"{id}\": nonpositive frequency")
            }
            Violation::TransmitterBelowGround { id } => {
                write!(f, "transmitter \"{id}\": height must be above ground")
            }
            Violation::TransmitterAboveCeiling { id } => {
                write!(f, "transmitter \"{id}\": height must be below the ceiling")
            }
            Violation::EmptyBounds => f.write_str("bounds: min must be below max"),
            Violation::BadGrid(msg) => write!(f, "grid: {msg}"),
            Violation::GridOutOfBounds => f.write_str("grid: cell centers must lie inside bounds"),
            Violation::BadCeiling => f.write_str("ceiling_height must be positive"),
            Violation::TooManyReflections(n) => {
                write!(f, "max_reflections {n} exceeds {MAX_REFLECTION_DEPTH}")
            }
            Violation::NonFinite(what) => write!(f, "{what}: non-finite value"),
        }
    }
}

/// An axis-aligned box standing on the ground. `width` spans x and `length`
/// spans y; the box occupies `z ∈ [0, height]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ObstacleBox {
    pub id: String,
    pub center: [f64; 2],
    pub height: f64,
    pub width: f64,
    pub length: f64,
    pub material: Material,
}

impl ObstacleBox {
    pub fn footprint(&self) -> Rect {
        Rect::from_center(self.center, self.width, self.length)
    }

    /// Closed containment test against the solid box.
    pub fn contains(&self, p: Vec3) -> bool {
        p.z >= 0.0 && p.z <= self.height && self.footprint().contains([p.x, p.y])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransmitterSpec {
    pub id: String,
    pub position: Vec3,
    pub power_dbm: f64,
    pub frequency_hz: f64,
}

/// Receiver grid. Cell `(i, j)` covers
/// `[origin.x + i·cell, origin.x + (i+1)·cell] × [origin.y + j·cell, …]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub origin: [f64; 2],
    pub nx: usize,
    pub ny: usize,
    pub cell_size: f64,
    pub receiver_height: f64,
}

impl GridSpec {
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major index, `j` outer.
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn cell_center(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + (i as f64 + 0.5) * self.cell_size,
            self.origin[1] + (j as f64 + 0.5) * self.cell_size,
        ]
    }

    pub fn cell_rect(&self, i: usize, j: usize) -> Rect {
        let min = [
            self.origin[0] + i as f64 * self.cell_size,
            self.origin[1] + j as f64 * self.cell_size,
        ];
        Rect::new(min, [min[0] + self.cell_size, min[1] + self.cell_size])
    }

    pub fn receiver_position(&self, i: usize, j: usize) -> Vec3 {
        let [x, y] = self.cell_center(i, j);
        Vec3::new(x, y, self.receiver_height)
    }

    /// Cell containing the point, or `None` outside the grid. Points on a
    /// shared edge belong to the cell with the larger index.
    pub fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let fi = ((x - self.origin[0]) / self.cell_size).floor();
        let fj = ((y - self.origin[1]) / self.cell_size).floor();
        if fi < 0.0 || fj < 0.0 || fi >= self.nx as f64 || fj >= self.ny as f64 {
            return None;
        }
        Some((fi as usize, fj as usize))
    }

    pub fn extent(&self) -> Rect {
        Rect::new(
            self.origin,
            [
                self.origin[0] + self.nx as f64 * self.cell_size,
                self.origin[1] + self.ny as f64 * self.cell_size,
            ],
        )
    }

    /// All `(i, j)` pairs in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.ny).flat_map(move |j| (0..self.nx).map(move |i| (i, j)))
    }
}

/// The digital twin: map bounds, obstacles, transmitters, receiver grid and
/// the allowed number of reflections.
#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub name: String,
    pub bounds: Rect,
    pub ground_material: Material,
    /// Present for indoor scenes; the ceiling reflects like the ground.
    pub ceiling_height: Option<f64>,
    pub max_reflections: u32,
    pub objects: Vec<ObstacleBox>,
    pub transmitters: Vec<TransmitterSpec>,
    pub grid: GridSpec,
}

impl Scene {
    pub fn transmitter(&self, id: &str) -> Option<&TransmitterSpec> {
        self.transmitters.iter().find(|t| t.id == id)
    }

    pub fn object(&self, id: &str) -> Option<&ObstacleBox> {
        self.objects.iter().find(|o| o.id == id)
    }

    /// Every broken invariant, in a stable order. Empty means valid.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let b = &self.bounds;
        if ![b.min[0], b.min[1], b.max[0], b.max[1]].iter().all(|v| v.is_finite()) {
            out.push(Violation::NonFinite("bounds".into()));
        } else if !(b.min[0] < b.max[0] && b.min[1] < b.max[1]) {
            out.push(Violation::EmptyBounds);
        }
        if let Some(h) = self.ceiling_height {
            if !(h.is_finite() && h > 0.0) {
                out.push(Violation::BadCeiling);
            }
        }
        if self.max_reflections > MAX_REFLECTION_DEPTH {
            out.push(Violation::TooManyReflections(self.max_reflections));
        }

        let mut seen = HashSet::new();
        for o in &self.objects {
            if !seen.insert(o.id.as_str()) {
                out.push(Violation::DuplicateId(o.id.clone()));
            }
            let dims = [o.height, o.width, o.length];
            if !(o.center.iter().chain(dims.iter()).all(|v| v.is_finite())) {
                out.push(Violation::NonFinite(format!("object \"{}\"", o.id)));
                continue;
            }
            if dims.iter().any(|&d| d <= 0.0) {
                out.push(Violation::NonpositiveDimension { id: o.id.clone() });
            } else if !b.contains_rect(&o.footprint()) {
                out.push(Violation::OutOfBounds { id: o.id.clone() });
            }
        }

        if self.transmitters.is_empty() {
            out.push(Violation::MissingTransmitter);
        }
        for t in &self.transmitters {
            if !seen.insert(t.id.as_str()) {
                out.push(Violation::DuplicateId(t.id.clone()));
            }
            if !(t.position.is_finite() && t.power_dbm.is_finite() && t.frequency_hz.is_finite()) {
                out.push(Violation::NonFinite(format!("transmitter \"{}\"", t.id)));
                continue;
            }
            if t.frequency_hz <= 0.0 {
                out.push(Violation::NonpositiveFrequency { id: t.id.clone() });
            }
            if !b.contains([t.position.x, t.position.y]) {
                out.push(Violation::OutOfBounds { id: t.id.clone() });
            }
            if t.position.z <= 0.0 {
                out.push(Violation::TransmitterBelowGround { id: t.id.clone() });
            }
            if matches!(self.ceiling_height, Some(h) if t.position.z >= h) {
                out.push(Violation::TransmitterAboveCeiling { id: t.id.clone() });
            }
        }

        let g = &self.grid;
        if !(g.origin.iter().all(|v| v.is_finite())
            && g.cell_size.is_finite()
            && g.receiver_height.is_finite())
        {
            out.push(Violation::NonFinite("grid".into()));
        } else if g.nx == 0 || g.ny == 0 {
            out.push(Violation::BadGrid("nx and ny must be at least 1".into()));
        } else if g.cell_size <= 0.0 {
            out.push(Violation::BadGrid("cell_size must be positive".into()));
        } else if !(b.contains(g.cell_center(0, 0)) && b.contains(g.cell_center(g.nx - 1, g.ny - 1)))
        {
            out.push(Violation::GridOutOfBounds);
        }
        out
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(SceneError::Invalid(v))
        }
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn tx(id: &str, x: f64, y: f64, z: f64) -> TransmitterSpec {
        TransmitterSpec {
            id: id.into(),
            position: Vec3::new(x, y, z),
            power_dbm: 20.0,
            frequency_hz: 2.4e9,
        }
    }

    pub fn obstacle(id: &str, cx: f64, cy: f64, w: f64, l: f64, h: f64) -> ObstacleBox {
        ObstacleBox {
            id: id.into(),
            center: [cx, cy],
            height: h,
            width: w,
            length: l,
            material: Material::Wood,
        }
    }

    /// 10 m × 10 m room centered at the origin with a 10×10 grid of 1 m cells.
    pub fn room() -> Scene {
        Scene {
            name: "room".into(),
            bounds: Rect::new([-5.0, -5.0], [5.0, 5.0]),
            ground_material: Material::Concrete,
            ceiling_height: None,
            max_reflections: 1,
            objects: vec![],
            transmitters: vec![tx("tx", 0.0, 0.0, 2.0)],
            grid: GridSpec {
                origin: [-5.0, -5.0],
                nx: 10,
                ny: 10,
                cell_size: 1.0,
                receiver_height: 1.0,
            },
        }
    }
}

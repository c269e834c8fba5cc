//! Splitting a city-scale twin into four per-access-point quadrants.

use std::fmt;

use super::{GridSpec, Scene, SceneError, TransmitterSpec};
use crate::geometry::Rect;

/// Quadrants about the bounds center, numbered Q1 (−x, −y), Q2 (−x, +y),
/// Q3 (+x, +y), Q4 (+x, −y).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Quadrant {
    Q1,
    Q2,
    Q3,
    Q4,
}

impl Quadrant {
    pub const ALL: [Quadrant; 4] = [Quadrant::Q1, Quadrant::Q2, Quadrant::Q3, Quadrant::Q4];

    pub fn number(self) -> usize {
        match self {
            Quadrant::Q1 => 1,
            Quadrant::Q2 => 2,
            Quadrant::Q3 => 3,
            Quadrant::Q4 => 4,
        }
    }

    pub fn from_number(n: usize) -> Option<Self> {
        Quadrant::ALL.get(n.wrapping_sub(1)).copied()
    }

    fn upper_x(self) -> bool {
        matches!(self, Quadrant::Q3 | Quadrant::Q4)
    }

    fn upper_y(self) -> bool {
        matches!(self, Quadrant::Q2 | Quadrant::Q3)
    }

    pub fn rect(self, bounds: &Rect) -> Rect {
        let c = bounds.center();
        let (x0, x1) = if self.upper_x() { (c[0], bounds.max[0]) } else { (bounds.min[0], c[0]) };
        let (y0, y1) = if self.upper_y() { (c[1], bounds.max[1]) } else { (bounds.min[1], c[1]) };
        Rect::new([x0, y0], [x1, y1])
    }
}

impl fmt::Display for Quadrant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q{}", self.number())
    }
}

/// First index whose cell center is at or beyond `split` along one axis.
fn split_index(origin: f64, cell: f64, n: usize, split: f64) -> usize {
    (0..n)
        .find(|&k| origin + (k as f64 + 0.5) * cell >= split)
        .unwrap_or(n)
}

/// Splits `scene` into four quadrant scenes, each carrying only its own
/// transmitter, the obstacles overlapping it (clipped to the quadrant), and
/// the grid cells whose centers fall inside it. Cells on the split line go
/// to the upper quadrant, so the four sub-grids partition the grid.
pub fn split_quadrants(
    scene: &Scene,
    tx_per_quadrant: &[TransmitterSpec; 4],
) -> Result<[Scene; 4], SceneError> {
    let g = &scene.grid;
    let c = scene.bounds.center();
    let si = split_index(g.origin[0], g.cell_size, g.nx, c[0]);
    let sj = split_index(g.origin[1], g.cell_size, g.ny, c[1]);

    let mut out = Vec::with_capacity(4);
    for (q, tx) in Quadrant::ALL.into_iter().zip(tx_per_quadrant) {
        let rect = q.rect(&scene.bounds);
        if !rect.contains([tx.position.x, tx.position.y]) {
            return Err(SceneError::TransmitterOutsideQuadrant {
                id: tx.id.clone(),
                quadrant: q,
            });
        }
        let (i0, i1) = if q.upper_x() { (si, g.nx) } else { (0, si) };
        let (j0, j1) = if q.upper_y() { (sj, g.ny) } else { (0, sj) };
        let objects = scene
            .objects
            .iter()
            .filter_map(|o| {
                let clip = o.footprint().overlap(&rect)?;
                let mut o = o.clone();
                o.center = clip.center();
                o.width = clip.width();
                o.length = clip.height();
                Some(o)
            })
            .collect();
        out.push(Scene {
            name: format!("{}-q{}", scene.name, q.number()),
            bounds: rect,
            ground_material: scene.ground_material,
            ceiling_height: scene.ceiling_height,
            max_reflections: scene.max_reflections,
            objects,
            transmitters: vec![tx.clone()],
            grid: GridSpec {
                origin: [
                    g.origin[0] + i0 as f64 * g.cell_size,
                    g.origin[1] + j0 as f64 * g.cell_size,
                ],
                nx: i1 - i0,
                ny: j1 - j0,
                cell_size: g.cell_size,
                receiver_height: g.receiver_height,
            },
        });
    }
    Ok(out.try_into().expect("four quadrants"))
}

/// Splits a scene that carries exactly four transmitters, assigned to
/// Q1..Q4 in id order.
pub fn split_quadrants_by_id(scene: &Scene) -> Result<[Scene; 4], SceneError> {
    let mut txs = scene.transmitters.clone();
    if txs.len() != 4 {
        return Err(SceneError::QuadrantTransmitters(txs.len()));
    }
    txs.sort_by(|a, b| a.id.cmp(&b.id));
    split_quadrants(scene, &txs.try_into().expect("length checked"))
}

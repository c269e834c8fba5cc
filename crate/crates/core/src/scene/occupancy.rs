//! Obstacle rasterization onto the receiver grid.

use super::Scene;

/// Per-cell blocked flags, row-major with `j` outer like [`super::GridSpec`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OccupancyGrid {
    pub nx: usize,
    pub ny: usize,
    pub blocked: Vec<bool>,
}

impl OccupancyGrid {
    pub fn free(nx: usize, ny: usize) -> Self {
        Self {
            nx,
            ny,
            blocked: vec![false; nx * ny],
        }
    }

    pub fn contains(&self, i: i64, j: i64) -> bool {
        i >= 0 && j >= 0 && (i as usize) < self.nx && (j as usize) < self.ny
    }

    pub fn is_blocked(&self, i: usize, j: usize) -> bool {
        self.blocked[j * self.nx + i]
    }

    /// `false` for out-of-grid cells as well as blocked ones.
    pub fn is_free(&self, i: i64, j: i64) -> bool {
        self.contains(i, j) && !self.is_blocked(i as usize, j as usize)
    }

    pub fn blocked_count(&self) -> usize {
        self.blocked.iter().filter(|&&b| b).count()
    }
}

/// A cell is blocked iff its closed rectangle meets the closed footprint of
/// any obstacle; touching edges count.
pub fn to_occupancy(scene: &Scene) -> OccupancyGrid {
    let g = &scene.grid;
    let footprints: Vec<_> = scene.objects.iter().map(|o| o.footprint()).collect();
    let blocked = g
        .cells()
        .map(|(i, j)| {
            let cell = g.cell_rect(i, j);
            footprints.iter().any(|f| f.intersects(&cell))
        })
        .collect();
    OccupancyGrid {
        nx: g.nx,
        ny: g.ny,
        blocked,
    }
}

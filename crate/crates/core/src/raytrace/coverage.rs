//! Per-cell aggregation of traced paths over the receiver grid.

use std::io::{self, Write};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::scene::{to_occupancy, GridSpec, Scene};

use super::{PropagationPath, TraceError, Tracer};

#[derive(Clone, Debug, PartialEq)]
pub struct CellRecord {
    pub i: usize,
    pub j: usize,
    pub paths: Vec<PropagationPath>,
    /// `10·log10 |Σ Θ|²`; `None` for dead cells.
    pub coherent_gain_db: Option<f64>,
    /// Index into `paths` of the largest `|Θ|`.
    pub strongest: Option<usize>,
    /// The cell center lies under an obstacle footprint.
    pub blocked: bool,
}

impl CellRecord {
    pub fn from_paths(i: usize, j: usize, paths: Vec<PropagationPath>) -> Self {
        let (coherent_gain_db, strongest) = if paths.is_empty() {
            (None, None)
        } else {
            let sum: Complex64 = paths.iter().map(|p| p.theta).sum();
            let strongest = paths
                .iter()
                .enumerate()
                .fold(0, |best, (k, p)| if p.theta.norm() > paths[best].theta.norm() { k } else { best });
            (Some(10.0 * sum.norm_sqr().log10()), Some(strongest))
        };
        CellRecord {
            i,
            j,
            paths,
            coherent_gain_db,
            strongest,
            blocked: false,
        }
    }

    fn blocked(i: usize, j: usize) -> Self {
        CellRecord {
            blocked: true,
            ..Self::from_paths(i, j, vec![])
        }
    }

    pub fn is_dead(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn strongest_path(&self) -> Option<&PropagationPath> {
        self.strongest.map(|k| &self.paths[k])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoverageMap {
    pub grid: GridSpec,
    pub transmitter_id: String,
    pub power_dbm: f64,
    /// Row-major, `j` outer.
    pub cells: Vec<CellRecord>,
}

impl CoverageMap {
    pub fn cell(&self, i: usize, j: usize) -> &CellRecord {
        &self.cells[self.grid.index(i, j)]
    }

    pub fn dead_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_dead()).count()
    }

    pub fn dead_fraction(&self) -> f64 {
        if self.cells.is_empty() {
            0.0
        } else {
            self.dead_count() as f64 / self.cells.len() as f64
        }
    }

    /// Coherent gain plus transmit power, dBm.
    pub fn received_power_dbm(&self, i: usize, j: usize) -> Option<f64> {
        self.cell(i, j).coherent_gain_db.map(|g| g + self.power_dbm)
    }

    /// `i,j,x,y,n_paths,gain_db,strongest_theta_re,strongest_theta_im`, one
    /// record per cell ordered by `(i, j)`. Dead cells leave the last three
    /// fields empty.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "i,j,x,y,n_paths,gain_db,strongest_theta_re,strongest_theta_im")?;
        for i in 0..self.grid.nx {
            for j in 0..self.grid.ny {
                let c = self.cell(i, j);
                let [x, y] = self.grid.cell_center(i, j);
                write!(w, "{i},{j},{x},{y},{}", c.paths.len())?;
                match (c.coherent_gain_db, c.strongest_path()) {
                    (Some(g), Some(p)) => {
                        writeln!(w, ",{g:.16e},{:.16e},{:.16e}", p.theta.re, p.theta.im)?
                    }
                    _ => writeln!(w, ",,,")?,
                }
            }
        }
        Ok(())
    }
}

/// Traces every free cell center at the grid's receiver height. Cells whose
/// rectangle touches an obstacle footprint are dead without tracing. The
/// result does not depend on how many threads run it.
pub fn coverage_map(scene: &Scene, tx_id: &str) -> Result<CoverageMap, TraceError> {
    let tracer = Tracer::new(scene, tx_id)?;
    coverage_with(scene, &tracer)
}

/// [`coverage_map`] on a dedicated pool of `workers` threads.
pub fn coverage_map_with_workers(
    scene: &Scene,
    tx_id: &str,
    workers: usize,
) -> Result<CoverageMap, TraceError> {
    let tracer = Tracer::new(scene, tx_id)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| TraceError::WorkerPool(e.to_string()))?;
    pool.install(|| coverage_with(scene, &tracer))
}

/// Worker count requested through `RAYDAR_THREADS`, if set to a positive
/// integer.
pub fn env_worker_count() -> Option<usize> {
    std::env::var("RAYDAR_THREADS").ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Coverage of `scene`'s grid from an already built tracer.
pub fn coverage_with(scene: &Scene, tracer: &Tracer) -> Result<CoverageMap, TraceError> {
    let grid = scene.grid;
    let occupancy = to_occupancy(scene);
    let cells = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k % grid.nx, k / grid.nx);
            if occupancy.is_blocked(i, j) {
                return Ok(CellRecord::blocked(i, j));
            }
            let paths = tracer.move_receiver(grid.receiver_position(i, j))?;
            Ok(CellRecord::from_paths(i, j, paths))
        })
        .collect::<Result<Vec<_>, TraceError>>()?;
    Ok(CoverageMap {
        grid,
        transmitter_id: tracer.transmitter().id.clone(),
        power_dbm: tracer.transmitter().power_dbm,
        cells,
    })
}

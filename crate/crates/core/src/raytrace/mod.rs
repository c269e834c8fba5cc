//! Deterministic image-method ray tracing: specular multipath between one
//! transmitter and any receiver position, per-path channel coefficients and
//! coverage maps over the scene grid.

mod coverage;
mod facet;
mod fresnel;
mod image_tree;
mod path;
mod tracer;

use thiserror::Error;

use crate::geometry::Vec3;
use crate::scene::SceneError;

pub use coverage::{
    coverage_map, coverage_map_with_workers, coverage_with, env_worker_count, CellRecord, CoverageMap,
};
pub use facet::{build_facets, Facet, FacetKind};
pub use fresnel::{fresnel_gamma, Polarization};
pub use image_tree::{build_image_tree, ImageNode, ImageTree};
pub use path::{direction_angles, incidence_angle, path_coefficient, wrap_phase, PropagationPath};
pub use tracer::{trace_paths, Tracer, OCCLUSION_EPS};

/// Meters per second.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("receiver at ({}, {}, {}) is inside an obstacle", .0.x, .0.y, .0.z)]
    ReceiverInsideObstacle(Vec3),
    #[error("receiver at ({}, {}, {}) is outside the scene bounds", .0.x, .0.y, .0.z)]
    ReceiverOutOfBounds(Vec3),
    #[error("no transmitter with id \"{0}\"")]
    UnknownTransmitter(String),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("worker pool: {0}")]
    WorkerPool(String),
}

//! Digital-twin radio ray tracing and deep Q-network robot navigation.
//!
//! The pipeline runs left to right through the modules: a [`scene`] is
//! traced by [`raytrace`] into a coverage map, [`dataset`] flattens that map
//! into per-cell feature rows, [`rlenv`] wraps the rows and the scene's
//! occupancy grid into a navigation environment, and [`dqn`] trains and runs
//! the Q-network policy on it.

pub mod bundled;
pub mod dataset;
pub mod dqn;
pub mod geometry;
pub mod raytrace;
pub mod rlenv;
pub mod scene;
pub mod svg;

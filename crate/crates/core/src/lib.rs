//! Visibility estimation for roadside sensors.
//!
//! The crate models what an infrastructure sensor (radar or camera on a
//! gantry) can actually observe: occupancy grids are accumulated from
//! measurements, line-of-sight raytracing turns occupancy into per-cell
//! visibility, and the result is scored against ground truth with a
//! four-way visible/invisible confusion scheme.
//!
//! Module layout, bottom to top:
//!
//! - [`grid`]: grid domains (2D, polar, spherical, voxel) and transforms
//! - [`sensor`]: measurements, filtering, inverse sensor models, boxes
//! - [`visibility`]: raytracers and per-object visibility queries
//! - [`metrics`]: detection association and confusion-rate evaluation
//! - [`sim`]: deterministic synthetic highway scenes with an occlusion oracle
//! - [`pipeline`]: the four end-to-end estimators
//! - [`io`]: log, snapshot, and report file formats

pub mod grid;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod sensor;
pub mod sim;
pub mod visibility;

//! Training-free 3D anomaly detection and segmentation.
//!
//! The pipeline is: organized point cloud + RGB sample → optional 3D-aware
//! background removal → per-patch descriptors on a 28×28 grid → nearest
//! neighbour distance to a memory bank of normal patches → anomaly maps →
//! I-ROC / P-ROC / PRO evaluation.

pub mod descriptors;
pub mod error;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod preprocess;
pub mod scoring;
pub mod synth;

pub use error::{Error, Result};

/// Side length of the patch grid every descriptor is pooled to.
pub const GRID_SIZE: usize = 28;

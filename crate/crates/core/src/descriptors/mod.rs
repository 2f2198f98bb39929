//! Patch descriptors φ(x, j), one per cell of a square patch grid.

pub mod dsift;
pub mod fpfh;
pub mod grid;
pub mod hog;
pub mod raw;

pub use dsift::dsift_depth;
pub use fpfh::{fpfh_grid, fpfh_points, spfh, FpfhParams};
pub use grid::{
    concat_features, pool_to_grid, rgb_deep_from_tensor, ChannelStandardizer, Method, PatchFeatureGrid,
};
pub use hog::hog_depth;
pub use raw::{raw_depth_patches, rgb_raw_patches};

/// Side of the square pixel cell behind one patch at working resolution.
pub const CELL: usize = 8;

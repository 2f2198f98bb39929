//! Spatial kernels shared by preprocessing and descriptors.

pub mod dbscan;
pub mod kdtree;
pub mod normals;
pub mod ransac;

pub use dbscan::{dbscan, NOISE};
pub use kdtree::{Neighbor, SpatialIndex};
pub use normals::{estimate_normals, NormalField, NormalParams};
pub use ransac::{ransac_plane, PlaneModel, RansacParams};

use crate::io::OrganizedPointCloud;

/// Unorganized view of the valid points of an organized cloud.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointSet {
    pub points: Vec<[f32; 3]>,
    /// Grid cell `(i, j)` each row came from.
    pub back_index: Vec<(usize, usize)>,
}

impl PointSet {
    pub fn from_cloud(cloud: &OrganizedPointCloud) -> Self {
        let mut points = Vec::new();
        let mut back_index = Vec::new();
        for i in 0..cloud.height() {
            for j in 0..cloud.width() {
                let p = cloud.get(i, j);
                if crate::io::image::is_valid_point(p) {
                    points.push(p);
                    back_index.push((i, j));
                }
            }
        }
        Self { points, back_index }
    }

    /// Point set without grid provenance; `back_index` is left empty.
    pub fn from_points(points: Vec<[f32; 3]>) -> Self {
        Self {
            points,
            back_index: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[inline]
pub(crate) fn to_f64(p: [f32; 3]) -> [f64; 3] {
    [p[0] as f64, p[1] as f64, p[2] as f64]
}

#[inline]
pub(crate) fn sub(a: [f32; 3], b: [f32; 3]) -> [f64; 3] {
    [
        a[0] as f64 - b[0] as f64,
        a[1] as f64 - b[1] as f64,
        a[2] as f64 - b[2] as f64,
    ]
}

#[inline]
pub(crate) fn dist2(a: [f32; 3], b: [f32; 3]) -> f64 {
    let d = sub(a, b);
    d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
}

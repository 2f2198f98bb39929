//! Surface normals from local covariance (smallest principal axis).

use nalgebra::{Matrix3, SymmetricEigen};
use rayon::prelude::*;

use super::{sub, SpatialIndex};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalParams {
    pub radius: f32,
    pub max_nn: usize,
    pub viewpoint: [f32; 3],
}

impl Default for NormalParams {
    fn default() -> Self {
        Self {
            radius: 0.05,
            max_nn: 30,
            viewpoint: [0.0; 3],
        }
    }
}

/// Unit normals, one per point, oriented toward the viewpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalField {
    pub normals: Vec<[f32; 3]>,
}

/// Normal used when a neighborhood cannot define a plane.
pub const FALLBACK_NORMAL: [f32; 3] = [0.0, 0.0, 1.0];

fn orient(n: [f64; 3], p: [f32; 3], viewpoint: [f32; 3]) -> [f32; 3] {
    let to_view = sub(viewpoint, p);
    let dot = n[0] * to_view[0] + n[1] * to_view[1] + n[2] * to_view[2];
    let s = if dot < 0.0 { -1.0 } else { 1.0 };
    [(s * n[0]) as f32, (s * n[1]) as f32, (s * n[2]) as f32]
}

/// Normal of point `i` from its neighborhood (the point itself included).
///
/// The covariance is built from displacements relative to the query point,
/// which keeps the result bit-identical under exact translations.
pub fn point_normal(index: &SpatialIndex, i: usize, params: &NormalParams) -> [f32; 3] {
    let points = index.points();
    let p = points[i];
    let neighbors = index.neighbors_of(i, params.radius, params.max_nn);
    if neighbors.len() < 3 {
        return orient(to_f64_normal(FALLBACK_NORMAL), p, params.viewpoint);
    }
    let n = (neighbors.len() + 1) as f64;
    let mut mean = [0.0f64; 3];
    let mut second = Matrix3::<f64>::zeros();
    for nb in &neighbors {
        let d = sub(points[nb.index], p);
        for a in 0..3 {
            mean[a] += d[a];
            for b in 0..3 {
                second[(a, b)] += d[a] * d[b];
            }
        }
    }
    let mut cov = Matrix3::<f64>::zeros();
    for a in 0..3 {
        for b in 0..3 {
            cov[(a, b)] = second[(a, b)] / n - (mean[a] / n) * (mean[b] / n);
        }
    }
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let (l_min, l_mid, l_max) = (
        eig.eigenvalues[order[0]],
        eig.eigenvalues[order[1]],
        eig.eigenvalues[order[2]],
    );
    // collinear or coincident neighborhoods have no unique plane
    if !(l_max > 0.0) || l_mid <= l_max * 1e-12 {
        return orient(to_f64_normal(FALLBACK_NORMAL), p, params.viewpoint);
    }
    let _ = l_min;
    let v = eig.eigenvectors.column(order[0]);
    let norm = v.norm();
    orient([v[0] / norm, v[1] / norm, v[2] / norm], p, params.viewpoint)
}

fn to_f64_normal(n: [f32; 3]) -> [f64; 3] {
    [n[0] as f64, n[1] as f64, n[2] as f64]
}

pub fn estimate_normals(index: &SpatialIndex, params: &NormalParams) -> NormalField {
    let normals = (0..index.len())
        .into_par_iter()
        .map(|i| point_normal(index, i, params))
        .collect();
    NormalField { normals }
}

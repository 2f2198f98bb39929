use nalgebra::{Matrix3, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::to_f64;
use crate::error::{Error, Result};

/// Plane `normal · p + offset = 0` with a unit normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneModel {
    pub normal: [f32; 3],
    pub offset: f32,
}

impl PlaneModel {
    pub fn signed_distance(&self, p: [f32; 3]) -> f64 {
        let n = to_f64(self.normal);
        let q = to_f64(p);
        n[0] * q[0] + n[1] * q[1] + n[2] * q[2] + self.offset as f64
    }

    pub fn distance(&self, p: [f32; 3]) -> f64 {
        self.signed_distance(p).abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RansacParams {
    pub n_sample: usize,
    pub iterations: usize,
    pub inlier_thresh: f32,
}

impl Default for RansacParams {
    fn default() -> Self {
        Self {
            n_sample: 50,
            iterations: 1000,
            inlier_thresh: 0.005,
        }
    }
}

/// Least-squares plane through `points`; `None` when they are collinear.
pub fn fit_plane(points: &[[f32; 3]]) -> Option<PlaneModel> {
    if points.len() < 3 {
        return None;
    }
    let n = points.len() as f64;
    let mut c = [0.0f64; 3];
    for p in points {
        let q = to_f64(*p);
        for a in 0..3 {
            c[a] += q[a];
        }
    }
    c.iter_mut().for_each(|v| *v /= n);
    let mut cov = Matrix3::<f64>::zeros();
    for p in points {
        let q = to_f64(*p);
        let d = [q[0] - c[0], q[1] - c[1], q[2] - c[2]];
        for a in 0..3 {
            for b in 0..3 {
                cov[(a, b)] += d[a] * d[b];
            }
        }
    }
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let l_mid = eig.eigenvalues[order[1]];
    let l_max = eig.eigenvalues[order[2]];
    if !(l_max > 0.0) || l_mid <= l_max * 1e-10 {
        return None;
    }
    let v = eig.eigenvectors.column(order[0]);
    let norm = v.norm();
    let normal = [v[0] / norm, v[1] / norm, v[2] / norm];
    let offset = -(normal[0] * c[0] + normal[1] * c[1] + normal[2] * c[2]);
    Some(PlaneModel {
        normal: [normal[0] as f32, normal[1] as f32, normal[2] as f32],
        offset: offset as f32,
    })
}

/// Robust plane fit. Every round draws `n_sample` distinct points, fits a
/// least-squares plane to all of them and keeps the model with the most
/// points within `inlier_thresh`; earlier rounds win ties.
pub fn ransac_plane(points: &[[f32; 3]], params: &RansacParams, seed: u64) -> Result<PlaneModel> {
    if params.n_sample < 3 {
        return Err(Error::InvalidParameter(format!(
            "ransac n_sample must be ≥ 3, got {}",
            params.n_sample
        )));
    }
    if points.len() < params.n_sample {
        return Err(Error::InsufficientPoints {
            needed: params.n_sample,
            have: points.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let thresh = params.inlier_thresh as f64;
    let mut best: Option<(usize, PlaneModel)> = None;
    let mut sample = Vec::with_capacity(params.n_sample);
    for _ in 0..params.iterations {
        sample.clear();
        let picks = rand::seq::index::sample(&mut rng, points.len(), params.n_sample);
        sample.extend(picks.iter().map(|k| points[k]));
        let Some(model) = fit_plane(&sample) else {
            continue;
        };
        let inliers = points.iter().filter(|&&p| model.distance(p) <= thresh).count();
        if best.is_none_or(|(count, _)| inliers > count) {
            best = Some((inliers, model));
        }
    }
    best.map(|(_, m)| m).ok_or_else(|| {
        Error::InvalidParameter("every RANSAC sample was degenerate (collinear points)".into())
    })
}

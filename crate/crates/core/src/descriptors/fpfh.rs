//! Fast point feature histograms on organized clouds.
//!
//! Each angle feature is histogrammed with linear interpolation between
//! neighbouring bin centers (θ wraps around), so the descriptor varies
//! continuously with the input geometry.

use std::f64::consts::PI;

use log::warn;
use rayon::prelude::*;

use super::{pool_to_grid, Method, PatchFeatureGrid};
use crate::error::{Error, Result};
use crate::geometry::{estimate_normals, sub, Neighbor, NormalField, NormalParams, PointSet, SpatialIndex};
use crate::io::OrganizedPointCloud;
use crate::GRID_SIZE;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FpfhParams {
    pub radius: f32,
    pub max_nn: usize,
    pub bins_per_angle: usize,
    pub normals: NormalParams,
    pub grid_size: usize,
}

impl Default for FpfhParams {
    fn default() -> Self {
        Self {
            radius: 0.25,
            max_nn: 100,
            bins_per_angle: 11,
            normals: NormalParams::default(),
            grid_size: GRID_SIZE,
        }
    }
}

impl FpfhParams {
    pub fn dim(&self) -> usize {
        3 * self.bins_per_angle
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) || self.max_nn == 0 || self.bins_per_angle < 2 {
            return Err(Error::InvalidParameter(
                "fpfh needs radius > 0, max_nn ≥ 1, bins_per_angle ≥ 2".into(),
            ));
        }
        if !(self.normals.radius > 0.0) {
            return Err(Error::InvalidParameter("normal radius must be > 0".into()));
        }
        Ok(())
    }
}

#[inline]
fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
fn f64v(n: [f32; 3]) -> [f64; 3] {
    [n[0] as f64, n[1] as f64, n[2] as f64]
}

/// Darboux-frame features `(α, φ, θ)` of the pair (source, target), or
/// `None` when the frame is undefined (coincident points, or displacement
/// parallel to the source normal).
pub fn pair_features(ps: [f32; 3], ns: [f32; 3], pt: [f32; 3], nt: [f32; 3]) -> Option<(f64, f64, f64)> {
    let d = sub(pt, ps);
    let dist = dot(d, d).sqrt();
    if dist == 0.0 {
        return None;
    }
    let u = f64v(ns);
    let nt = f64v(nt);
    let c = cross(d, u);
    let cn = dot(c, c).sqrt();
    if cn <= dist * 1e-12 {
        return None;
    }
    let v = [c[0] / cn, c[1] / cn, c[2] / cn];
    let w = cross(u, v);
    let alpha = dot(v, nt);
    let phi = dot(u, d) / dist;
    let theta = dot(w, nt).atan2(dot(u, nt));
    Some((alpha, phi, theta))
}

/// Linear vote of `value ∈ [lo, hi]` into `bins` uniform bins (centers at
/// bin midpoints). Out-of-range values clamp to the end bins unless
/// `circular`, in which case the first and last bins are adjacent.
pub fn soft_bin(hist: &mut [f64], value: f64, lo: f64, hi: f64, circular: bool) {
    let bins = hist.len();
    let c = (value - lo) / (hi - lo) * bins as f64 - 0.5;
    if circular {
        let b0 = c.floor();
        let f = c - b0;
        let b0 = (b0 as i64).rem_euclid(bins as i64) as usize;
        hist[b0] += 1.0 - f;
        hist[(b0 + 1) % bins] += f;
    } else {
        let c = c.clamp(0.0, (bins - 1) as f64);
        let b0 = (c.floor() as usize).min(bins - 1);
        let f = c - b0 as f64;
        hist[b0] += 1.0 - f;
        if f > 0.0 {
            hist[b0 + 1] += f;
        }
    }
}

/// Simplified point feature histogram of point `p` over `neighbors`:
/// three sub-histograms (α, φ, θ), each normalized to sum to 100.
/// `None` when no neighbor yields a valid pair.
pub fn spfh(
    p: usize,
    points: &[[f32; 3]],
    normals: &NormalField,
    neighbors: &[Neighbor],
    bins: usize,
) -> Option<Vec<f64>> {
    let mut hist = vec![0.0f64; 3 * bins];
    let mut pairs = 0usize;
    for nb in neighbors {
        if nb.index == p {
            continue;
        }
        let Some((alpha, phi, theta)) = pair_features(
            points[p],
            normals.normals[p],
            points[nb.index],
            normals.normals[nb.index],
        ) else {
            continue;
        };
        let (ha, rest) = hist.split_at_mut(bins);
        let (hp, ht) = rest.split_at_mut(bins);
        soft_bin(ha, alpha, -1.0, 1.0, false);
        soft_bin(hp, phi, -1.0, 1.0, false);
        soft_bin(ht, theta, -PI, PI, true);
        pairs += 1;
    }
    if pairs == 0 {
        return None;
    }
    let scale = 100.0 / pairs as f64;
    hist.iter_mut().for_each(|v| *v *= scale);
    Some(hist)
}

/// Per-point FPFH: `SPFH(p) + (1/k) Σ SPFH(pᵢ) / ‖p − pᵢ‖` over the `k`
/// neighbors of `p`. Points without a valid SPFH get the zero vector.
pub fn fpfh_points(ps: &PointSet, params: &FpfhParams) -> Result<Vec<Vec<f64>>> {
    params.validate()?;
    let bins = params.bins_per_angle;
    let dim = params.dim();
    if ps.is_empty() {
        return Ok(Vec::new());
    }
    let index = SpatialIndex::build(ps);
    let normals = estimate_normals(&index, &params.normals);
    let neighborhoods: Vec<Vec<Neighbor>> = (0..ps.len())
        .into_par_iter()
        .map(|i| index.neighbors_of(i, params.radius, params.max_nn))
        .collect();
    let spfhs: Vec<Option<Vec<f64>>> = (0..ps.len())
        .into_par_iter()
        .map(|i| spfh(i, &ps.points, &normals, &neighborhoods[i], bins))
        .collect();
    Ok((0..ps.len())
        .into_par_iter()
        .map(|i| {
            let Some(own) = &spfhs[i] else {
                return vec![0.0; dim];
            };
            let mut out = own.clone();
            let valid: Vec<&Neighbor> = neighborhoods[i].iter().filter(|n| n.distance > 0.0).collect();
            if valid.is_empty() {
                return out;
            }
            let k = valid.len() as f64;
            for nb in valid {
                if let Some(h) = &spfhs[nb.index] {
                    let wt = 1.0 / (nb.distance * k);
                    for (o, v) in out.iter_mut().zip(h) {
                        *o += wt * v;
                    }
                }
            }
            out
        })
        .collect())
}

/// FPFH of every valid point, scattered back onto the organized grid
/// (invalid cells hold zeros) and average-pooled to `params.grid_size`².
pub fn fpfh_grid(cloud: &OrganizedPointCloud, params: &FpfhParams) -> Result<PatchFeatureGrid> {
    params.validate()?;
    let dim = params.dim();
    let ps = PointSet::from_cloud(cloud);
    if ps.is_empty() {
        warn!("fpfh: cloud has no valid points, emitting a zero grid");
        return Ok(PatchFeatureGrid::zeros(params.grid_size, dim, Method::Fpfh));
    }
    let features = fpfh_points(&ps, params)?;
    let (h, w) = (cloud.height(), cloud.width());
    let mut dense = vec![0.0f32; h * w * dim];
    for (f, &(i, j)) in features.iter().zip(&ps.back_index) {
        let base = (i * w + j) * dim;
        for (slot, v) in dense[base..base + dim].iter_mut().zip(f) {
            *slot = *v as f32;
        }
    }
    pool_to_grid(&dense, h, w, dim, params.grid_size, Method::Fpfh)
}

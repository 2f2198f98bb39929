//! Dense SIFT on depth maps: one 128-d descriptor per 8×8 cell, computed
//! over a 16×16 support centered on the cell and rotated to the dominant
//! gradient orientation of that support.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::hog::gradients;
use super::{Method, PatchFeatureGrid, CELL};
use crate::error::{Error, Result};
use crate::io::DepthMap;

const SPATIAL_BINS: usize = 4;
const ORIENT_BINS: usize = 8;
const SUPPORT: f64 = 16.0;
const ORIENT_HIST_BINS: usize = 36;
const CLAMP: f64 = 0.2;

pub const DSIFT_DIM: usize = SPATIAL_BINS * SPATIAL_BINS * ORIENT_BINS;

struct Field {
    width: usize,
    height: usize,
    mag: Vec<f64>,
    angle: Vec<f64>,
}

fn dominant_orientation(field: &Field, ci: f64, cj: f64) -> f64 {
    let radius = SUPPORT / 2.0;
    let sigma = radius / 2.0;
    let mut hist = [0.0f64; ORIENT_HIST_BINS];
    visit_window(field, ci, cj, radius, |k, dy, dx| {
        let r2 = dx * dx + dy * dy;
        let wt = field.mag[k] * (-r2 / (2.0 * sigma * sigma)).exp();
        let pos = field.angle[k] / (2.0 * PI) * ORIENT_HIST_BINS as f64;
        let b0 = pos.floor();
        let frac = pos - b0;
        let b0 = (b0 as usize) % ORIENT_HIST_BINS;
        hist[b0] += wt * (1.0 - frac);
        hist[(b0 + 1) % ORIENT_HIST_BINS] += wt * frac;
    });
    let (best, &peak) = hist
        .iter()
        .enumerate()
        .fold((0, &hist[0]), |acc, (k, v)| if *v > *acc.1 { (k, v) } else { acc });
    if peak <= 0.0 {
        return 0.0;
    }
    let left = hist[(best + ORIENT_HIST_BINS - 1) % ORIENT_HIST_BINS];
    let right = hist[(best + 1) % ORIENT_HIST_BINS];
    let denom = left - 2.0 * peak + right;
    let offset = if denom < 0.0 { 0.5 * (left - right) / denom } else { 0.0 };
    ((best as f64 + offset) * 2.0 * PI / ORIENT_HIST_BINS as f64).rem_euclid(2.0 * PI)
}

/// Calls `f(pixel_index, dy, dx)` for every pixel whose center lies within
/// `radius` of `(ci, cj)`.
fn visit_window(field: &Field, ci: f64, cj: f64, radius: f64, mut f: impl FnMut(usize, f64, f64)) {
    let i0 = (ci - radius).ceil().max(0.0) as usize;
    let i1 = ((ci + radius).floor() as isize).min(field.height as isize - 1);
    let j0 = (cj - radius).ceil().max(0.0) as usize;
    let j1 = ((cj + radius).floor() as isize).min(field.width as isize - 1);
    if i1 < 0 || j1 < 0 {
        return;
    }
    for i in i0..=i1 as usize {
        let dy = i as f64 - ci;
        for j in j0..=j1 as usize {
            let dx = j as f64 - cj;
            if dx * dx + dy * dy <= radius * radius {
                f(i * field.width + j, dy, dx);
            }
        }
    }
}

fn descriptor(field: &Field, ci: f64, cj: f64) -> [f32; DSIFT_DIM] {
    let theta = dominant_orientation(field, ci, cj);
    let (sin_t, cos_t) = theta.sin_cos();
    let bin_width = SUPPORT / SPATIAL_BINS as f64;
    let sigma = SUPPORT / 2.0;
    // covers the rotated square support plus one bin of interpolation spill
    let radius = (SUPPORT / 2.0 + bin_width / 2.0) * std::f64::consts::SQRT_2;
    let mut hist = [0.0f64; DSIFT_DIM];
    visit_window(field, ci, cj, radius, |k, dy, dx| {
        let mag = field.mag[k];
        if mag == 0.0 {
            return;
        }
        let rx = cos_t * dx + sin_t * dy;
        let ry = -sin_t * dx + cos_t * dy;
        let bx = rx / bin_width + SPATIAL_BINS as f64 / 2.0 - 0.5;
        let by = ry / bin_width + SPATIAL_BINS as f64 / 2.0 - 0.5;
        if bx <= -1.0 || by <= -1.0 || bx >= SPATIAL_BINS as f64 || by >= SPATIAL_BINS as f64 {
            return;
        }
        let wt = mag * (-(rx * rx + ry * ry) / (2.0 * sigma * sigma)).exp();
        let rel = (field.angle[k] - theta).rem_euclid(2.0 * PI);
        let bo = rel / (2.0 * PI) * ORIENT_BINS as f64;
        let (x0, y0, o0) = (bx.floor(), by.floor(), bo.floor());
        let (fx, fy, fo) = (bx - x0, by - y0, bo - o0);
        let (x0, y0, o0) = (x0 as isize, y0 as isize, o0 as usize % ORIENT_BINS);
        for (dyb, wy) in [(0isize, 1.0 - fy), (1, fy)] {
            let yb = y0 + dyb;
            if !(0..SPATIAL_BINS as isize).contains(&yb) {
                continue;
            }
            for (dxb, wx) in [(0isize, 1.0 - fx), (1, fx)] {
                let xb = x0 + dxb;
                if !(0..SPATIAL_BINS as isize).contains(&xb) {
                    continue;
                }
                let base = ((yb as usize) * SPATIAL_BINS + xb as usize) * ORIENT_BINS;
                hist[base + o0] += wt * wy * wx * (1.0 - fo);
                hist[base + (o0 + 1) % ORIENT_BINS] += wt * wy * wx * fo;
            }
        }
    });
    normalize(&mut hist);
    let mut out = [0.0f32; DSIFT_DIM];
    for (o, h) in out.iter_mut().zip(&hist) {
        *o = *h as f32;
    }
    out
}

fn normalize(hist: &mut [f64]) {
    let norm = hist.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm <= 1e-30 {
        hist.iter_mut().for_each(|v| *v = 0.0);
        return;
    }
    hist.iter_mut().for_each(|v| *v = (*v / norm).min(CLAMP));
    let norm = hist.iter().map(|v| v * v).sum::<f64>().sqrt();
    hist.iter_mut().for_each(|v| *v /= norm);
}

pub fn dsift_depth(d: &DepthMap) -> Result<PatchFeatureGrid> {
    if d.height != d.width || d.height % CELL != 0 || d.height < SUPPORT as usize {
        return Err(Error::InvalidShape(format!(
            "dsift needs a square map, side divisible by {CELL} and ≥ {SUPPORT}, got {}×{}",
            d.height, d.width
        )));
    }
    let grads = gradients(d);
    let field = Field {
        width: d.width,
        height: d.height,
        mag: grads.iter().map(|(gx, gy)| (gx * gx + gy * gy).sqrt()).collect(),
        angle: grads.iter().map(|(gx, gy)| gy.atan2(*gx).rem_euclid(2.0 * PI)).collect(),
    };
    let g = d.height / CELL;
    let half = (CELL as f64 - 1.0) / 2.0;
    let descriptors: Vec<[f32; DSIFT_DIM]> = (0..g * g)
        .into_par_iter()
        .map(|k| {
            let (p, q) = (k / g, k % g);
            descriptor(&field, (p * CELL) as f64 + half, (q * CELL) as f64 + half)
        })
        .collect();
    let values = descriptors.iter().flat_map(|v| v.iter().copied()).collect();
    PatchFeatureGrid::new(g, DSIFT_DIM, values, Method::Dsift)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pattern(n: usize) -> DepthMap {
        let c = (n as f64 - 1.0) / 2.0;
        DepthMap::new(
            n,
            n,
            (0..n * n)
                .map(|k| {
                    let (y, x) = ((k / n) as f64 - c, (k % n) as f64 - c);
                    (0.5 + 0.01 * (x * 0.21 + 0.3).sin() * (y * 0.13).cos() + 0.002 * (x * y * 0.01).sin()
                        + 0.0001 * x)
                        as f32
                })
                .collect(),
        )
        .unwrap()
    }

    fn rot90(d: &DepthMap) -> DepthMap {
        let n = d.height;
        DepthMap::new(n, n, (0..n * n).map(|k| d.get(k % n, n - 1 - k / n)).collect()).unwrap()
    }

    #[test]
    fn constant_is_zero() {
        let g = dsift_depth(&DepthMap::new(224, 224, vec![0.3; 224 * 224]).unwrap()).unwrap();
        assert_eq!((g.grid_size(), g.dim()), (28, 128));
        assert!(g.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rotation_by_90_degrees() {
        let d = pattern(224);
        let r = rot90(&d);
        let gd = dsift_depth(&d).unwrap();
        let gr = dsift_depth(&r).unwrap();
        // rotated pixel (i, j) shows source (j, n-1-i): patch (p, q) moves to (27-q, p)
        let (p, q) = (14, 14);
        let a = gd.patch_at(p, q);
        let b = gr.patch_at(27 - q, p);
        let l2: f32 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f32>().sqrt();
        assert!(l2 <= 0.05, "center l2 {l2}");
    }

    #[test]
    fn unit_norm_and_clamped() {
        let g = dsift_depth(&pattern(64)).unwrap();
        for p in g.patches() {
            let n: f32 = p.iter().map(|v| v * v).sum::<f32>().sqrt();
            assert!((n - 1.0).abs() < 1e-4);
            assert!(p.iter().all(|&v| v >= 0.0));
        }
    }
}

//! Histogram of oriented gradients on depth maps.
//!
//! 8 unsigned orientation bins centered at multiples of 22.5°, votes split
//! linearly between the two nearest centers, 8×8-pixel cells. The patch at
//! cell (p, q) is the L2-normalized 2×2 cell block anchored there (32-d),
//! clamped at the last row and column.

use super::{Method, PatchFeatureGrid, CELL};
use crate::error::{Error, Result};
use crate::io::DepthMap;

pub const HOG_BINS: usize = 8;
const NORM_EPS: f64 = 1e-10;

/// Central-difference gradients with clamped borders: `(gx, gy)` per pixel,
/// x along columns and y along rows.
pub(crate) fn gradients(d: &DepthMap) -> Vec<(f64, f64)> {
    let (h, w) = (d.height, d.width);
    let at = |i: usize, j: usize| d.get(i, j) as f64;
    let mut out = Vec::with_capacity(h * w);
    for i in 0..h {
        for j in 0..w {
            let gx = (at(i, (j + 1).min(w - 1)) - at(i, j.saturating_sub(1))) / 2.0;
            let gy = (at((i + 1).min(h - 1), j) - at(i.saturating_sub(1), j)) / 2.0;
            out.push((gx, gy));
        }
    }
    out
}

/// Cell histograms, `cells × cells × HOG_BINS`.
fn cell_histograms(d: &DepthMap, cells: usize) -> Vec<f64> {
    let grads = gradients(d);
    let bin_width = std::f64::consts::PI / HOG_BINS as f64;
    let mut hist = vec![0.0f64; cells * cells * HOG_BINS];
    for i in 0..d.height {
        for j in 0..d.width {
            let (gx, gy) = grads[i * d.width + j];
            let mag = (gx * gx + gy * gy).sqrt();
            if mag == 0.0 {
                continue;
            }
            let angle = gy.atan2(gx).rem_euclid(std::f64::consts::PI);
            let pos = angle / bin_width;
            let b0 = pos.floor();
            let frac = pos - b0;
            let b0 = (b0 as usize) % HOG_BINS;
            let b1 = (b0 + 1) % HOG_BINS;
            let base = ((i / CELL) * cells + j / CELL) * HOG_BINS;
            hist[base + b0] += mag * (1.0 - frac);
            hist[base + b1] += mag * frac;
        }
    }
    hist
}

pub fn hog_depth(d: &DepthMap) -> Result<PatchFeatureGrid> {
    if d.height != d.width || d.height % CELL != 0 || d.height == 0 {
        return Err(Error::InvalidShape(format!(
            "hog needs a square map with side divisible by {CELL}, got {}×{}",
            d.height, d.width
        )));
    }
    let cells = d.height / CELL;
    let hist = cell_histograms(d, cells);
    let dim = 4 * HOG_BINS;
    let mut values = Vec::with_capacity(cells * cells * dim);
    let mut block = vec![0.0f64; dim];
    for p in 0..cells {
        for q in 0..cells {
            let p1 = (p + 1).min(cells - 1);
            let q1 = (q + 1).min(cells - 1);
            for (k, (ci, cj)) in [(p, q), (p, q1), (p1, q), (p1, q1)].into_iter().enumerate() {
                let base = (ci * cells + cj) * HOG_BINS;
                block[k * HOG_BINS..(k + 1) * HOG_BINS].copy_from_slice(&hist[base..base + HOG_BINS]);
            }
            let norm = (block.iter().map(|v| v * v).sum::<f64>() + NORM_EPS * NORM_EPS).sqrt();
            values.extend(block.iter().map(|v| (v / norm) as f32));
        }
    }
    PatchFeatureGrid::new(cells, dim, values, Method::Hog)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_depth_is_zero() {
        let g = hog_depth(&DepthMap::new(224, 224, vec![0.4; 224 * 224]).unwrap()).unwrap();
        assert_eq!((g.grid_size(), g.dim()), (28, 32));
        assert!(g.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn vertical_step_votes_horizontal_gradient_bin() {
        // depth jumps between columns 11 and 12, inside cell column 1
        let d = DepthMap::new(
            32,
            32,
            (0..32 * 32).map(|k| if k % 32 >= 12 { 0.6 } else { 0.5 }).collect(),
        )
        .unwrap();
        let g = hog_depth(&d).unwrap();
        // block at cell (0, 1): first 8 values are cell (0, 1) itself
        let cell = &g.patch_at(0, 1)[..HOG_BINS];
        let total: f32 = cell.iter().sum();
        assert!(total > 0.0);
        assert!(cell[0] / total > 0.999, "{cell:?}");
    }

    #[test]
    fn blocks_are_unit_norm() {
        let d = DepthMap::new(
            64,
            64,
            (0..64 * 64).map(|k| ((k % 64) as f32 * 0.3).sin() + ((k / 64) as f32 * 0.2).cos()).collect(),
        )
        .unwrap();
        let g = hog_depth(&d).unwrap();
        for p in g.patches() {
            let n: f32 = p.iter().map(|v| v * v).sum::<f32>().sqrt();
            assert!((n - 1.0).abs() < 1e-5);
        }
    }
}

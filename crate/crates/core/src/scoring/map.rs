//! Patch scores → pixel anomaly maps.

use super::PatchScores;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AnomalyMap {
    pub height: usize,
    pub width: usize,
    pub map: Vec<f32>,
    /// Maximum patch score, taken before any smoothing.
    pub image_score: f32,
}

impl AnomalyMap {
    pub fn to_f64(&self) -> Vec<f64> {
        self.map.iter().map(|&v| v as f64).collect()
    }

    /// Per-image min-max normalization to 8 bits.
    pub fn to_gray(&self) -> Vec<u8> {
        let lo = self.map.iter().copied().fold(f32::INFINITY, f32::min);
        let hi = self.map.iter().copied().fold(f32::NEG_INFINITY, f32::max);
        let span = hi - lo;
        self.map
            .iter()
            .map(|&v| {
                if span > 0.0 {
                    (((v - lo) / span) * 255.0).round() as u8
                } else {
                    0
                }
            })
            .collect()
    }
}

/// Bilinear resampling with half-pixel centers and edge clamping.
fn bilinear_taps(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|x| {
            let s = ((x as f64 + 0.5) * scale - 0.5).clamp(0.0, (src - 1) as f64);
            let i0 = s.floor() as usize;
            let i1 = (i0 + 1).min(src - 1);
            (i0, i1, s - i0 as f64)
        })
        .collect()
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (4.0 * sigma).ceil() as isize;
    let k: Vec<f64> = (-radius..=radius)
        .map(|x| (-(x * x) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    k.into_iter().map(|v| v / s).collect()
}

fn blur(img: &mut [f64], h: usize, w: usize, sigma: f64) {
    let kernel = gaussian_kernel(sigma);
    let r = (kernel.len() / 2) as isize;
    let mut tmp = vec![0.0f64; h * w];
    for i in 0..h {
        for j in 0..w {
            tmp[i * w + j] = kernel
                .iter()
                .enumerate()
                .map(|(t, kv)| kv * img[i * w + (j as isize + t as isize - r).clamp(0, w as isize - 1) as usize])
                .sum();
        }
    }
    for i in 0..h {
        for j in 0..w {
            img[i * w + j] = kernel
                .iter()
                .enumerate()
                .map(|(t, kv)| kv * tmp[(i as isize + t as isize - r).clamp(0, h as isize - 1) as usize * w + j])
                .sum();
        }
    }
}

/// Upsamples patch scores to `height × width` bilinearly, then applies a
/// Gaussian blur of std `sigma` pixels (`0` disables it).
pub fn render_anomaly_map_hw(ps: &PatchScores, height: usize, width: usize, sigma: f32) -> AnomalyMap {
    let g = ps.grid_size;
    let rows = bilinear_taps(g, height);
    let cols = bilinear_taps(g, width);
    let mut img = vec![0.0f64; height * width];
    for (i, &(r0, r1, fr)) in rows.iter().enumerate() {
        for (j, &(c0, c1, fc)) in cols.iter().enumerate() {
            let top = ps.at(r0, c0) as f64 * (1.0 - fc) + ps.at(r0, c1) as f64 * fc;
            let bottom = ps.at(r1, c0) as f64 * (1.0 - fc) + ps.at(r1, c1) as f64 * fc;
            img[i * width + j] = top * (1.0 - fr) + bottom * fr;
        }
    }
    if sigma > 0.0 {
        blur(&mut img, height, width, sigma as f64);
    }
    AnomalyMap {
        height,
        width,
        map: img.into_iter().map(|v| v.max(0.0) as f32).collect(),
        image_score: ps.max(),
    }
}

pub fn render_anomaly_map(ps: &PatchScores, out_size: usize, sigma: f32) -> Result<AnomalyMap> {
    if out_size == 0 || out_size % ps.grid_size != 0 {
        return Err(Error::InvalidParameter(format!(
            "output size {out_size} is not a multiple of grid size {}",
            ps.grid_size
        )));
    }
    Ok(render_anomaly_map_hw(ps, out_size, out_size, sigma))
}

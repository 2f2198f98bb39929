//! 3D-aware preprocessing: resize to the working resolution, remove the
//! background plane fitted on the image border, then keep only the largest
//! DBSCAN cluster. Removed points are zeroed (XYZ and RGB), never cropped.

use std::collections::BTreeMap;

use log::warn;

use crate::error::{Error, Result};
use crate::geometry::{dbscan, ransac_plane, PointSet, RansacParams};
use crate::io::image::is_valid_point;
use crate::io::{Mask, OrganizedPointCloud, RgbImage, Sample};
use crate::GRID_SIZE;

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessConfig {
    pub target_size: usize,
    pub boundary_strip: usize,
    pub plane_dist: f32,
    pub ransac_n: usize,
    pub ransac_iterations: usize,
    pub dbscan_eps: f32,
    pub dbscan_min_points: usize,
    /// Background removal on/off; resizing always happens.
    pub enabled: bool,
    /// Per-class centered crop `(height, width)` applied before resizing.
    pub aspect_override: BTreeMap<String, (usize, usize)>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            target_size: 224,
            boundary_strip: 10,
            plane_dist: 0.005,
            ransac_n: 50,
            ransac_iterations: 1000,
            dbscan_eps: 0.006,
            dbscan_min_points: 30,
            enabled: true,
            aspect_override: BTreeMap::new(),
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.target_size < GRID_SIZE || self.target_size % GRID_SIZE != 0 {
            return Err(Error::InvalidParameter(format!(
                "target_size must be a multiple of {GRID_SIZE}, got {}",
                self.target_size
            )));
        }
        if self.boundary_strip == 0 {
            return Err(Error::InvalidParameter("boundary_strip must be ≥ 1".into()));
        }
        if !(self.plane_dist >= 0.0) || !(self.dbscan_eps > 0.0) || self.dbscan_min_points == 0 {
            return Err(Error::InvalidParameter(
                "plane_dist ≥ 0, dbscan_eps > 0 and dbscan_min_points ≥ 1 required".into(),
            ));
        }
        Ok(())
    }

    pub fn ransac(&self) -> RansacParams {
        RansacParams {
            n_sample: self.ransac_n,
            iterations: self.ransac_iterations,
            inlier_thresh: self.plane_dist,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PreprocessWarning {
    /// Too few valid boundary points to fit the background plane.
    PlaneSkipped { strip_points: usize },
    /// Nothing survived clustering; the whole sample was zeroed.
    NoClusters,
}

#[derive(Debug, Clone)]
pub struct BackgroundRemoval {
    pub sample: Sample,
    pub warnings: Vec<PreprocessWarning>,
}

/// Centered crop window `(top, left, height, width)`.
fn crop_window(h: usize, w: usize, target: (usize, usize)) -> Result<(usize, usize, usize, usize)> {
    let (ch, cw) = target;
    if ch == 0 || cw == 0 || ch > h || cw > w {
        return Err(Error::InvalidParameter(format!(
            "aspect crop {ch}×{cw} does not fit in {h}×{w}"
        )));
    }
    Ok(((h - ch) / 2, (w - cw) / 2, ch, cw))
}

fn crop<T: Copy>(data: &[T], width: usize, win: (usize, usize, usize, usize)) -> Vec<T> {
    let (top, left, ch, cw) = win;
    (top..top + ch)
        .flat_map(|i| data[i * width + left..i * width + left + cw].iter().copied())
        .collect()
}

/// Nearest-neighbour source index for output `dst` when shrinking `src_len`
/// to `dst_len`: `floor(dst · src_len / dst_len)`.
#[inline]
pub fn nearest_source(dst: usize, src_len: usize, dst_len: usize) -> usize {
    dst * src_len / dst_len
}

pub fn resize_nearest<T: Copy>(data: &[T], h: usize, w: usize, oh: usize, ow: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(oh * ow);
    for i in 0..oh {
        let si = nearest_source(i, h, oh);
        for j in 0..ow {
            out.push(data[si * w + nearest_source(j, w, ow)]);
        }
    }
    out
}

fn cubic(x: f64) -> f64 {
    const A: f64 = -0.5;
    let x = x.abs();
    if x < 1.0 {
        ((A + 2.0) * x - (A + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        (((x - 5.0) * x + 8.0) * x - 4.0) * A
    } else {
        0.0
    }
}

/// Normalized bicubic weights per output coordinate, with the kernel
/// stretched by the scale factor when shrinking (antialiasing).
fn bicubic_taps(src_len: usize, dst_len: usize) -> Vec<(usize, Vec<f64>)> {
    let scale = src_len as f64 / dst_len as f64;
    let filter_scale = scale.max(1.0);
    let support = 2.0 * filter_scale;
    (0..dst_len)
        .map(|x| {
            let center = (x as f64 + 0.5) * scale;
            let lo = ((center - support).floor().max(0.0)) as usize;
            let hi = ((center + support).ceil() as usize).min(src_len);
            let mut w: Vec<f64> = (lo..hi)
                .map(|k| cubic((k as f64 + 0.5 - center) / filter_scale))
                .collect();
            let total: f64 = w.iter().sum();
            if total != 0.0 {
                w.iter_mut().for_each(|v| *v /= total);
            }
            (lo, w)
        })
        .collect()
}

pub fn resize_bicubic(img: &RgbImage, oh: usize, ow: usize) -> RgbImage {
    let (h, w) = (img.height(), img.width());
    if (h, w) == (oh, ow) {
        return img.clone();
    }
    let htaps = bicubic_taps(w, ow);
    let vtaps = bicubic_taps(h, oh);
    let mut tmp = vec![[0.0f64; 3]; h * ow];
    for i in 0..h {
        for (j, (lo, weights)) in htaps.iter().enumerate() {
            let mut acc = [0.0f64; 3];
            for (k, wt) in weights.iter().enumerate() {
                let p = img.get(i, lo + k);
                for c in 0..3 {
                    acc[c] += wt * p[c] as f64;
                }
            }
            tmp[i * ow + j] = acc;
        }
    }
    let mut out = Vec::with_capacity(oh * ow);
    for (lo, weights) in &vtaps {
        for j in 0..ow {
            let mut acc = [0.0f64; 3];
            for (k, wt) in weights.iter().enumerate() {
                let p = tmp[(lo + k) * ow + j];
                for c in 0..3 {
                    acc[c] += wt * p[c];
                }
            }
            out.push(acc.map(|v| v.round().clamp(0.0, 255.0) as u8));
        }
    }
    RgbImage::new(oh, ow, out).expect("consistent shape")
}

/// Resizes cloud (nearest), RGB (bicubic) and mask (nearest) to
/// `target_size²`, after the class aspect crop (or a centered square crop
/// for nonsquare inputs). Upscaling is rejected.
pub fn resize_sample(s: &Sample, cfg: &PreprocessConfig, class: &str) -> Result<Sample> {
    let (h, w) = (s.height(), s.width());
    let window = match cfg.aspect_override.get(class) {
        Some(&crop_hw) => Some(crop_window(h, w, crop_hw)?),
        None if h != w => Some(crop_window(h, w, (h.min(w), h.min(w)))?),
        None => None,
    };
    let (cloud_pts, rgb_px, mask, h, w) = match window {
        Some(win) => (
            crop(s.cloud.points(), w, win),
            crop(s.rgb.pixels(), w, win),
            s.gt_mask.as_ref().map(|m| crop(&m.data, w, win)),
            win.2,
            win.3,
        ),
        None => (
            s.cloud.points().to_vec(),
            s.rgb.pixels().to_vec(),
            s.gt_mask.as_ref().map(|m| m.data.clone()),
            h,
            w,
        ),
    };
    let t = cfg.target_size;
    if h < t || w < t {
        return Err(Error::InvalidParameter(format!(
            "cannot upscale {h}×{w} to {t}×{t}"
        )));
    }
    let cloud = OrganizedPointCloud::new(t, t, resize_nearest(&cloud_pts, h, w, t, t))?;
    let rgb = resize_bicubic(&RgbImage::new(h, w, rgb_px)?, t, t);
    let gt_mask = mask
        .map(|m| Mask::new(t, t, resize_nearest(&m, h, w, t, t)))
        .transpose()?;
    Ok(Sample {
        id: s.id.clone(),
        defect: s.defect.clone(),
        cloud,
        rgb,
        gt_mask,
        label: s.label,
    })
}

fn zero_cell(s: &mut Sample, k: usize) {
    s.cloud.points_mut()[k] = [0.0; 3];
    s.rgb.pixels_mut()[k] = [0; 3];
}

/// Plane removal on the boundary strip followed by largest-cluster
/// selection. The ground-truth mask is left untouched.
pub fn remove_background(s: &Sample, cfg: &PreprocessConfig, seed: u64) -> Result<BackgroundRemoval> {
    let (h, w) = (s.height(), s.width());
    if s.rgb.height() != h || s.rgb.width() != w {
        return Err(Error::DimensionMismatch("rgb and cloud differ".into()));
    }
    let mut out = s.clone();
    let mut warnings = Vec::new();
    let strip = cfg.boundary_strip;
    let strip_points: Vec<[f32; 3]> = (0..h)
        .flat_map(|i| (0..w).map(move |j| (i, j)))
        .filter(|&(i, j)| i < strip || j < strip || i + strip >= h || j + strip >= w)
        .map(|(i, j)| s.cloud.get(i, j))
        .filter(|&p| is_valid_point(p))
        .collect();
    if strip_points.len() < cfg.ransac_n {
        warn!(
            "sample {}: {} valid boundary points, plane removal skipped",
            s.id,
            strip_points.len()
        );
        warnings.push(PreprocessWarning::PlaneSkipped {
            strip_points: strip_points.len(),
        });
    } else {
        let plane = ransac_plane(&strip_points, &cfg.ransac(), seed)?;
        let thresh = cfg.plane_dist as f64;
        for k in 0..h * w {
            let p = out.cloud.points()[k];
            if is_valid_point(p) && plane.distance(p) <= thresh {
                zero_cell(&mut out, k);
            }
        }
    }

    let survivors = PointSet::from_cloud(&out.cloud);
    let labels = dbscan(&survivors.points, cfg.dbscan_eps, cfg.dbscan_min_points);
    let n_clusters = labels.iter().copied().max().map_or(0, |m| (m + 1).max(0) as usize);
    let keep = if n_clusters == 0 {
        None
    } else {
        let mut sizes = vec![0usize; n_clusters];
        labels.iter().filter(|&&l| l >= 0).for_each(|&l| sizes[l as usize] += 1);
        // first maximum wins ties
        let best = sizes
            .iter()
            .enumerate()
            .fold(0, |b, (k, &n)| if n > sizes[b] { k } else { b });
        Some(best as i32)
    };
    if keep.is_none() {
        warn!("sample {}: no clusters survived, sample fully zeroed", s.id);
        warnings.push(PreprocessWarning::NoClusters);
    }
    for (row, &(i, j)) in survivors.back_index.iter().enumerate() {
        if Some(labels[row]) != keep {
            zero_cell(&mut out, i * w + j);
        }
    }
    Ok(BackgroundRemoval {
        sample: out,
        warnings,
    })
}

/// Full protocol: resize, then background removal when enabled.
pub fn preprocess_sample(
    s: &Sample,
    cfg: &PreprocessConfig,
    class: &str,
    seed: u64,
) -> Result<(Sample, Vec<PreprocessWarning>)> {
    let resized = resize_sample(s, cfg, class)?;
    if !cfg.enabled {
        return Ok((resized, Vec::new()));
    }
    let r = remove_background(&resized, cfg, seed)?;
    Ok((r.sample, r.warnings))
}

use super::{Method, PatchFeatureGrid, CELL};
use crate::error::{Error, Result};
use crate::io::{DepthMap, RgbImage};

fn check_square_cells(h: usize, w: usize) -> Result<usize> {
    if h != w || h % CELL != 0 || h == 0 {
        return Err(Error::InvalidShape(format!(
            "expected a square map with side divisible by {CELL}, got {h}×{w}"
        )));
    }
    Ok(h / CELL)
}

/// Non-overlapping 8×8 depth patches flattened row-major (D = 64).
pub fn raw_depth_patches(d: &DepthMap) -> Result<PatchFeatureGrid> {
    let g = check_square_cells(d.height, d.width)?;
    let mut values = Vec::with_capacity(g * g * CELL * CELL);
    for p in 0..g {
        for q in 0..g {
            for r in 0..CELL {
                let row = (p * CELL + r) * d.width + q * CELL;
                values.extend_from_slice(&d.data[row..row + CELL]);
            }
        }
    }
    PatchFeatureGrid::new(g, CELL * CELL, values, Method::Raw)
}

/// Non-overlapping 8×8 RGB patches scaled to [0, 1] (D = 192).
pub fn rgb_raw_patches(img: &RgbImage) -> Result<PatchFeatureGrid> {
    let g = check_square_cells(img.height(), img.width())?;
    let mut values = Vec::with_capacity(g * g * CELL * CELL * 3);
    for p in 0..g {
        for q in 0..g {
            for r in 0..CELL {
                for c in 0..CELL {
                    let px = img.get(p * CELL + r, q * CELL + c);
                    values.extend(px.iter().map(|&v| v as f32 / 255.0));
                }
            }
        }
    }
    PatchFeatureGrid::new(g, CELL * CELL * 3, values, Method::RgbRaw)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_depth() {
        let d = DepthMap::new(224, 224, vec![0.7; 224 * 224]).unwrap();
        let g = raw_depth_patches(&d).unwrap();
        assert_eq!((g.grid_size(), g.dim()), (28, 64));
        assert!(g.values().iter().all(|&v| v == 0.7));
    }

    #[test]
    fn row_index_depth() {
        let d = DepthMap::new(224, 224, (0..224 * 224).map(|k| (k / 224) as f32).collect()).unwrap();
        let g = raw_depth_patches(&d).unwrap();
        let expected: Vec<f32> = (0..8).flat_map(|r| [r as f32; 8]).collect();
        assert_eq!(g.patch_at(0, 0), expected.as_slice());
    }

    #[test]
    fn wrong_dims() {
        assert!(raw_depth_patches(&DepthMap::new(20, 20, vec![0.0; 400]).unwrap()).is_err());
        assert!(raw_depth_patches(&DepthMap::new(16, 24, vec![0.0; 384]).unwrap()).is_err());
    }

    #[test]
    fn rgb_patch_layout() {
        let img = RgbImage::new(8, 8, (0..64).map(|k| [k as u8, 0, 255]).collect()).unwrap();
        let g = rgb_raw_patches(&img).unwrap();
        assert_eq!(g.dim(), 192);
        assert_eq!(&g.patch(0)[..6], &[0.0, 0.0, 1.0, 1.0 / 255.0, 0.0, 1.0]);
    }
}

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Raw,
    Hog,
    Dsift,
    Fpfh,
    /// Raw 8×8 RGB pixel patches (192-d); a color-only control.
    RgbRaw,
    RgbDeep,
    /// Deep RGB features concatenated with FPFH.
    #[serde(rename = "rgb_plus_fpfh")]
    Fused,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Raw => "raw",
            Method::Hog => "hog",
            Method::Dsift => "dsift",
            Method::Fpfh => "fpfh",
            Method::RgbRaw => "rgb_raw",
            Method::RgbDeep => "rgb_deep",
            Method::Fused => "rgb_plus_fpfh",
        }
    }

    /// Descriptor width where it is fixed by construction.
    pub fn fixed_dim(self) -> Option<usize> {
        match self {
            Method::Raw => Some(64),
            Method::Hog => Some(32),
            Method::Dsift => Some(128),
            Method::Fpfh => Some(33),
            Method::RgbRaw => Some(192),
            Method::RgbDeep => Some(1536),
            Method::Fused => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "raw" => Method::Raw,
            "hog" => Method::Hog,
            "dsift" => Method::Dsift,
            "fpfh" => Method::Fpfh,
            "rgb_raw" => Method::RgbRaw,
            "rgb_deep" => Method::RgbDeep,
            "rgb_plus_fpfh" => Method::Fused,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown method {other:?}; expected raw, hog, dsift, fpfh, rgb_raw, rgb_deep or rgb_plus_fpfh"
                )))
            }
        })
    }
}

/// G×G×D descriptor grid, row-major over patches.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchFeatureGrid {
    grid_size: usize,
    dim: usize,
    values: Vec<f32>,
    method: Method,
}

impl PatchFeatureGrid {
    pub fn new(grid_size: usize, dim: usize, values: Vec<f32>, method: Method) -> Result<Self> {
        if grid_size == 0 || dim == 0 {
            return Err(Error::InvalidShape("grid size and dim must be ≥ 1".into()));
        }
        if values.len() != grid_size * grid_size * dim {
            return Err(Error::InvalidShape(format!(
                "grid {grid_size}²×{dim} needs {} values, got {}",
                grid_size * grid_size * dim,
                values.len()
            )));
        }
        Ok(Self {
            grid_size,
            dim,
            values,
            method,
        })
    }

    pub fn zeros(grid_size: usize, dim: usize, method: Method) -> Self {
        Self {
            grid_size,
            dim,
            values: vec![0.0; grid_size * grid_size * dim],
            method,
        }
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn num_patches(&self) -> usize {
        self.grid_size * self.grid_size
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn patch(&self, p: usize) -> &[f32] {
        &self.values[p * self.dim..(p + 1) * self.dim]
    }

    pub fn patch_at(&self, i: usize, j: usize) -> &[f32] {
        self.patch(i * self.grid_size + j)
    }

    pub fn patches(&self) -> impl Iterator<Item = &[f32]> {
        self.values.chunks_exact(self.dim)
    }

    pub fn to_tensor(&self) -> Tensor {
        Tensor::from_f32(vec![self.grid_size, self.grid_size, self.dim], self.values.clone())
            .expect("consistent shape")
    }
}

/// Reads an exported deep-feature tensor (G×G×D f32).
pub fn rgb_deep_from_tensor(t: &Tensor) -> Result<PatchFeatureGrid> {
    let dims = t.dims();
    if dims.len() != 3 || dims[0] != dims[1] {
        return Err(Error::InvalidShape(format!(
            "deep features must be G×G×D, got {dims:?}"
        )));
    }
    let values = t
        .as_f32()
        .ok_or_else(|| Error::InvalidShape("deep features must be f32".into()))?;
    PatchFeatureGrid::new(dims[0], dims[2], values.to_vec(), Method::RgbDeep)
}

/// Adaptive average pooling of a dense H×W×D map onto a G×G grid. Cell `i`
/// covers rows `floor(i·H/G) .. ceil((i+1)·H/G)`; for H divisible by G this
/// is uniform block pooling.
pub fn pool_to_grid(
    dense: &[f32],
    height: usize,
    width: usize,
    dim: usize,
    grid: usize,
    method: Method,
) -> Result<PatchFeatureGrid> {
    if dense.len() != height * width * dim {
        return Err(Error::InvalidShape(format!(
            "dense map {height}×{width}×{dim} needs {} values, got {}",
            height * width * dim,
            dense.len()
        )));
    }
    if grid == 0 || height < grid || width < grid {
        return Err(Error::InvalidParameter(format!(
            "cannot pool {height}×{width} onto a {grid}×{grid} grid"
        )));
    }
    let span = |k: usize, n: usize| (k * n / grid, ((k + 1) * n).div_ceil(grid));
    let mut out = vec![0.0f32; grid * grid * dim];
    let mut acc = vec![0.0f64; dim];
    for gi in 0..grid {
        let (r0, r1) = span(gi, height);
        for gj in 0..grid {
            let (c0, c1) = span(gj, width);
            acc.iter_mut().for_each(|v| *v = 0.0);
            for r in r0..r1 {
                for c in c0..c1 {
                    let base = (r * width + c) * dim;
                    for (a, &v) in acc.iter_mut().zip(&dense[base..base + dim]) {
                        *a += v as f64;
                    }
                }
            }
            let n = ((r1 - r0) * (c1 - c0)) as f64;
            let o = (gi * grid + gj) * dim;
            for (slot, a) in out[o..o + dim].iter_mut().zip(&acc) {
                *slot = (a / n) as f32;
            }
        }
    }
    PatchFeatureGrid::new(grid, dim, out, method)
}

/// Per-patch concatenation `a ‖ b`, no rescaling.
pub fn concat_features(a: &PatchFeatureGrid, b: &PatchFeatureGrid) -> Result<PatchFeatureGrid> {
    if a.grid_size != b.grid_size {
        return Err(Error::DimensionMismatch(format!(
            "cannot concatenate grids of size {} and {}",
            a.grid_size, b.grid_size
        )));
    }
    let dim = a.dim + b.dim;
    let mut values = Vec::with_capacity(a.num_patches() * dim);
    for (pa, pb) in a.patches().zip(b.patches()) {
        values.extend_from_slice(pa);
        values.extend_from_slice(pb);
    }
    PatchFeatureGrid::new(a.grid_size, dim, values, Method::Fused)
}

/// Per-channel z-scoring fitted on training grids. Off by default in the
/// pipeline; available for fusing modalities with very different scales.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStandardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl ChannelStandardizer {
    pub fn fit(grids: &[PatchFeatureGrid]) -> Result<Self> {
        let dim = grids
            .first()
            .ok_or_else(|| Error::InvalidParameter("no grids to fit".into()))?
            .dim;
        let mut sum = vec![0.0f64; dim];
        let mut sq = vec![0.0f64; dim];
        let mut n = 0usize;
        for g in grids {
            if g.dim != dim {
                return Err(Error::DimensionMismatch(format!("dims {} vs {dim}", g.dim)));
            }
            for p in g.patches() {
                for (k, &v) in p.iter().enumerate() {
                    sum[k] += v as f64;
                    sq[k] += (v as f64) * (v as f64);
                }
                n += 1;
            }
        }
        let nf = n as f64;
        let mean: Vec<f64> = sum.iter().map(|s| s / nf).collect();
        let std = sq
            .iter()
            .zip(&mean)
            .map(|(s, m)| {
                let var = (s / nf - m * m).max(0.0);
                if var > 1e-24 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn apply(&self, g: &PatchFeatureGrid) -> Result<PatchFeatureGrid> {
        if g.dim != self.mean.len() {
            return Err(Error::DimensionMismatch(format!(
                "standardizer dim {} vs grid dim {}",
                self.mean.len(),
                g.dim
            )));
        }
        let values = g
            .values
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                let c = k % g.dim;
                ((v as f64 - self.mean[c]) / self.std[c]) as f32
            })
            .collect();
        PatchFeatureGrid::new(g.grid_size, g.dim, values, g.method)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pool_ones() {
        let g = pool_to_grid(&vec![1.0; 56 * 56], 56, 56, 1, 28, Method::Raw).unwrap();
        assert!(g.values().iter().all(|&v| v == 1.0));
        assert_eq!(g.num_patches(), 784);
    }

    #[test]
    fn pool_block_mean() {
        let g = pool_to_grid(&[1.0, 2.0, 3.0, 4.0], 2, 2, 1, 1, Method::Raw).unwrap();
        assert_eq!(g.values(), &[2.5]);
    }

    #[test]
    fn pool_matches_naive_block_means() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let dense: Vec<f32> = (0..224 * 224 * 4).map(|_| rng.gen()).collect();
        let g = pool_to_grid(&dense, 224, 224, 4, 28, Method::Raw).unwrap();
        for gi in 0..28 {
            for gj in 0..28 {
                for d in 0..4 {
                    let mut s = 0.0f64;
                    for r in 0..8 {
                        for c in 0..8 {
                            s += dense[((gi * 8 + r) * 224 + gj * 8 + c) * 4 + d] as f64;
                        }
                    }
                    assert_eq!(g.patch_at(gi, gj)[d], (s / 64.0) as f32);
                }
            }
        }
    }

    #[test]
    fn pool_rejects_small_input() {
        assert!(pool_to_grid(&[0.0; 27 * 27], 27, 27, 1, 28, Method::Raw).is_err());
    }

    #[test]
    fn concat_dims_and_values() {
        let a = PatchFeatureGrid::new(2, 2, (0..8).map(|v| v as f32).collect(), Method::RgbDeep).unwrap();
        let b = PatchFeatureGrid::zeros(2, 3, Method::Fpfh);
        let c = concat_features(&a, &b).unwrap();
        assert_eq!(c.dim(), 5);
        assert_eq!(c.patch(1), &[2.0, 3.0, 0.0, 0.0, 0.0]);
        assert_eq!(c.method(), Method::Fused);

        let deep = PatchFeatureGrid::zeros(28, 1536, Method::RgbDeep);
        let fpfh = PatchFeatureGrid::zeros(28, 33, Method::Fpfh);
        assert_eq!(concat_features(&deep, &fpfh).unwrap().dim(), 1569);

        let small = PatchFeatureGrid::zeros(3, 3, Method::Fpfh);
        assert!(concat_features(&a, &small).is_err());
    }

    #[test]
    fn standardizer_centers_channels() {
        let g = PatchFeatureGrid::new(2, 1, vec![1.0, 3.0, 1.0, 3.0], Method::Raw).unwrap();
        let s = ChannelStandardizer::fit(std::slice::from_ref(&g)).unwrap();
        assert_eq!(s.apply(&g).unwrap().values(), &[-1.0, 1.0, -1.0, 1.0]);
    }

    #[test]
    fn method_names_roundtrip() {
        for m in [Method::Raw, Method::Hog, Method::Dsift, Method::Fpfh, Method::RgbRaw, Method::RgbDeep, Method::Fused] {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
    }
}

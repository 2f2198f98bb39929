//! Grid-shaped sample data: organized clouds, RGB images, depth maps, masks.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::tensor::{Tensor, TensorData};

/// H×W grid of XYZ triples in meters. All-zero triples are invalid points.
#[derive(Debug, Clone, PartialEq)]
pub struct OrganizedPointCloud {
    height: usize,
    width: usize,
    xyz: Vec<[f32; 3]>,
}

impl OrganizedPointCloud {
    pub fn new(height: usize, width: usize, xyz: Vec<[f32; 3]>) -> Result<Self> {
        if xyz.len() != height * width {
            return Err(Error::InvalidShape(format!(
                "cloud {height}×{width} needs {} points, got {}",
                height * width,
                xyz.len()
            )));
        }
        Ok(Self { height, width, xyz })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            xyz: vec![[0.0; 3]; height * width],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn points(&self) -> &[[f32; 3]] {
        &self.xyz
    }

    pub fn points_mut(&mut self) -> &mut [[f32; 3]] {
        &mut self.xyz
    }

    pub fn get(&self, i: usize, j: usize) -> [f32; 3] {
        self.xyz[i * self.width + j]
    }

    pub fn is_valid(&self, i: usize, j: usize) -> bool {
        is_valid_point(self.get(i, j))
    }

    pub fn valid_mask(&self) -> Mask {
        Mask {
            height: self.height,
            width: self.width,
            data: self.xyz.iter().map(|&p| is_valid_point(p)).collect(),
        }
    }

    pub fn valid_count(&self) -> usize {
        self.xyz.iter().filter(|&&p| is_valid_point(p)).count()
    }

    /// Z channel as a depth map.
    pub fn depth(&self) -> DepthMap {
        DepthMap {
            height: self.height,
            width: self.width,
            data: self.xyz.iter().map(|p| p[2]).collect(),
        }
    }

    pub fn to_tensor(&self) -> Tensor {
        let flat = self.xyz.iter().flat_map(|p| p.iter().copied()).collect();
        Tensor::from_f32(vec![self.height, self.width, 3], flat).expect("consistent shape")
    }

    pub fn from_tensor(t: &Tensor) -> Result<Self> {
        let dims = t.dims();
        if dims.len() != 3 || dims[2] != 3 {
            return Err(Error::InvalidShape(format!(
                "point cloud tensor must be H×W×3, got {dims:?}"
            )));
        }
        let data = t
            .as_f32()
            .ok_or_else(|| Error::InvalidShape("point cloud tensor must be f32".into()))?;
        let xyz = data
            .chunks_exact(3)
            .map(|c| {
                let p = [c[0], c[1], c[2]];
                // NaN marks sensor noise; fold it into the zero-invalid convention.
                if p.iter().any(|v| !v.is_finite()) {
                    [0.0; 3]
                } else {
                    p
                }
            })
            .collect();
        Self::new(dims[0], dims[1], xyz)
    }
}

#[inline]
pub fn is_valid_point(p: [f32; 3]) -> bool {
    p != [0.0, 0.0, 0.0] && p.iter().all(|v| v.is_finite())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    height: usize,
    width: usize,
    pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(height: usize, width: usize, pixels: Vec<[u8; 3]>) -> Result<Self> {
        if pixels.len() != height * width {
            return Err(Error::InvalidShape(format!(
                "rgb {height}×{width} needs {} pixels, got {}",
                height * width,
                pixels.len()
            )));
        }
        Ok(Self {
            height,
            width,
            pixels,
        })
    }

    pub fn filled(height: usize, width: usize, color: [u8; 3]) -> Self {
        Self {
            height,
            width,
            pixels: vec![color; height * width],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [[u8; 3]] {
        &mut self.pixels
    }

    pub fn get(&self, i: usize, j: usize) -> [u8; 3] {
        self.pixels[i * self.width + j]
    }

    pub fn to_tensor(&self) -> Tensor {
        let flat = self.pixels.iter().flat_map(|p| p.iter().copied()).collect();
        Tensor::from_u8(vec![self.height, self.width, 3], flat).expect("consistent shape")
    }

    pub fn from_tensor(t: &Tensor) -> Result<Self> {
        let dims = t.dims();
        let data = t
            .as_u8()
            .ok_or_else(|| Error::InvalidShape("rgb tensor must be u8".into()))?;
        if dims.len() != 3 || dims[2] != 3 {
            return Err(Error::InvalidShape(format!("rgb tensor must be H×W×3, got {dims:?}")));
        }
        let pixels = data.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        Self::new(dims[0], dims[1], pixels)
    }
}

/// H×W depth in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    pub height: usize,
    pub width: usize,
    pub data: Vec<f32>,
}

impl DepthMap {
    pub fn new(height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::InvalidShape(format!(
                "depth {height}×{width} needs {} values, got {}",
                height * width,
                data.len()
            )));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f32 {
        self.data[i * self.width + j]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    pub height: usize,
    pub width: usize,
    pub data: Vec<bool>,
}

impl Mask {
    pub fn empty(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            data: vec![false; height * width],
        }
    }

    pub fn new(height: usize, width: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::InvalidShape(format!(
                "mask {height}×{width} needs {} values, got {}",
                height * width,
                data.len()
            )));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.data[i * self.width + j]
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// 8-bit image where true ↦ 255. Thresholding at > 127 inverts it.
    pub fn to_gray(&self) -> Vec<u8> {
        self.data.iter().map(|&b| if b { 255 } else { 0 }).collect()
    }

    pub fn from_gray(height: usize, width: usize, gray: &[u8]) -> Result<Self> {
        Self::new(height, width, gray.iter().map(|&v| v > 127).collect())
    }
}

/// Decoded 8-bit PNG: `channels` is 1 (gray) or 3 (RGB).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PngImage {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub data: Vec<u8>,
}

pub fn read_png(path: impl AsRef<Path>) -> Result<PngImage> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile(path.to_path_buf())
        } else {
            Error::io(path, e)
        }
    })?;
    let png_err = |e: png::DecodingError| Error::Png {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut decoder = png::Decoder::new(std::io::BufReader::new(file));
    decoder.set_transformations(png::Transformations::normalize_to_color8());
    let mut reader = decoder.read_info().map_err(png_err)?;
    let mut buf = vec![0; reader.output_buffer_size().unwrap_or(0)];
    let info = reader.next_frame(&mut buf).map_err(png_err)?;
    buf.truncate(info.buffer_size());
    let (h, w) = (info.height as usize, info.width as usize);
    let (channels, data) = match info.color_type {
        png::ColorType::Grayscale => (1, buf),
        png::ColorType::GrayscaleAlpha => (1, buf.chunks_exact(2).map(|c| c[0]).collect()),
        png::ColorType::Rgb => (3, buf),
        png::ColorType::Rgba => (
            3,
            buf.chunks_exact(4).flat_map(|c| [c[0], c[1], c[2]]).collect(),
        ),
        png::ColorType::Indexed => {
            return Err(Error::Png {
                path: path.to_path_buf(),
                message: "indexed color not expanded".into(),
            })
        }
    };
    Ok(PngImage {
        height: h,
        width: w,
        channels,
        data,
    })
}

pub fn write_png(
    path: impl AsRef<Path>,
    height: usize,
    width: usize,
    channels: usize,
    data: &[u8],
) -> Result<()> {
    let path = path.as_ref();
    let color = match channels {
        1 => png::ColorType::Grayscale,
        3 => png::ColorType::Rgb,
        c => return Err(Error::InvalidParameter(format!("cannot write {c}-channel png"))),
    };
    if data.len() != height * width * channels {
        return Err(Error::InvalidShape(format!(
            "png {height}×{width}×{channels} needs {} bytes, got {}",
            height * width * channels,
            data.len()
        )));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), width as u32, height as u32);
    encoder.set_color(color);
    encoder.set_depth(png::BitDepth::Eight);
    let png_err = |e: png::EncodingError| Error::Png {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut writer = encoder.write_header().map_err(png_err)?;
    writer.write_image_data(data).map_err(png_err)?;
    writer.finish().map_err(png_err)
}

/// Loads a tensor-like image from `.png` or `.adtn` by extension.
pub fn read_image_tensor(path: impl AsRef<Path>) -> Result<Tensor> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some("png") => {
            let img = read_png(path)?;
            let dims = if img.channels == 1 {
                vec![img.height, img.width]
            } else {
                vec![img.height, img.width, img.channels]
            };
            Tensor::new(dims, TensorData::U8(img.data))
        }
        _ => crate::io::tensor::read_tensor(path),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn valid_mask_marks_exactly_zero_triples() {
        let cloud = OrganizedPointCloud::new(
            1,
            4,
            vec![[0.0, 0.0, 0.0], [0.0, 0.0, 0.1], [1.0, 0.0, 0.0], [-0.0, 0.0, 0.0]],
        )
        .unwrap();
        assert_eq!(cloud.valid_mask().data, vec![false, true, true, false]);
    }

    #[test]
    fn nan_points_fold_to_invalid() {
        let t = Tensor::from_f32(vec![1, 2, 3], vec![f32::NAN, 0.0, 1.0, 0.1, 0.2, 0.3]).unwrap();
        let cloud = OrganizedPointCloud::from_tensor(&t).unwrap();
        assert_eq!(cloud.get(0, 0), [0.0; 3]);
        assert!(cloud.is_valid(0, 1));
    }

    #[test]
    fn png_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.png");
        let data: Vec<u8> = (0..4 * 5 * 3).map(|v| (v * 7) as u8).collect();
        write_png(&path, 4, 5, 3, &data).unwrap();
        let img = read_png(&path).unwrap();
        assert_eq!((img.height, img.width, img.channels), (4, 5, 3));
        assert_eq!(img.data, data);
    }

    #[test]
    fn mask_threshold_is_above_127() {
        let m = Mask::from_gray(1, 3, &[127, 128, 255]).unwrap();
        assert_eq!(m.data, vec![false, true, true]);
    }
}

//! Dataset layout: `<root>/<class>/{train,test}/<defect-or-good>/{xyz,rgb,gt}/<id>.<ext>`.
//!
//! Point clouds are `.adtn` (H×W×3 f32). RGB and masks are 8-bit PNG or
//! `.adtn` (u8). `train` only ever contains `good`.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::io::image::{read_image_tensor, write_png, Mask, OrganizedPointCloud, RgbImage};
use crate::io::tensor::{read_tensor, write_tensor, TensorData};

pub const GOOD: &str = "good";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Normal,
    Anomalous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: String,
    /// `good` or the defect type directory name.
    pub defect: String,
    pub cloud: OrganizedPointCloud,
    pub rgb: RgbImage,
    pub gt_mask: Option<Mask>,
    pub label: Label,
}

impl Sample {
    pub fn height(&self) -> usize {
        self.cloud.height()
    }

    pub fn width(&self) -> usize {
        self.cloud.width()
    }

    /// Ground truth or an all-false mask when none is attached.
    pub fn mask_or_empty(&self) -> Mask {
        self.gt_mask
            .clone()
            .unwrap_or_else(|| Mask::empty(self.height(), self.width()))
    }
}

/// Identifies one sample on disk.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SampleRef {
    pub class: String,
    pub split: Split,
    pub defect: String,
    pub id: String,
}

impl SampleRef {
    pub fn dir(&self, root: &Path) -> PathBuf {
        root.join(&self.class)
            .join(self.split.as_str())
            .join(&self.defect)
    }

    /// `<defect>_<id>`, unique within a class split.
    pub fn tag(&self) -> String {
        format!("{}_{}", self.defect, self.id)
    }
}

fn find_with_ext(dir: &Path, id: &str, exts: &[&str]) -> Option<PathBuf> {
    exts.iter()
        .map(|e| dir.join(format!("{id}.{e}")))
        .find(|p| p.is_file())
}

fn load_rgb(path: &Path) -> Result<RgbImage> {
    let t = read_image_tensor(path)?;
    RgbImage::from_tensor(&t)
}

fn load_mask(path: &Path) -> Result<Mask> {
    let t = read_image_tensor(path)?;
    let dims = t.dims().to_vec();
    let gray: Vec<u8> = match (t.into_data(), dims.as_slice()) {
        (TensorData::U8(v), [_, _]) => v,
        (TensorData::U8(v), [_, _, c]) => v.chunks_exact(*c).map(|p| p[0]).collect(),
        (_, d) => return Err(Error::InvalidShape(format!("mask must be 8-bit H×W, got {d:?}"))),
    };
    Mask::from_gray(dims[0], dims[1], &gray)
}

pub fn load_sample(root: &Path, class: &str, split: Split, defect: &str, id: &str) -> Result<Sample> {
    let dir = root.join(class).join(split.as_str()).join(defect);
    let xyz_path = dir.join("xyz").join(format!("{id}.adtn"));
    let cloud = OrganizedPointCloud::from_tensor(&read_tensor(&xyz_path)?)?;
    let rgb_dir = dir.join("rgb");
    let rgb_path = find_with_ext(&rgb_dir, id, &["png", "adtn"])
        .ok_or_else(|| Error::MissingFile(rgb_dir.join(format!("{id}.png"))))?;
    let rgb = load_rgb(&rgb_path)?;
    if (rgb.height(), rgb.width()) != (cloud.height(), cloud.width()) {
        return Err(Error::DimensionMismatch(format!(
            "{class}/{split}/{defect}/{id}: rgb {}×{} vs cloud {}×{}",
            rgb.height(),
            rgb.width(),
            cloud.height(),
            cloud.width()
        )));
    }
    let label = if defect == GOOD {
        Label::Normal
    } else {
        Label::Anomalous
    };
    let gt_mask = match split {
        Split::Train => None,
        Split::Test => {
            let gt_dir = dir.join("gt");
            match find_with_ext(&gt_dir, id, &["png", "adtn"]) {
                Some(p) => {
                    let m = load_mask(&p)?;
                    if (m.height, m.width) != (cloud.height(), cloud.width()) {
                        return Err(Error::DimensionMismatch(format!(
                            "{class}/{split}/{defect}/{id}: mask {}×{} vs cloud {}×{}",
                            m.height,
                            m.width,
                            cloud.height(),
                            cloud.width()
                        )));
                    }
                    Some(m)
                }
                None if label == Label::Normal => Some(Mask::empty(cloud.height(), cloud.width())),
                None => return Err(Error::MissingFile(gt_dir.join(format!("{id}.png")))),
            }
        }
    };
    if label == Label::Anomalous && gt_mask.as_ref().is_some_and(|m| m.count() == 0) {
        return Err(Error::InvalidShape(format!(
            "{class}/{split}/{defect}/{id}: anomalous sample with empty mask"
        )));
    }
    Ok(Sample {
        id: id.to_string(),
        defect: defect.to_string(),
        cloud,
        rgb,
        gt_mask,
        label,
    })
}

pub fn load_ref(root: &Path, r: &SampleRef) -> Result<Sample> {
    load_sample(root, &r.class, r.split, &r.defect, &r.id)
}

/// Enumerates samples of a class split, sorted by (defect, id).
pub fn list_samples(root: &Path, class: &str, split: Split) -> Result<Vec<SampleRef>> {
    let split_dir = root.join(class).join(split.as_str());
    let read = |p: &Path| -> Result<Vec<PathBuf>> {
        let mut out: Vec<PathBuf> = fs::read_dir(p)
            .map_err(|e| {
                if e.kind() == std::io::ErrorKind::NotFound {
                    Error::MissingFile(p.to_path_buf())
                } else {
                    Error::io(p, e)
                }
            })?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .collect();
        out.sort();
        Ok(out)
    };
    let mut refs = Vec::new();
    for defect_dir in read(&split_dir)? {
        if !defect_dir.is_dir() {
            continue;
        }
        let defect = defect_dir.file_name().unwrap().to_string_lossy().into_owned();
        let xyz_dir = defect_dir.join("xyz");
        if !xyz_dir.is_dir() {
            continue;
        }
        for f in read(&xyz_dir)? {
            if f.extension().and_then(|e| e.to_str()) != Some("adtn") {
                continue;
            }
            let id = f.file_stem().unwrap().to_string_lossy().into_owned();
            refs.push(SampleRef {
                class: class.to_string(),
                split,
                defect: defect.clone(),
                id,
            });
        }
    }
    refs.sort();
    Ok(refs)
}

/// Writes a sample in the dataset layout: xyz as ADTN, rgb and gt as PNG.
/// No gt file is written for normal samples.
pub fn write_sample(root: &Path, class: &str, split: Split, sample: &Sample) -> Result<()> {
    let dir = root.join(class).join(split.as_str()).join(&sample.defect);
    for sub in ["xyz", "rgb"] {
        fs::create_dir_all(dir.join(sub)).map_err(|e| Error::io(dir.join(sub), e))?;
    }
    write_tensor(
        &sample.cloud.to_tensor(),
        dir.join("xyz").join(format!("{}.adtn", sample.id)),
    )?;
    let rgb = &sample.rgb;
    let flat: Vec<u8> = rgb.pixels().iter().flat_map(|p| p.iter().copied()).collect();
    write_png(
        dir.join("rgb").join(format!("{}.png", sample.id)),
        rgb.height(),
        rgb.width(),
        3,
        &flat,
    )?;
    if let (Some(mask), Label::Anomalous) = (&sample.gt_mask, sample.label) {
        fs::create_dir_all(dir.join("gt")).map_err(|e| Error::io(dir.join("gt"), e))?;
        write_png(
            dir.join("gt").join(format!("{}.png", sample.id)),
            mask.height,
            mask.width,
            1,
            &mask.to_gray(),
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_sample(defect: &str, h: usize, w: usize) -> Sample {
        let xyz = (0..h * w)
            .map(|k| [k as f32 * 1e-3, 0.5, 0.25 + k as f32 * 1e-4])
            .collect();
        let label = if defect == GOOD {
            Label::Normal
        } else {
            Label::Anomalous
        };
        let gt_mask = (label == Label::Anomalous).then(|| {
            let mut m = Mask::empty(h, w);
            m.data[1] = true;
            m
        });
        Sample {
            id: "000".into(),
            defect: defect.into(),
            cloud: OrganizedPointCloud::new(h, w, xyz).unwrap(),
            rgb: RgbImage::new(h, w, (0..h * w).map(|k| [k as u8, 2, 3]).collect()).unwrap(),
            gt_mask,
            label,
        }
    }

    #[test]
    fn roundtrip_through_layout() {
        let dir = tempfile::tempdir().unwrap();
        let s = tiny_sample("dent", 4, 6);
        write_sample(dir.path(), "toy", Split::Test, &s).unwrap();
        let back = load_sample(dir.path(), "toy", Split::Test, "dent", "000").unwrap();
        assert_eq!(back, s);
        let again = load_sample(dir.path(), "toy", Split::Test, "dent", "000").unwrap();
        assert_eq!(again, back);
    }

    #[test]
    fn good_test_sample_without_mask_gets_empty_mask() {
        let dir = tempfile::tempdir().unwrap();
        let s = tiny_sample(GOOD, 3, 3);
        write_sample(dir.path(), "toy", Split::Test, &s).unwrap();
        assert!(!dir.path().join("toy/test/good/gt").exists());
        let back = load_sample(dir.path(), "toy", Split::Test, GOOD, "000").unwrap();
        assert_eq!(back.label, Label::Normal);
        assert_eq!(back.gt_mask, Some(Mask::empty(3, 3)));
    }

    #[test]
    fn train_sample_has_no_mask() {
        let dir = tempfile::tempdir().unwrap();
        write_sample(dir.path(), "toy", Split::Train, &tiny_sample(GOOD, 2, 2)).unwrap();
        let back = load_sample(dir.path(), "toy", Split::Train, GOOD, "000").unwrap();
        assert!(back.gt_mask.is_none());
    }

    #[test]
    fn rgb_cloud_mismatch_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let s = tiny_sample(GOOD, 4, 4);
        write_sample(dir.path(), "toy", Split::Train, &s).unwrap();
        let rgb_path = dir.path().join("toy/train/good/rgb/000.png");
        write_png(&rgb_path, 5, 5, 3, &[0; 75]).unwrap();
        let err = load_sample(dir.path(), "toy", Split::Train, GOOD, "000").unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)), "{err}");
    }

    #[test]
    fn missing_files_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_sample(dir.path(), "toy", Split::Train, GOOD, "nope").unwrap_err();
        assert!(matches!(err, Error::MissingFile(_)));

        let s = tiny_sample("dent", 2, 2);
        write_sample(dir.path(), "toy", Split::Test, &s).unwrap();
        fs::remove_file(dir.path().join("toy/test/dent/gt/000.png")).unwrap();
        let err = load_sample(dir.path(), "toy", Split::Test, "dent", "000").unwrap_err();
        assert!(matches!(err, Error::MissingFile(_)));
    }

    #[test]
    fn list_is_sorted() {
        let dir = tempfile::tempdir().unwrap();
        let mut a = tiny_sample("dent", 2, 2);
        a.id = "001".into();
        write_sample(dir.path(), "toy", Split::Test, &a).unwrap();
        write_sample(dir.path(), "toy", Split::Test, &tiny_sample(GOOD, 2, 2)).unwrap();
        write_sample(dir.path(), "toy", Split::Test, &tiny_sample("dent", 2, 2)).unwrap();
        let refs = list_samples(dir.path(), "toy", Split::Test).unwrap();
        let tags: Vec<String> = refs.iter().map(|r| r.tag()).collect();
        assert_eq!(tags, vec!["dent_000", "dent_001", "good_000"]);
    }
}

//! Seeded synthetic benchmark: a smooth object on a flat table seen by a
//! downward-looking sensor at the origin, with geometric or color defects.
//!
//! Lengths in pixels are given for a 224² image and scale with `size`; the
//! lattice pitch is fixed, so density-based parameters keep their meaning.
//! The table is the plane `z = PLANE_Z`; the object rises toward the sensor.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::io::{write_sample, Label, Mask, OrganizedPointCloud, RgbImage, Sample, Split, GOOD};

pub const PITCH: f32 = 0.001;
pub const PLANE_Z: f32 = 0.5;

const OBJECT_A: [f32; 3] = [232.0, 122.0, 30.0];
const OBJECT_B: [f32; 3] = [196.0, 86.0, 22.0];
const TABLE_A: [f32; 3] = [38.0, 92.0, 204.0];
const TABLE_B: [f32; 3] = [62.0, 124.0, 222.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnomalyKind {
    GeometricDent,
    GeometricBump,
    ColorBlotch,
    /// Cycles dent, bump, color over the anomalous samples.
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfaceKind {
    BumpyPlane,
    Hemisphere,
}

macro_rules! text_enum {
    ($t:ty, $($v:path => $s:literal),+) => {
        impl $t {
            pub fn as_str(self) -> &'static str {
                match self { $($v => $s),+ }
            }
        }
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
        impl FromStr for $t {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($s => Ok($v),)+
                    _ => Err(Error::InvalidParameter(format!(
                        concat!("unknown ", stringify!($t), " {:?}; expected one of ", $($s, " "),+), s
                    ))),
                }
            }
        }
    };
}

text_enum!(AnomalyKind,
    AnomalyKind::GeometricDent => "geometric_dent",
    AnomalyKind::GeometricBump => "geometric_bump",
    AnomalyKind::ColorBlotch => "color_blotch",
    AnomalyKind::Mixed => "mixed");

text_enum!(SurfaceKind,
    SurfaceKind::BumpyPlane => "bumpy_plane",
    SurfaceKind::Hemisphere => "hemisphere");

impl AnomalyKind {
    /// Test directory name of the `k`-th anomalous sample.
    pub fn defect_dir(self, k: usize) -> &'static str {
        match self {
            AnomalyKind::GeometricDent => "dent",
            AnomalyKind::GeometricBump => "bump",
            AnomalyKind::ColorBlotch => "color",
            AnomalyKind::Mixed => ["dent", "bump", "color"][k % 3],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub class_name: String,
    pub n_train: usize,
    pub n_test_good: usize,
    pub n_test_anom: usize,
    pub size: usize,
    pub anomaly_kind: AnomalyKind,
    pub surface_kind: SurfaceKind,
    pub noise_std: f32,
    /// A detached wave ridge and sensor dropouts on the table.
    pub background_artifacts: bool,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            class_name: "synthetic".into(),
            n_train: 50,
            n_test_good: 20,
            n_test_anom: 20,
            size: 224,
            anomaly_kind: AnomalyKind::GeometricDent,
            surface_kind: SurfaceKind::Hemisphere,
            noise_std: 0.0002,
            background_artifacts: true,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.n_train == 0 || self.n_test_good == 0 || self.n_test_anom == 0 {
            return bad("sample counts must be ≥ 1".into());
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return bad(format!("noise_std must be ≥ 0, got {}", self.noise_std));
        }
        if self.size < 64 || self.size % 8 != 0 {
            return bad(format!("size must be a multiple of 8 and ≥ 64, got {}", self.size));
        }
        if self.class_name.is_empty() || self.class_name.contains(['/', '\\']) {
            return bad(format!("invalid class name {:?}", self.class_name));
        }
        Ok(())
    }

    /// `key=value` lines, one per field.
    pub fn render(&self) -> String {
        format!(
            "class_name={}\nn_train={}\nn_test_good={}\nn_test_anom={}\nsize={}\nanomaly_kind={}\n\
             surface_kind={}\nnoise_std={}\nbackground_artifacts={}\nseed={}\n",
            self.class_name,
            self.n_train,
            self.n_test_good,
            self.n_test_anom,
            self.size,
            self.anomaly_kind,
            self.surface_kind,
            self.noise_std,
            self.background_artifacts,
            self.seed
        )
    }

    fn scale(&self) -> f32 {
        self.size as f32 / 224.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSample {
    pub split: Split,
    pub sample: Sample,
}

struct Disk {
    ci: f32,
    cj: f32,
    r: f32,
}

impl Disk {
    /// Squared normalized radius of pixel (i, j).
    fn rho2(&self, i: usize, j: usize) -> f32 {
        let (di, dj) = (i as f32 - self.ci, j as f32 - self.cj);
        (di * di + dj * dj) / (self.r * self.r)
    }

    fn mask(&self, n: usize) -> Mask {
        let data = (0..n * n).map(|p| self.rho2(p / n, p % n) < 1.0).collect();
        Mask { height: n, width: n, data }
    }
}

/// Height above the table (toward the sensor) plus the object footprint.
struct Scene {
    n: usize,
    height: Vec<f32>,
    object: Disk,
    dropout: Vec<bool>,
}

fn smoothstep(t: f32) -> f32 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

fn lerp3(a: [f32; 3], b: [f32; 3], t: f32) -> [u8; 3] {
    std::array::from_fn(|c| (a[c] + (b[c] - a[c]) * t).round().clamp(0.0, 255.0) as u8)
}

/// Smooth noise in [0, 1]: random values on a coarse lattice, smoothstep-interpolated.
fn value_noise(rng: &mut ChaCha8Rng, n: usize, cells: usize) -> Vec<f32> {
    let g = cells + 1;
    let lattice: Vec<f32> = (0..g * g).map(|_| rng.gen::<f32>()).collect();
    let step = n as f32 / cells as f32;
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        let fy = i as f32 / step;
        let (y0, ty) = ((fy as usize).min(cells - 1), smoothstep(fy - (fy as usize).min(cells - 1) as f32));
        for j in 0..n {
            let fx = j as f32 / step;
            let x0 = (fx as usize).min(cells - 1);
            let tx = smoothstep(fx - x0 as f32);
            let at = |a: usize, b: usize| lattice[a * g + b];
            let top = at(y0, x0) + (at(y0, x0 + 1) - at(y0, x0)) * tx;
            let bot = at(y0 + 1, x0) + (at(y0 + 1, x0 + 1) - at(y0 + 1, x0)) * tx;
            out.push(top + (bot - top) * ty);
        }
    }
    out
}

fn draw_scene(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Scene {
    let n = spec.size;
    let s = spec.scale();
    let mid = (n as f32 - 1.0) / 2.0;
    let object = Disk {
        ci: mid + rng.gen_range(-10.0..10.0) * s,
        cj: mid + rng.gen_range(-10.0..10.0) * s,
        r: rng.gen_range(72.0..84.0) * s,
    };
    let peak = rng.gen_range(0.016f32..0.02);
    let bumps: Vec<(f32, f32, f32, f32)> = (0..rng.gen_range(4..=7))
        .map(|_| {
            let a = rng.gen_range(0.0..std::f32::consts::TAU);
            let d = 0.8 * object.r * rng.gen::<f32>().sqrt();
            let amp = rng.gen_range(0.0008f32..0.0015) * if rng.gen::<bool>() { 1.0 } else { -1.0 };
            let sigma = rng.gen_range(14.0..24.0) * s;
            (object.ci + d * a.sin(), object.cj + d * a.cos(), amp, sigma)
        })
        .collect();
    let mut height = vec![0.0f32; n * n];
    for i in 0..n {
        for j in 0..n {
            let rho2 = object.rho2(i, j);
            if rho2 >= 1.0 {
                continue;
            }
            let support = 1.0 - rho2;
            let base = match spec.surface_kind {
                SurfaceKind::Hemisphere => peak * support,
                SurfaceKind::BumpyPlane => peak * smoothstep((1.0 - rho2.sqrt()) / 0.15),
            };
            let texture: f32 = bumps
                .iter()
                .map(|&(bi, bj, amp, sigma)| {
                    let d2 = (i as f32 - bi).powi(2) + (j as f32 - bj).powi(2);
                    amp * (-d2 / (2.0 * sigma * sigma)).exp()
                })
                .sum();
            height[i * n + j] = base + texture * support;
        }
    }
    let mut dropout = vec![false; n * n];
    if spec.background_artifacts {
        add_artifacts(spec, rng, &object, &mut height, &mut dropout);
    }
    Scene {
        n,
        height,
        object,
        dropout,
    }
}

/// Wave ridge in a random corner, kept clear of the object, plus small
/// rectangles of missing points on the table.
fn add_artifacts(spec: &SynthSpec, rng: &mut ChaCha8Rng, object: &Disk, height: &mut [f32], dropout: &mut [bool]) {
    let n = spec.size;
    let s = spec.scale();
    let clear = (object.r + 8.0 * s).powi(2);
    let far = |i: usize, j: usize| (i as f32 - object.ci).powi(2) + (j as f32 - object.cj).powi(2) > clear;
    let (long, short) = ((40.0 * s) as usize, (30.0 * s) as usize);
    let (len_i, len_j) = if rng.gen::<bool>() { (long, short) } else { (short, long) };
    let corner = rng.gen_range(0..4);
    let inset = (4.0 * s) as usize;
    let i0 = if corner / 2 == 0 { inset } else { n - inset - len_i };
    let j0 = if corner % 2 == 0 { inset } else { n - inset - len_j };
    let wavelength = 12.0 * s;
    for i in i0..i0 + len_i {
        for j in j0..j0 + len_j {
            if !far(i, j) {
                continue;
            }
            let (u, v, across) = if len_i > len_j {
                (i - i0, j - j0, len_j)
            } else {
                (j - j0, i - i0, len_i)
            };
            let crest = (std::f32::consts::PI * u as f32 / wavelength).sin().powi(2);
            let window = (std::f32::consts::PI * (v as f32 + 0.5) / across as f32).sin();
            height[i * n + j] = 0.02 * crest * window;
        }
    }
    for _ in 0..rng.gen_range(3..=8) {
        let (h, w) = (rng.gen_range(2..=6), rng.gen_range(2..=6));
        let (ti, tj) = (rng.gen_range(0..n - h), rng.gen_range(0..n - w));
        for i in ti..ti + h {
            for j in tj..tj + w {
                if far(i, j) {
                    dropout[i * n + j] = true;
                }
            }
        }
    }
}

fn render_cloud(scene: &Scene, noise: Option<&Normal<f32>>, rng: &mut ChaCha8Rng) -> OrganizedPointCloud {
    let n = scene.n;
    let mid = (n as f32 - 1.0) / 2.0;
    let mut xyz = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let p = i * n + j;
            let eps = noise.map_or(0.0, |d| d.sample(rng));
            if scene.dropout[p] {
                xyz.push([0.0; 3]);
                continue;
            }
            xyz.push([
                (j as f32 - mid) * PITCH,
                (i as f32 - mid) * PITCH,
                PLANE_Z - scene.height[p] + eps,
            ]);
        }
    }
    OrganizedPointCloud::new(n, n, xyz).expect("n² points")
}

fn render_rgb(scene: &Scene, rng: &mut ChaCha8Rng) -> RgbImage {
    let n = scene.n;
    let t = value_noise(rng, n, 6);
    let pixels = (0..n * n)
        .map(|p| {
            if scene.object.rho2(p / n, p % n) < 1.0 {
                lerp3(OBJECT_A, OBJECT_B, t[p])
            } else {
                lerp3(TABLE_A, TABLE_B, t[p])
            }
        })
        .collect();
    RgbImage::new(n, n, pixels).expect("n² pixels")
}

/// Paraboloid dent (`sign = -1`) or bump (`+1`) well inside the object.
fn add_geometric(spec: &SynthSpec, rng: &mut ChaCha8Rng, scene: &mut Scene, sign: f32) -> Mask {
    let s = spec.scale();
    let r = rng.gen_range(10.0..28.0) * s;
    let depth = (r / s * PITCH * rng.gen_range(0.18f32..0.26)).max(5.0 * spec.noise_std);
    let reach = (0.7 * scene.object.r - r).max(0.0);
    let a = rng.gen_range(0.0..std::f32::consts::TAU);
    let d = reach * rng.gen::<f32>().sqrt();
    let disk = Disk {
        ci: scene.object.ci + d * a.sin(),
        cj: scene.object.cj + d * a.cos(),
        r,
    };
    let n = scene.n;
    for p in 0..n * n {
        let rho2 = disk.rho2(p / n, p % n);
        if rho2 < 1.0 {
            scene.height[p] += sign * depth * (1.0 - rho2);
        }
    }
    disk.mask(n)
}

/// Disk centered anywhere in the image, possibly clipped by the border,
/// whose hue is rotated by 120°. A quarter disk still covers 0.5% of the image.
fn add_blotch(spec: &SynthSpec, rng: &mut ChaCha8Rng, rgb: &mut RgbImage) -> Mask {
    let n = spec.size;
    let s = spec.scale();
    let disk = Disk {
        ci: rng.gen_range(0.0..=(n - 1) as f32),
        cj: rng.gen_range(0.0..=(n - 1) as f32),
        r: rng.gen_range(18.0..34.0) * s,
    };
    let mask = disk.mask(n);
    for (px, &m) in rgb.pixels_mut().iter_mut().zip(&mask.data) {
        if m {
            // a cyclic channel shift is an exact 120° hue rotation
            *px = [px[2], px[0], px[1]];
        }
    }
    mask
}

/// The whole dataset in generation order: train, test good, test anomalous.
/// A single seeded stream drives every draw.
pub fn generate_samples(spec: &SynthSpec) -> Result<Vec<SynthSample>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = (spec.noise_std > 0.0).then(|| Normal::new(0.0, spec.noise_std).expect("finite std"));
    let n = spec.size;
    let mut out = Vec::with_capacity(spec.n_train + spec.n_test_good + spec.n_test_anom);
    let mut push = |split, defect: &str, id: usize, cloud, rgb, gt_mask: Option<Mask>| {
        let label = if defect == GOOD { Label::Normal } else { Label::Anomalous };
        out.push(SynthSample {
            split,
            sample: Sample {
                id: format!("{id:03}"),
                defect: defect.to_string(),
                cloud,
                rgb,
                gt_mask,
                label,
            },
        });
    };
    for (split, count) in [(Split::Train, spec.n_train), (Split::Test, spec.n_test_good)] {
        for id in 0..count {
            let scene = draw_scene(spec, &mut rng);
            let cloud = render_cloud(&scene, noise.as_ref(), &mut rng);
            let rgb = render_rgb(&scene, &mut rng);
            let gt = (split == Split::Test).then(|| Mask::empty(n, n));
            push(split, GOOD, id, cloud, rgb, gt);
        }
    }
    let mut per_dir = std::collections::BTreeMap::<&str, usize>::new();
    for k in 0..spec.n_test_anom {
        let dir = spec.anomaly_kind.defect_dir(k);
        let mut scene = draw_scene(spec, &mut rng);
        let (cloud, rgb, mask) = if dir == "color" {
            let cloud = render_cloud(&scene, noise.as_ref(), &mut rng);
            let mut rgb = render_rgb(&scene, &mut rng);
            let mask = add_blotch(spec, &mut rng, &mut rgb);
            (cloud, rgb, mask)
        } else {
            let sign = if dir == "dent" { -1.0 } else { 1.0 };
            let mask = add_geometric(spec, &mut rng, &mut scene, sign);
            let cloud = render_cloud(&scene, noise.as_ref(), &mut rng);
            let rgb = render_rgb(&scene, &mut rng);
            (cloud, rgb, mask)
        };
        let id = per_dir.entry(dir).or_default();
        push(Split::Test, dir, *id, cloud, rgb, Some(mask));
        *id += 1;
    }
    Ok(out)
}

/// Writes the dataset under `<out_root>/<class_name>/` and echoes the spec
/// to `<out_root>/<class_name>/synth_spec.txt`.
pub fn generate_dataset(spec: &SynthSpec, out_root: &Path) -> Result<()> {
    let samples = generate_samples(spec)?;
    let class_dir = out_root.join(&spec.class_name);
    fs::create_dir_all(&class_dir).map_err(|e| Error::io(&class_dir, e))?;
    for s in &samples {
        write_sample(out_root, &spec.class_name, s.split, &s.sample)?;
    }
    let echo = class_dir.join("synth_spec.txt");
    fs::write(&echo, spec.render()).map_err(|e| Error::io(&echo, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{is_valid_point, list_samples, load_sample};

    fn small(kind: AnomalyKind) -> SynthSpec {
        SynthSpec {
            n_train: 2,
            n_test_good: 1,
            n_test_anom: 3,
            size: 112,
            anomaly_kind: kind,
            seed: 7,
            ..SynthSpec::default()
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let a = generate_samples(&small(AnomalyKind::Mixed)).unwrap();
        let b = generate_samples(&small(AnomalyKind::Mixed)).unwrap();
        assert_eq!(a, b);
        let mut other = small(AnomalyKind::Mixed);
        other.seed = 8;
        assert_ne!(a, generate_samples(&other).unwrap());
    }

    #[test]
    fn table_points_lie_on_the_plane() {
        let spec = small(AnomalyKind::GeometricDent);
        let s = &generate_samples(&spec).unwrap()[0].sample;
        let n = spec.size;
        // corners of the table, away from the object
        for &(i, j) in &[(0, 0), (0, n - 1), (n - 1, 0), (n - 1, n - 1)] {
            let p = s.cloud.get(i, j);
            if is_valid_point(p) {
                assert!((p[2] - PLANE_Z).abs() < 0.025, "{p:?}");
            }
        }
        let c = s.cloud.get(n / 2, n / 2);
        assert!(PLANE_Z - c[2] > 0.01, "object must rise toward the sensor");
    }

    #[test]
    fn color_defects_rotate_hue_inside_mask() {
        let spec = small(AnomalyKind::ColorBlotch);
        let samples = generate_samples(&spec).unwrap();
        for s in samples.iter().filter(|s| s.sample.label == Label::Anomalous) {
            let mask = s.sample.gt_mask.as_ref().unwrap();
            for (px, &m) in s.sample.rgb.pixels().iter().zip(&mask.data) {
                let [r, g, b] = px.map(i32::from);
                let palette = (b > r && b > g) || (r > g && g > b);
                assert_eq!(palette, !m, "{px:?}");
            }
        }
    }

    #[test]
    fn mixed_cycles_defect_dirs() {
        let samples = generate_samples(&small(AnomalyKind::Mixed)).unwrap();
        let dirs: Vec<&str> = samples
            .iter()
            .filter(|s| s.sample.label == Label::Anomalous)
            .map(|s| s.sample.defect.as_str())
            .collect();
        assert_eq!(dirs, ["dent", "bump", "color"]);
    }

    #[test]
    fn writes_loadable_layout() {
        let dir = tempfile::tempdir().unwrap();
        let spec = small(AnomalyKind::Mixed);
        generate_dataset(&spec, dir.path()).unwrap();
        let test = list_samples(dir.path(), "synthetic", Split::Test).unwrap();
        assert_eq!(test.len(), 4);
        let back = load_sample(dir.path(), "synthetic", Split::Test, "bump", "000").unwrap();
        let mem = generate_samples(&spec).unwrap();
        let orig = mem.iter().find(|s| s.sample.defect == "bump").unwrap();
        assert_eq!(back, orig.sample);
        let echo = fs::read_to_string(dir.path().join("synthetic/synth_spec.txt")).unwrap();
        assert!(echo.contains("anomaly_kind=mixed"));
    }

    #[test]
    fn rejects_bad_specs() {
        let mut s = SynthSpec::default();
        s.n_train = 0;
        assert!(s.validate().is_err());
        let mut s = SynthSpec::default();
        s.noise_std = -1.0;
        assert!(s.validate().is_err());
        assert!("dent".parse::<AnomalyKind>().is_err());
        assert_eq!("color_blotch".parse::<AnomalyKind>().unwrap(), AnomalyKind::ColorBlotch);
    }
}

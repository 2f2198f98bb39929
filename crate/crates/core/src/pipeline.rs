//! End-to-end driver: prepare samples, describe them, fit a per-class
//! memory bank, score test samples and evaluate. Shared by the command
//! line tool and the acceptance suite.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::{info, warn};
use rayon::prelude::*;

use crate::descriptors::{
    concat_features, dsift_depth, fpfh_grid, hog_depth, raw_depth_patches, rgb_deep_from_tensor, rgb_raw_patches,
    FpfhParams, Method, PatchFeatureGrid,
};
use crate::error::{Error, Result};
use crate::io::{list_samples, load_ref, read_tensor, Label, Mask, Sample, SampleRef, Split};
use crate::metrics::{evaluate_class, ClassMetrics, PRO_FPR_LIMIT};
use crate::preprocess::{preprocess_sample, PreprocessConfig};
use crate::scoring::{
    coreset_select, fit_memory_bank, render_anomaly_map_hw, score_sample, AnomalyMap, BankMeta, MemoryBank,
};

/// Resolution at which maps are compared with ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EvalResolution {
    /// The preprocessing target size; masks are resized by nearest neighbour.
    #[default]
    Working,
    /// The sample's original size; maps are upsampled to it.
    Full,
}

impl EvalResolution {
    pub fn as_str(self) -> &'static str {
        match self {
            EvalResolution::Working => "working",
            EvalResolution::Full => "full",
        }
    }
}

impl fmt::Display for EvalResolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EvalResolution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "working" => Ok(EvalResolution::Working),
            "full" => Ok(EvalResolution::Full),
            other => Err(Error::InvalidParameter(format!(
                "unknown eval resolution {other:?}; expected working or full"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub method: Method,
    pub preprocess: PreprocessConfig,
    pub fpfh: FpfhParams,
    pub k: usize,
    pub coreset_ratio: f64,
    pub seed: u64,
    /// Gaussian blur of rendered maps in working-resolution pixels.
    pub sigma: f32,
    pub fpr_limit: f64,
    pub eval_resolution: EvalResolution,
    /// Root of exported deep features; required by the deep methods.
    pub features_root: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            method: Method::Fpfh,
            preprocess: PreprocessConfig::default(),
            fpfh: FpfhParams::default(),
            k: 1,
            coreset_ratio: 1.0,
            seed: 0,
            sigma: 4.0,
            fpr_limit: PRO_FPR_LIMIT,
            eval_resolution: EvalResolution::Working,
            features_root: None,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.preprocess.validate()?;
        self.fpfh.validate()?;
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be ≥ 1".into()));
        }
        if !(self.coreset_ratio > 0.0 && self.coreset_ratio <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "coreset_ratio must be in (0, 1], got {}",
                self.coreset_ratio
            )));
        }
        if !(self.sigma >= 0.0) {
            return Err(Error::InvalidParameter("sigma must be ≥ 0".into()));
        }
        if !(self.fpr_limit > 0.0 && self.fpr_limit <= 1.0) {
            return Err(Error::InvalidParameter("fpr_limit must be in (0, 1]".into()));
        }
        if needs_deep_features(self.method) && self.features_root.is_none() {
            return Err(Error::MissingFeatures(format!(
                "method {} needs exported RGB features; run the feature exporter and pass its output directory",
                self.method
            )));
        }
        Ok(())
    }
}

pub fn needs_deep_features(method: Method) -> bool {
    matches!(method, Method::RgbDeep | Method::Fused)
}

/// `<root>/<class>/<split>/<defect>/<id>.feat.adtn`, as written by the exporter.
pub fn deep_feature_path(root: &Path, r: &SampleRef) -> PathBuf {
    r.dir(root).join(format!("{}.feat.adtn", r.id))
}

pub fn load_deep_features(root: &Path, r: &SampleRef) -> Result<PatchFeatureGrid> {
    let path = deep_feature_path(root, r);
    if !path.is_file() {
        return Err(Error::MissingFeatures(format!(
            "{} not found; run the feature exporter (export --root <dataset> --out {}) first",
            path.display(),
            root.display()
        )));
    }
    rgb_deep_from_tensor(&read_tensor(&path)?)
}

/// A sample together with where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedSample {
    pub sample_ref: SampleRef,
    pub sample: Sample,
}

pub fn load_split(root: &Path, class: &str, split: Split) -> Result<Vec<LoadedSample>> {
    list_samples(root, class, split)?
        .into_par_iter()
        .map(|r| {
            let sample = load_ref(root, &r)?;
            Ok(LoadedSample { sample_ref: r, sample })
        })
        .collect()
}

/// Background-removal seed of the `index`-th sample of a split.
pub fn sample_seed(seed: u64, split: Split, index: usize) -> u64 {
    let lane = match split {
        Split::Train => 0,
        Split::Test => 1u64 << 32,
    };
    seed.wrapping_add(lane).wrapping_add(index as u64)
}

pub fn prepare(s: &LoadedSample, index: usize, cfg: &PipelineConfig) -> Result<Sample> {
    let r = &s.sample_ref;
    let seed = sample_seed(cfg.seed, r.split, index);
    let (out, warnings) = preprocess_sample(&s.sample, &cfg.preprocess, &r.class, seed)?;
    for w in warnings {
        warn!("{}/{}/{}: {w:?}", r.class, r.split, r.tag());
    }
    Ok(out)
}

/// Patch descriptors of a prepared sample.
pub fn describe(prepared: &Sample, r: &SampleRef, cfg: &PipelineConfig) -> Result<PatchFeatureGrid> {
    let deep = || {
        let root = cfg.features_root.as_deref().ok_or_else(|| {
            Error::MissingFeatures("no features directory configured; run the feature exporter first".into())
        })?;
        load_deep_features(root, r)
    };
    match cfg.method {
        Method::Raw => raw_depth_patches(&prepared.cloud.depth()),
        Method::Hog => hog_depth(&prepared.cloud.depth()),
        Method::Dsift => dsift_depth(&prepared.cloud.depth()),
        Method::Fpfh => fpfh_grid(&prepared.cloud, &cfg.fpfh),
        Method::RgbRaw => rgb_raw_patches(&prepared.rgb),
        Method::RgbDeep => deep(),
        Method::Fused => concat_features(&deep()?, &fpfh_grid(&prepared.cloud, &cfg.fpfh)?),
    }
}

fn describe_all(samples: &[LoadedSample], cfg: &PipelineConfig) -> Result<Vec<(Sample, PatchFeatureGrid)>> {
    samples
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let prepared = prepare(s, i, cfg)?;
            let grid = describe(&prepared, &s.sample_ref, cfg)?;
            Ok((prepared, grid))
        })
        .collect()
}

pub fn bank_meta(bank: &MemoryBank, cfg: &PipelineConfig) -> BankMeta {
    BankMeta {
        method: cfg.method,
        dim: bank.dim(),
        count: bank.len(),
        k: cfg.k,
        coreset_ratio: cfg.coreset_ratio,
        seed: cfg.seed,
    }
}

/// Memory bank of all training patches, coreset-reduced when configured.
pub fn fit_class(train: &[LoadedSample], cfg: &PipelineConfig) -> Result<MemoryBank> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::InvalidParameter("no training samples".into()));
    }
    let grids: Vec<PatchFeatureGrid> = describe_all(train, cfg)?.into_iter().map(|(_, g)| g).collect();
    let full = fit_memory_bank(&grids)?;
    let bank = coreset_select(&full, cfg.coreset_ratio, cfg.seed)?;
    info!("bank {}: {} of {} patches, dim {}", cfg.method, bank.len(), full.len(), bank.dim());
    Ok(bank)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredSample {
    pub sample_ref: SampleRef,
    pub label: Label,
    pub map: AnomalyMap,
    pub mask: Mask,
}

/// Scores and maps every test sample, then evaluates the class.
pub fn eval_class(
    bank: &MemoryBank,
    test: &[LoadedSample],
    cfg: &PipelineConfig,
) -> Result<(Vec<ScoredSample>, ClassMetrics)> {
    cfg.validate()?;
    if bank.method() != cfg.method {
        return Err(Error::InvalidParameter(format!(
            "bank was fitted with {}, config asks for {}",
            bank.method(),
            cfg.method
        )));
    }
    let described = describe_all(test, cfg)?;
    let scored: Vec<ScoredSample> = described
        .into_par_iter()
        .zip(test.par_iter())
        .map(|((prepared, grid), s)| {
            let ps = score_sample(bank, &grid, cfg.k)?;
            let (map, mask) = match cfg.eval_resolution {
                EvalResolution::Working => (
                    render_anomaly_map_hw(&ps, prepared.height(), prepared.width(), cfg.sigma),
                    prepared.mask_or_empty(),
                ),
                EvalResolution::Full => {
                    let (h, w) = (s.sample.height(), s.sample.width());
                    let sigma = cfg.sigma * h.max(w) as f32 / prepared.height().max(prepared.width()) as f32;
                    (render_anomaly_map_hw(&ps, h, w, sigma), s.sample.mask_or_empty())
                }
            };
            Ok(ScoredSample {
                sample_ref: s.sample_ref.clone(),
                label: s.sample.label,
                map,
                mask,
            })
        })
        .collect::<Result<_>>()?;
    let metrics = evaluate_scored(&scored, cfg.fpr_limit)?;
    Ok((scored, metrics))
}

pub fn evaluate_scored(scored: &[ScoredSample], fpr_limit: f64) -> Result<ClassMetrics> {
    let image_scores: Vec<f64> = scored.iter().map(|s| s.map.image_score as f64).collect();
    let labels: Vec<bool> = scored.iter().map(|s| s.label == Label::Anomalous).collect();
    let maps: Vec<Vec<f64>> = scored.iter().map(|s| s.map.to_f64()).collect();
    let masks: Vec<Mask> = scored.iter().map(|s| s.mask.clone()).collect();
    evaluate_class(&image_scores, &labels, &maps, &masks, fpr_limit)
}

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use ads3d::descriptors::Method;
use ads3d::io::{read_image_tensor, write_png, write_tensor, Split, TensorData};
use ads3d::metrics::{ClassMetrics, EvalReport};
use ads3d::pipeline::{bank_meta, eval_class, fit_class, load_split, ScoredSample};
use ads3d::scoring::MemoryBank;
use ads3d::synth::{generate_dataset, AnomalyKind, SurfaceKind, SynthSpec};
use anyhow::Context;
use clap::Args;
use log::{info, warn};
use rayon::prelude::*;

use crate::config::{ConfigError, Settings};

/// Process exit status of a finished command.
pub enum Outcome {
    Success,
    Degenerate,
}

pub fn bank_stem(output_dir: &Path, class: &str) -> PathBuf {
    output_dir.join(class).join("bank")
}

/// Every directory under `root` with a `train` or `test` split, sorted.
fn discover_classes(root: &Path) -> anyhow::Result<Vec<String>> {
    let entries = fs::read_dir(root).map_err(|e| ads3d::Error::Io {
        path: root.to_path_buf(),
        source: e,
    })?;
    let mut classes: Vec<String> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("train").is_dir() || p.join("test").is_dir())
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect();
    classes.sort();
    if classes.is_empty() {
        return Err(ads3d::Error::MissingFile(root.join("<class>/train")).into());
    }
    Ok(classes)
}

fn classes(s: &Settings) -> anyhow::Result<Vec<String>> {
    match &s.classes {
        Some(c) if !c.is_empty() => Ok(c.clone()),
        _ => discover_classes(s.dataset_root()?),
    }
}

pub fn fit(s: &Settings) -> anyhow::Result<Outcome> {
    let root = s.dataset_root()?;
    let out = s.output_dir()?;
    let cfg = s.pipeline(s.method.unwrap_or(Method::Fpfh))?;
    let classes = classes(s)?;
    classes.par_iter().try_for_each(|class| -> anyhow::Result<()> {
        let train = load_split(root, class, Split::Train).with_context(|| format!("loading {class}/train"))?;
        let bank = fit_class(&train, &cfg).with_context(|| format!("fitting {class}"))?;
        let stem = bank_stem(out, class);
        fs::create_dir_all(stem.parent().unwrap())
            .with_context(|| format!("creating {}", stem.parent().unwrap().display()))?;
        bank.save(&stem, &bank_meta(&bank, &cfg))?;
        info!("{class}: bank of {} × {} written to {}.adtn", bank.len(), bank.dim(), stem.display());
        Ok(())
    })?;
    Ok(Outcome::Success)
}

fn write_heatmaps(dir: &Path, scored: &[ScoredSample]) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for s in scored {
        let path = dir.join(format!("{}.png", s.sample_ref.tag()));
        write_png(&path, s.map.height, s.map.width, 1, &s.map.to_gray())?;
    }
    Ok(())
}

pub fn eval(s: &Settings) -> anyhow::Result<Outcome> {
    let root = s.dataset_root()?;
    let out = s.output_dir()?;
    let classes = classes(s)?;
    let results: Vec<(String, Method, f64, ClassMetrics)> = classes
        .par_iter()
        .map(|class| {
            let stem = bank_stem(out, class);
            let (bank, meta) =
                MemoryBank::load(&stem).with_context(|| format!("loading the {class} bank; run fit first"))?;
            let method = s.method.unwrap_or(meta.method);
            if method != meta.method {
                return Err(ConfigError(format!(
                    "{class}: bank was fitted with {}, eval asks for {method}",
                    meta.method
                ))
                .into());
            }
            let mut cfg = s.pipeline(method)?;
            if s.k.is_none() {
                cfg.k = meta.k;
            }
            let test = load_split(root, class, Split::Test).with_context(|| format!("loading {class}/test"))?;
            let (scored, metrics) = eval_class(&bank, &test, &cfg).with_context(|| format!("evaluating {class}"))?;
            if s.no_heatmaps != Some(true) {
                write_heatmaps(&out.join(class).join("heatmaps"), &scored)?;
            }
            Ok((class.clone(), method, cfg.fpr_limit, metrics))
        })
        .collect::<anyhow::Result<_>>()?;

    let method = results[0].1;
    let fpr_limit = results[0].2;
    if let Some((c, m, ..)) = results.iter().find(|r| r.1 != method) {
        warn!("class {c} uses {m} while others use {method}");
    }
    let per_class: BTreeMap<String, ClassMetrics> = results.into_iter().map(|(c, _, _, m)| (c, m)).collect();
    let report = EvalReport::new(method.as_str(), fpr_limit, per_class);
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let json = out.join("report.json");
    fs::write(&json, report.to_json() + "\n").with_context(|| format!("writing {}", json.display()))?;
    let csv = out.join("pro_curves.csv");
    fs::write(&csv, report.curves_csv()).with_context(|| format!("writing {}", csv.display()))?;
    print!("{}", report.summary_table());
    if report.is_degenerate() {
        for (class, m) in &report.per_class {
            for note in &m.notes {
                warn!("{class}: {note}");
            }
        }
        return Ok(Outcome::Degenerate);
    }
    Ok(Outcome::Success)
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Dataset root to create; the class directory goes below it.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "synthetic")]
    pub class_name: String,
    #[arg(long, default_value_t = 50)]
    pub n_train: usize,
    #[arg(long, default_value_t = 20)]
    pub n_test_good: usize,
    #[arg(long, default_value_t = 20)]
    pub n_test_anom: usize,
    #[arg(long, default_value_t = 224)]
    pub size: usize,
    /// geometric_dent, geometric_bump, color_blotch or mixed.
    #[arg(long, default_value = "geometric_dent")]
    pub anomaly_kind: AnomalyKind,
    /// bumpy_plane or hemisphere.
    #[arg(long, default_value = "hemisphere")]
    pub surface_kind: SurfaceKind,
    #[arg(long, default_value_t = 0.0002)]
    pub noise_std: f32,
    /// Leave out the wave ridge and dropouts on the table.
    #[arg(long)]
    pub no_artifacts: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn synth(a: &SynthArgs) -> anyhow::Result<Outcome> {
    let spec = SynthSpec {
        class_name: a.class_name.clone(),
        n_train: a.n_train,
        n_test_good: a.n_test_good,
        n_test_anom: a.n_test_anom,
        size: a.size,
        anomaly_kind: a.anomaly_kind,
        surface_kind: a.surface_kind,
        noise_std: a.noise_std,
        background_artifacts: !a.no_artifacts,
        seed: a.seed,
    };
    spec.validate().map_err(|e| ConfigError(e.to_string()))?;
    generate_dataset(&spec, &a.out)?;
    info!("wrote {}", a.out.join(&spec.class_name).display());
    Ok(Outcome::Success)
}

#[derive(Debug, Clone, Args)]
pub struct ConvertArgs {
    /// `.adtn` or `.png` file.
    pub input: PathBuf,
    /// `.png` or `.adtn` file; the other format than the input.
    pub output: PathBuf,
}

fn ext(p: &Path) -> Option<String> {
    p.extension().map(|e| e.to_string_lossy().to_ascii_lowercase())
}

/// ADTN ↔ PNG for 8-bit H×W, H×W×1 and H×W×3 images.
pub fn convert(a: &ConvertArgs) -> anyhow::Result<Outcome> {
    let (from, to) = (ext(&a.input), ext(&a.output));
    match (from.as_deref(), to.as_deref()) {
        (Some("png"), Some("adtn")) => {
            let t = read_image_tensor(&a.input)?;
            write_tensor(&t, &a.output)?;
        }
        (Some("adtn"), Some("png")) => {
            let t = read_image_tensor(&a.input)?;
            let dims = t.dims().to_vec();
            let channels = match dims.as_slice() {
                [_, _] => 1,
                [_, _, c @ (1 | 3)] => *c,
                d => return Err(ads3d::Error::InvalidShape(format!("cannot store {d:?} as PNG")).into()),
            };
            let TensorData::U8(bytes) = t.into_data() else {
                return Err(ads3d::Error::InvalidShape("PNG export needs an 8-bit tensor".into()).into());
            };
            write_png(&a.output, dims[0], dims[1], channels, &bytes)?;
        }
        _ => {
            return Err(ConfigError(format!(
                "convert maps .png to .adtn or .adtn to .png, got {} → {}",
                a.input.display(),
                a.output.display()
            ))
            .into())
        }
    }
    Ok(Outcome::Success)
}

//! Run settings: a `key=value` file overlaid by command-line flags.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ads3d::descriptors::Method;
use ads3d::pipeline::{EvalResolution, PipelineConfig};
use clap::Args;
use thiserror::Error;

/// Bad configuration; maps to exit code 2.
#[derive(Debug, Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

fn cfg_err(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

/// Every setting is optional so that file and flags can be layered.
#[derive(Debug, Clone, Default, PartialEq, Args)]
pub struct Settings {
    /// Dataset root holding one directory per class.
    #[arg(long)]
    pub dataset_root: Option<PathBuf>,
    /// Comma-separated classes; default: every class directory.
    #[arg(long, value_delimiter = ',')]
    pub classes: Option<Vec<String>>,
    /// raw, hog, dsift, fpfh, rgb_raw, rgb_deep or rgb_plus_fpfh.
    #[arg(long)]
    pub method: Option<Method>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub coreset_ratio: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// working (preprocessing size) or full (original size).
    #[arg(long)]
    pub eval_resolution: Option<EvalResolution>,
    /// Directory of exported deep features, laid out like the dataset.
    #[arg(long)]
    pub features_root: Option<PathBuf>,
    /// Anomaly map blur in pixels; 0 disables it.
    #[arg(long)]
    pub sigma: Option<f32>,
    #[arg(long)]
    pub fpr_limit: Option<f64>,
    /// Background removal on (true) or off (false).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub preprocess: Option<bool>,
    #[arg(long)]
    pub target_size: Option<usize>,
    #[arg(long)]
    pub boundary_strip: Option<usize>,
    #[arg(long)]
    pub plane_dist: Option<f32>,
    #[arg(long)]
    pub ransac_n: Option<usize>,
    #[arg(long)]
    pub ransac_iterations: Option<usize>,
    #[arg(long)]
    pub dbscan_eps: Option<f32>,
    #[arg(long)]
    pub dbscan_min_points: Option<usize>,
    #[arg(long)]
    pub fpfh_radius: Option<f32>,
    #[arg(long)]
    pub fpfh_max_nn: Option<usize>,
    #[arg(long)]
    pub normal_radius: Option<f32>,
    #[arg(long)]
    pub normal_max_nn: Option<usize>,
    /// Skip writing heatmap PNGs during eval.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub no_heatmaps: Option<bool>,
    /// Per-class crop before resizing, `class=HxW`; repeatable.
    #[arg(long = "aspect-override", value_parser = parse_override)]
    pub aspect_override: Vec<(String, (usize, usize))>,
}

fn parse_hw(v: &str) -> Result<(usize, usize), String> {
    let (h, w) = v.split_once('x').ok_or_else(|| format!("expected HxW, got {v:?}"))?;
    let num = |s: &str| s.trim().parse::<usize>().map_err(|_| format!("bad size {v:?}"));
    Ok((num(h)?, num(w)?))
}

fn parse_override(v: &str) -> Result<(String, (usize, usize)), String> {
    let (class, hw) = v.split_once('=').ok_or_else(|| format!("expected class=HxW, got {v:?}"))?;
    Ok((class.trim().to_string(), parse_hw(hw)?))
}

fn parse_value<T: FromStr>(key: &str, v: &str) -> anyhow::Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| cfg_err(format!("config key {key}: {e}")))
}

impl Settings {
    /// Parses `key=value` lines; `#` starts a comment line.
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let mut s = Settings::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, v) = line
                .split_once('=')
                .ok_or_else(|| cfg_err(format!("config line {}: expected key=value, got {raw:?}", n + 1)))?;
            let (key, v) = (key.trim(), v.trim());
            if let Some(class) = key.strip_prefix("aspect_override.") {
                let hw = parse_hw(v).map_err(cfg_err)?;
                s.aspect_override.push((class.to_string(), hw));
                continue;
            }
            match key {
                "dataset_root" => s.dataset_root = Some(v.into()),
                "classes" => {
                    s.classes = Some(v.split(',').map(str::trim).filter(|c| !c.is_empty()).map(String::from).collect())
                }
                "method" => s.method = Some(parse_value(key, v)?),
                "k" => s.k = Some(parse_value(key, v)?),
                "coreset_ratio" => s.coreset_ratio = Some(parse_value(key, v)?),
                "seed" => s.seed = Some(parse_value(key, v)?),
                "output_dir" => s.output_dir = Some(v.into()),
                "eval_resolution" => s.eval_resolution = Some(parse_value(key, v)?),
                "features_root" => s.features_root = Some(v.into()),
                "sigma" => s.sigma = Some(parse_value(key, v)?),
                "fpr_limit" => s.fpr_limit = Some(parse_value(key, v)?),
                "preprocess" => s.preprocess = Some(parse_value(key, v)?),
                "target_size" => s.target_size = Some(parse_value(key, v)?),
                "boundary_strip" => s.boundary_strip = Some(parse_value(key, v)?),
                "plane_dist" => s.plane_dist = Some(parse_value(key, v)?),
                "ransac_n" => s.ransac_n = Some(parse_value(key, v)?),
                "ransac_iterations" => s.ransac_iterations = Some(parse_value(key, v)?),
                "dbscan_eps" => s.dbscan_eps = Some(parse_value(key, v)?),
                "dbscan_min_points" => s.dbscan_min_points = Some(parse_value(key, v)?),
                "fpfh_radius" => s.fpfh_radius = Some(parse_value(key, v)?),
                "fpfh_max_nn" => s.fpfh_max_nn = Some(parse_value(key, v)?),
                "normal_radius" => s.normal_radius = Some(parse_value(key, v)?),
                "normal_max_nn" => s.normal_max_nn = Some(parse_value(key, v)?),
                "no_heatmaps" => s.no_heatmaps = Some(parse_value(key, v)?),
                other => return Err(cfg_err(format!("config line {}: unknown key {other:?}", n + 1))),
            }
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| cfg_err(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// `self` with every setting present in `top` replaced by it.
    pub fn overlay(mut self, top: Settings) -> Self {
        macro_rules! take {
            ($($f:ident),+) => { $( if top.$f.is_some() { self.$f = top.$f; } )+ };
        }
        take!(
            dataset_root, classes, method, k, coreset_ratio, seed, output_dir, eval_resolution, features_root,
            sigma, fpr_limit, preprocess, target_size, boundary_strip, plane_dist, ransac_n, ransac_iterations,
            dbscan_eps, dbscan_min_points, fpfh_radius, fpfh_max_nn, normal_radius, normal_max_nn, no_heatmaps
        );
        self.aspect_override.extend(top.aspect_override);
        self
    }

    pub fn dataset_root(&self) -> anyhow::Result<&Path> {
        self.dataset_root
            .as_deref()
            .ok_or_else(|| cfg_err("dataset_root is required"))
    }

    pub fn output_dir(&self) -> anyhow::Result<&Path> {
        self.output_dir
            .as_deref()
            .ok_or_else(|| cfg_err("output_dir is required"))
    }

    /// Pipeline configuration with defaults for everything unset.
    pub fn pipeline(&self, method: Method) -> anyhow::Result<PipelineConfig> {
        let mut c = PipelineConfig {
            method,
            ..PipelineConfig::default()
        };
        let p = &mut c.preprocess;
        macro_rules! set {
            ($dst:expr, $src:ident) => {
                if let Some(v) = self.$src.clone() {
                    $dst = v;
                }
            };
        }
        set!(p.enabled, preprocess);
        set!(p.target_size, target_size);
        set!(p.boundary_strip, boundary_strip);
        set!(p.plane_dist, plane_dist);
        set!(p.ransac_n, ransac_n);
        set!(p.ransac_iterations, ransac_iterations);
        set!(p.dbscan_eps, dbscan_eps);
        set!(p.dbscan_min_points, dbscan_min_points);
        p.aspect_override = self.aspect_override.iter().cloned().collect::<BTreeMap<_, _>>();
        set!(c.fpfh.radius, fpfh_radius);
        set!(c.fpfh.max_nn, fpfh_max_nn);
        set!(c.fpfh.normals.radius, normal_radius);
        set!(c.fpfh.normals.max_nn, normal_max_nn);
        set!(c.k, k);
        set!(c.coreset_ratio, coreset_ratio);
        set!(c.seed, seed);
        set!(c.sigma, sigma);
        set!(c.fpr_limit, fpr_limit);
        set!(c.eval_resolution, eval_resolution);
        c.features_root = self.features_root.clone();
        match c.validate() {
            Ok(()) => Ok(c),
            Err(e @ ads3d::Error::MissingFeatures(_)) => Err(e.into()),
            Err(e) => Err(cfg_err(e.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_flags() {
        let file = Settings::parse("# run\nmethod=hog\nk=3\nclasses=a, b\naspect_override.a=100x80\n").unwrap();
        let flags = Settings {
            k: Some(1),
            seed: Some(9),
            ..Settings::default()
        };
        let s = file.overlay(flags);
        assert_eq!(s.method, Some(Method::Hog));
        assert_eq!((s.k, s.seed), (Some(1), Some(9)));
        assert_eq!(s.classes.as_deref(), Some(&["a".to_string(), "b".to_string()][..]));
        let c = s.pipeline(Method::Hog).unwrap();
        assert_eq!(c.preprocess.aspect_override["a"], (100, 80));
        assert_eq!(c.k, 1);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(Settings::parse("colour=red").unwrap_err().is::<ConfigError>());
        assert!(Settings::parse("k=many").unwrap_err().is::<ConfigError>());
        assert!(Settings::parse("method=sift").unwrap_err().is::<ConfigError>());
        let s = Settings {
            coreset_ratio: Some(2.0),
            ..Settings::default()
        };
        assert!(s.pipeline(Method::Raw).unwrap_err().is::<ConfigError>());
    }
}

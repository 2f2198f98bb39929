use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::pro::pro_curve;
use super::roc::{pixel_roc_auc, roc_auc};
use crate::error::{Error, Result};
use crate::io::Mask;

/// Metrics of one class. A metric that is undefined on this class (e.g.
/// no anomalous images) is `None` and the reason is kept in `notes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub i_roc: Option<f64>,
    pub p_roc: Option<f64>,
    pub pro: Option<f64>,
    /// `(fpr, pro)` up to the FPR limit, thinned to at most [`REPORT_CURVE_POINTS`] + 1 points.
    pub pro_curve: Vec<(f64, f64)>,
    pub n_test: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl ClassMetrics {
    pub fn is_degenerate(&self) -> bool {
        self.i_roc.is_none() || self.p_roc.is_none() || self.pro.is_none()
    }
}

/// Unweighted average over classes; `None` when any class lacks the metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanMetrics {
    pub i_roc: Option<f64>,
    pub p_roc: Option<f64>,
    pub pro: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    pub fpr_limit: f64,
    pub per_class: BTreeMap<String, ClassMetrics>,
    pub mean: MeanMetrics,
}

/// Most curve points kept in a report; the integral always uses the full curve.
pub const REPORT_CURVE_POINTS: usize = 1000;

/// Subsample of `points` with FPR steps of at least `limit / max_points`,
/// keeping both endpoints.
fn thin_curve(points: &[(f64, f64)], limit: f64, max_points: usize) -> Vec<(f64, f64)> {
    let step = limit / max_points as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (k, &p) in points.iter().enumerate() {
        let last = k + 1 == points.len();
        match out.last() {
            Some(&(x, _)) if !last && p.0 - x < step => {}
            _ => out.push(p),
        }
    }
    out
}

fn keep(r: Result<f64>, what: &str, notes: &mut Vec<String>) -> Result<Option<f64>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::UndefinedMetric(msg)) => {
            notes.push(format!("{what}: {msg}"));
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

/// All three metrics of one class. Undefined metrics become `None`;
/// malformed input (length mismatches, NaN) is still an error.
pub fn evaluate_class(
    image_scores: &[f64],
    labels: &[bool],
    maps: &[Vec<f64>],
    masks: &[Mask],
    fpr_limit: f64,
) -> Result<ClassMetrics> {
    let mut notes = Vec::new();
    let i_roc = keep(roc_auc(image_scores, labels), "i_roc", &mut notes)?;
    let p_roc = keep(pixel_roc_auc(maps, masks), "p_roc", &mut notes)?;
    let (pro, curve) = match pro_curve(maps, masks, fpr_limit) {
        Ok(c) => (Some(c.integrated), thin_curve(&c.points, fpr_limit, REPORT_CURVE_POINTS)),
        Err(Error::UndefinedMetric(msg)) => {
            notes.push(format!("pro: {msg}"));
            (None, Vec::new())
        }
        Err(e) => return Err(e),
    };
    Ok(ClassMetrics {
        i_roc,
        p_roc,
        pro,
        pro_curve: curve,
        n_test: image_scores.len(),
        notes,
    })
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in values {
        sum += v?;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

impl EvalReport {
    pub fn new(method: impl Into<String>, fpr_limit: f64, per_class: BTreeMap<String, ClassMetrics>) -> Self {
        let mean = MeanMetrics {
            i_roc: mean_of(per_class.values().map(|c| c.i_roc)),
            p_roc: mean_of(per_class.values().map(|c| c.p_roc)),
            pro: mean_of(per_class.values().map(|c| c.pro)),
        };
        EvalReport {
            method: method.into(),
            fpr_limit,
            per_class,
            mean,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.per_class.values().any(ClassMetrics::is_degenerate)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidParameter(format!("report json: {e}")))
    }

    /// `class,fpr,pro` rows for every curve point.
    pub fn curves_csv(&self) -> String {
        let mut out = String::from("class,fpr,pro\n");
        for (class, m) in &self.per_class {
            for (fpr, pro) in &m.pro_curve {
                let _ = writeln!(out, "{class},{fpr},{pro}");
            }
        }
        out
    }

    /// Fixed-width table of the per-class and mean rows.
    pub fn summary_table(&self) -> String {
        let cell = |v: Option<f64>| v.map_or_else(|| "    n/a".to_string(), |x| format!("{x:>7.4}"));
        let mut out = format!("{:<16} {:>7} {:>7} {:>7}\n", "class", "I-ROC", "P-ROC", "PRO");
        for (class, m) in &self.per_class {
            let _ = writeln!(out, "{class:<16} {} {} {}", cell(m.i_roc), cell(m.p_roc), cell(m.pro));
        }
        let _ = writeln!(
            out,
            "{:<16} {} {} {}",
            "mean",
            cell(self.mean.i_roc),
            cell(self.mean.p_roc),
            cell(self.mean.pro)
        );
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> (Vec<f64>, Vec<bool>, Vec<Vec<f64>>, Vec<Mask>) {
        let good = Mask::empty(4, 4);
        let mut bad = Mask::empty(4, 4);
        bad.data[5] = true;
        bad.data[6] = true;
        let maps = vec![vec![0.0; 16], bad.data.iter().map(|&b| b as u8 as f64).collect()];
        (vec![0.0, 1.0], vec![false, true], maps, vec![good, bad])
    }

    #[test]
    fn maps_equal_to_masks_score_one() {
        let (s, l, maps, masks) = fixture();
        let m = evaluate_class(&s, &l, &maps, &masks, 0.3).unwrap();
        assert_eq!((m.i_roc, m.p_roc, m.pro), (Some(1.0), Some(1.0), Some(1.0)));
        let r = EvalReport::new("raw", 0.3, BTreeMap::from([("a".to_string(), m)]));
        assert_eq!(r.mean.pro, Some(1.0));
        assert!(!r.is_degenerate());
        assert_eq!(EvalReport::from_json(&r.to_json()).unwrap(), r);
    }

    #[test]
    fn single_class_input_is_reported_not_raised() {
        let (_, _, maps, masks) = fixture();
        let m = evaluate_class(&[0.0], &[false], &maps[..1], &masks[..1], 0.3).unwrap();
        assert_eq!((m.i_roc, m.p_roc, m.pro), (None, None, None));
        assert_eq!(m.notes.len(), 3);
        let r = EvalReport::new("raw", 0.3, BTreeMap::from([("a".to_string(), m)]));
        assert!(r.is_degenerate());
        assert_eq!(r.mean.i_roc, None);
    }

    #[test]
    fn thinned_curve_keeps_endpoints() {
        let pts: Vec<(f64, f64)> = (0..=3000).map(|k| (k as f64 * 1e-4, k as f64 / 3000.0)).collect();
        let t = thin_curve(&pts, 0.3, 1000);
        assert!(t.len() <= 1001);
        assert_eq!((t[0], *t.last().unwrap()), (pts[0], pts[3000]));
        assert!(t.windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn mean_is_unweighted() {
        let mk = |v| ClassMetrics {
            i_roc: Some(v),
            p_roc: Some(v),
            pro: Some(v),
            pro_curve: vec![],
            n_test: if v > 0.5 { 100 } else { 2 },
            notes: vec![],
        };
        let r = EvalReport::new("x", 0.3, BTreeMap::from([("a".into(), mk(1.0)), ("b".into(), mk(0.5))]));
        assert_eq!(r.mean.i_roc, Some(0.75));
    }
}

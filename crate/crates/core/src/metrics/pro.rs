//! Per-region overlap: for a threshold t, PRO(t) is the mean over all
//! ground-truth components (pooled across the dataset) of the fraction of
//! the component at or above t; FPR(t) is the pooled false positive rate.
//! The curve is integrated over FPR ∈ [0, limit] and divided by the limit.

use super::components::connected_components;
use crate::error::{Error, Result};
use crate::io::Mask;

#[derive(Debug, Clone, PartialEq)]
pub struct ProCurve {
    /// `(fpr, pro)` points, fpr ascending, ending exactly at the limit.
    pub points: Vec<(f64, f64)>,
    pub integrated: f64,
    pub fpr_limit: f64,
}

/// Per-pixel region id (`None` for normal pixels) plus component sizes.
struct Regions {
    scores: Vec<f64>,
    region: Vec<Option<u32>>,
    sizes: Vec<usize>,
    negatives: usize,
}

fn collect_regions(maps: &[Vec<f64>], masks: &[Mask]) -> Result<Regions> {
    if maps.len() != masks.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} maps vs {} masks",
            maps.len(),
            masks.len()
        )));
    }
    let mut scores = Vec::new();
    let mut region = Vec::new();
    let mut sizes = Vec::new();
    let mut negatives = 0;
    for (m, gt) in maps.iter().zip(masks) {
        if m.len() != gt.data.len() {
            return Err(Error::DimensionMismatch(format!(
                "map of {} pixels vs mask of {}",
                m.len(),
                gt.data.len()
            )));
        }
        if m.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidParameter("NaN score".into()));
        }
        let comps = connected_components(gt);
        let offset = sizes.len() as u32;
        sizes.extend(comps.sizes());
        for (&s, &l) in m.iter().zip(&comps.labels) {
            scores.push(s);
            if l == 0 {
                negatives += 1;
                region.push(None);
            } else {
                region.push(Some(offset + l - 1));
            }
        }
    }
    if sizes.is_empty() {
        return Err(Error::UndefinedMetric("PRO needs at least one ground-truth component".into()));
    }
    if negatives == 0 {
        return Err(Error::UndefinedMetric("PRO needs at least one normal pixel".into()));
    }
    Ok(Regions {
        scores,
        region,
        sizes,
        negatives,
    })
}

/// Trapezoidal area of `pro` over `fpr ∈ [0, limit]`, divided by `limit`.
/// The curve is cut at the limit by linear interpolation. Points must be
/// sorted by fpr; the returned curve is the part that was integrated.
pub fn integrate_curve(points: &[(f64, f64)], limit: f64) -> (Vec<(f64, f64)>, f64) {
    let mut kept: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    let mut area = 0.0;
    for &(x, y) in points {
        if let Some(&(px, py)) = kept.last() {
            if x > limit {
                let t = if x > px { (limit - px) / (x - px) } else { 0.0 };
                let y_lim = py + t * (y - py);
                area += (limit - px) * (py + y_lim) / 2.0;
                kept.push((limit, y_lim));
                return (kept, area / limit);
            }
            area += (x - px) * (py + y) / 2.0;
        }
        kept.push((x, y));
    }
    if let Some(&(px, py)) = kept.last() {
        if px < limit {
            // flat extension past the last point
            area += (limit - px) * py;
            kept.push((limit, py));
        }
    }
    (kept, area / limit)
}

/// Exact PRO curve: every distinct score is a threshold.
pub fn pro_curve(maps: &[Vec<f64>], masks: &[Mask], fpr_limit: f64) -> Result<ProCurve> {
    if !(fpr_limit > 0.0 && fpr_limit <= 1.0) {
        return Err(Error::InvalidParameter(format!("fpr limit {fpr_limit} not in (0, 1]")));
    }
    let r = collect_regions(maps, masks)?;
    let k = r.sizes.len() as f64;
    let weight: Vec<f64> = r.sizes.iter().map(|&s| 1.0 / (s as f64 * k)).collect();
    let mut order: Vec<usize> = (0..r.scores.len()).collect();
    order.sort_unstable_by(|&a, &b| r.scores[b].total_cmp(&r.scores[a]));
    let neg = r.negatives as f64;
    let mut points = Vec::new();
    let (mut fp, mut pro) = (0usize, 0.0f64);
    let mut i = 0;
    while i < order.len() {
        let s = r.scores[order[i]];
        while i < order.len() && r.scores[order[i]] == s {
            match r.region[order[i]] {
                Some(c) => pro += weight[c as usize],
                None => fp += 1,
            }
            i += 1;
        }
        points.push((fp as f64 / neg, pro.min(1.0)));
    }
    finish(points, fpr_limit)
}

fn finish(mut points: Vec<(f64, f64)>, fpr_limit: f64) -> Result<ProCurve> {
    // anchor at FPR 0 with the PRO of the highest threshold
    let first = points[0].1;
    points.insert(0, (0.0, first));
    let (points, integrated) = integrate_curve(&points, fpr_limit);
    Ok(ProCurve {
        points,
        integrated,
        fpr_limit,
    })
}

/// PRO curve over `levels` evenly spaced thresholds between the minimum
/// and maximum score; approximates [`pro_curve`] in linear time.
pub fn pro_curve_binned(maps: &[Vec<f64>], masks: &[Mask], fpr_limit: f64, levels: usize) -> Result<ProCurve> {
    if levels < 2 {
        return Err(Error::InvalidParameter("need at least 2 threshold levels".into()));
    }
    let r = collect_regions(maps, masks)?;
    let lo = r.scores.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = r.scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let bin = |s: f64| -> usize {
        if span > 0.0 {
            (((s - lo) / span) * (levels - 1) as f64).floor() as usize
        } else {
            0
        }
        .min(levels - 1)
    };
    let k = r.sizes.len() as f64;
    let mut fp_hist = vec![0usize; levels];
    let mut pro_hist = vec![0.0f64; levels];
    for (idx, &s) in r.scores.iter().enumerate() {
        let b = bin(s);
        match r.region[idx] {
            Some(c) => pro_hist[b] += 1.0 / (r.sizes[c as usize] as f64 * k),
            None => fp_hist[b] += 1,
        }
    }
    let neg = r.negatives as f64;
    let (mut fp, mut pro) = (0usize, 0.0f64);
    let mut points = Vec::with_capacity(levels);
    for b in (0..levels).rev() {
        if fp_hist[b] == 0 && pro_hist[b] == 0.0 {
            continue;
        }
        fp += fp_hist[b];
        pro += pro_hist[b];
        points.push((fp as f64 / neg, pro.min(1.0)));
    }
    finish(points, fpr_limit)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_maps_integrate_to_one() {
        let mask = Mask::new(3, 3, vec![true, false, false, false, false, false, false, true, true]).unwrap();
        let map: Vec<f64> = mask.data.iter().map(|&b| b as u8 as f64).collect();
        let c = pro_curve(&[map], &[mask], 0.3).unwrap();
        assert_eq!(c.integrated, 1.0);
        assert_eq!(c.points.last().unwrap().0, 0.3);
    }

    #[test]
    fn two_component_average() {
        // component A (1 px) fully above t, component B half above t
        let mask = Mask::new(1, 6, vec![true, false, true, true, false, false]).unwrap();
        let map = vec![0.9, 0.0, 0.8, 0.1, 0.0, 0.0];
        let c = pro_curve(&[map], &[mask], 1.0).unwrap();
        // threshold 0.8: A covered, B 1/2 → 0.75 with FPR 0
        assert!(c.points.contains(&(0.0, 0.75)));
    }

    #[test]
    fn no_components_is_undefined() {
        let err = pro_curve(&[vec![0.0; 4]], &[Mask::empty(2, 2)], 0.3).unwrap_err();
        assert!(matches!(err, Error::UndefinedMetric(_)));
    }

    #[test]
    fn interpolates_at_limit() {
        let (pts, area) = integrate_curve(&[(0.0, 0.0), (0.6, 0.6)], 0.3);
        assert_eq!(pts, vec![(0.0, 0.0), (0.3, 0.3)]);
        assert!((area - 0.15).abs() < 1e-15);
    }
}

use crate::error::{Error, Result};
use crate::io::Mask;

/// Area under the ROC curve as the Mann–Whitney statistic
/// `P(s⁺ > s⁻) + ½ P(s⁺ = s⁻)`. Depends only on the ordering of scores.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidParameter("NaN score".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric(format!(
            "ROCAUC needs both classes ({n_pos} positive, {n_neg} negative)"
        )));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // counts are integers or halves well below 2^53, so the sum is exact
    let mut wins = 0.0f64;
    let mut neg_below = 0u64;
    let mut k = 0;
    while k < order.len() {
        let s = scores[order[k]];
        let (mut pos, mut neg) = (0u64, 0u64);
        while k < order.len() && scores[order[k]] == s {
            if labels[order[k]] {
                pos += 1;
            } else {
                neg += 1;
            }
            k += 1;
        }
        wins += pos as f64 * (neg_below as f64 + 0.5 * neg as f64);
        neg_below += neg;
    }
    Ok(wins / (n_pos as f64 * n_neg as f64))
}

/// ROCAUC over every pixel of every map, pooled.
pub fn pixel_roc_auc(maps: &[Vec<f64>], masks: &[Mask]) -> Result<f64> {
    if maps.len() != masks.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} maps vs {} masks",
            maps.len(),
            masks.len()
        )));
    }
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for (m, gt) in maps.iter().zip(masks) {
        if m.len() != gt.data.len() {
            return Err(Error::DimensionMismatch(format!(
                "map of {} pixels vs mask of {}",
                m.len(),
                gt.data.len()
            )));
        }
        scores.extend_from_slice(m);
        labels.extend_from_slice(&gt.data);
    }
    roc_auc(&scores, &labels)
}

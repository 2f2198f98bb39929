//! Greedy k-center (farthest point) subsampling of a memory bank.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::MemoryBank;
use crate::error::{Error, Result};

fn sq_dist(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum()
}

/// Selects `k` rows starting at `start`, each next row maximizing the
/// distance to the current selection (ties → lowest index).
///
/// Returns the picks and, per pick, its distance to the selection at the
/// time it was taken (`∞` for the first).
pub fn greedy_k_center(bank: &MemoryBank, k: usize, start: usize) -> (Vec<usize>, Vec<f64>) {
    let m = bank.len();
    let k = k.min(m);
    if k == 0 {
        return (Vec::new(), Vec::new());
    }
    let mut picks = Vec::with_capacity(k);
    let mut gains = Vec::with_capacity(k);
    let mut min_d2 = vec![f64::INFINITY; m];
    let mut current = start;
    let mut gain = f64::INFINITY;
    loop {
        picks.push(current);
        gains.push(gain);
        if picks.len() == k {
            break;
        }
        let center = bank.row(current);
        min_d2.par_iter_mut().enumerate().for_each(|(r, d)| {
            let nd = sq_dist(bank.row(r), center);
            if nd < *d {
                *d = nd;
            }
        });
        let (best, best_d2) = min_d2
            .par_iter()
            .enumerate()
            .map(|(r, &d)| (r, d))
            .reduce(
                || (usize::MAX, f64::NEG_INFINITY),
                |a, b| {
                    if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
                        b
                    } else {
                        a
                    }
                },
            );
        current = best;
        gain = best_d2.sqrt();
    }
    (picks, gains)
}

/// Keeps `ceil(ratio · M)` rows chosen by greedy k-center; the first row is
/// drawn uniformly from `seed`.
pub fn coreset_select(bank: &MemoryBank, ratio: f64, seed: u64) -> Result<MemoryBank> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "coreset ratio must be in (0, 1], got {ratio}"
        )));
    }
    if ratio == 1.0 {
        return Ok(bank.clone());
    }
    let k = ((ratio * bank.len() as f64).ceil() as usize).clamp(1, bank.len());
    let start = ChaCha8Rng::seed_from_u64(seed).gen_range(0..bank.len());
    let (picks, _) = greedy_k_center(bank, k, start);
    bank.select(&picks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descriptors::Method;

    #[test]
    fn farthest_point_by_hand() {
        let bank = MemoryBank::new(vec![0.0, 1.0, 10.0], 1, Method::Raw).unwrap();
        let (picks, gains) = greedy_k_center(&bank, 2, 0);
        assert_eq!(picks, vec![0, 2]);
        assert_eq!(gains[1], 10.0);
    }

    #[test]
    fn ratio_one_is_identity() {
        let bank = MemoryBank::new((0..40).map(|v| v as f32).collect(), 4, Method::Raw).unwrap();
        assert_eq!(coreset_select(&bank, 1.0, 3).unwrap(), bank);
    }

    #[test]
    fn size_and_bad_ratio() {
        let bank = MemoryBank::new((0..100).map(|v| (v as f32).sin()).collect(), 2, Method::Raw).unwrap();
        assert_eq!(coreset_select(&bank, 0.1, 0).unwrap().len(), 5);
        assert_eq!(coreset_select(&bank, 0.11, 0).unwrap().len(), 6);
        assert!(coreset_select(&bank, 0.0, 0).is_err());
        assert!(coreset_select(&bank, 1.5, 0).is_err());
    }
}

//! Exact k-nearest-neighbour patch scoring by linear scan.
//!
//! A fast f32 pass ranks the bank; every row within a relative margin of
//! the k-th candidate is then re-measured in f64, so the returned distances
//! are those of the true k nearest rows.

use std::collections::hash_map::{Entry, HashMap};

use rayon::prelude::*;

use super::MemoryBank;
use crate::descriptors::PatchFeatureGrid;
use crate::error::{Error, Result};

/// Relative slack covering f32 accumulation error for D ≤ ~10⁴.
const RECHECK_MARGIN: f32 = 1e-3;

/// Per-patch anomaly score: mean Euclidean distance to the `k` nearest bank rows.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchScores {
    pub grid_size: usize,
    pub scores: Vec<f32>,
}

impl PatchScores {
    pub fn new(grid_size: usize, scores: Vec<f32>) -> Result<Self> {
        if scores.len() != grid_size * grid_size {
            return Err(Error::InvalidShape(format!(
                "{} scores for a {grid_size}² grid",
                scores.len()
            )));
        }
        Ok(Self { grid_size, scores })
    }

    pub fn max(&self) -> f32 {
        self.scores.iter().copied().fold(0.0, f32::max)
    }

    pub fn at(&self, i: usize, j: usize) -> f32 {
        self.scores[i * self.grid_size + j]
    }
}

/// Squared f32 distance, or `None` once the running sum exceeds `bound`.
/// The running sum never decreases, so an early exit implies the full sum
/// exceeds `bound` too.
#[inline]
fn bounded_d2(a: &[f32], b: &[f32], bound: f32) -> Option<f32> {
    let chunks_a = a.chunks_exact(8);
    let chunks_b = b.chunks_exact(8);
    let (ra, rb) = (chunks_a.remainder(), chunks_b.remainder());
    let mut total = 0.0f32;
    for (ca, cb) in chunks_a.zip(chunks_b) {
        let mut lanes = [0.0f32; 8];
        for l in 0..8 {
            let d = ca[l] - cb[l];
            lanes[l] = d * d;
        }
        total += lanes.iter().sum::<f32>();
        if total > bound {
            return None;
        }
    }
    for (x, y) in ra.iter().zip(rb) {
        let d = x - y;
        total += d * d;
    }
    (total <= bound).then_some(total)
}

#[inline]
fn exact_d2(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum()
}

/// Reusable buffers for [`KnnIndex::query`].
#[derive(Debug, Default)]
pub struct KnnScratch {
    best: Vec<f32>,
    candidates: Vec<(f32, usize)>,
}

/// Sorted insert of `count` copies of `d`, keeping the `k` smallest values.
fn push_best(best: &mut Vec<f32>, d: f32, count: usize, k: usize) {
    if best.len() == k && d >= best[k - 1] {
        return;
    }
    let at = best.partition_point(|&b| b <= d);
    let copies = count.min(k);
    best.splice(at..at, std::iter::repeat(d).take(copies));
    best.truncate(k);
}

fn bound_of(best: &[f32], k: usize) -> f32 {
    if best.len() < k {
        f32::INFINITY
    } else {
        best[k - 1] * (1.0 + RECHECK_MARGIN) + f32::MIN_POSITIVE
    }
}

/// Bank rows with exact duplicates collapsed into one row and a count.
/// Preprocessed banks hold many identical all-zero patches.
#[derive(Debug, Clone)]
pub struct KnnIndex<'a> {
    bank: &'a MemoryBank,
    unique: Vec<usize>,
    count: Vec<usize>,
}

impl<'a> KnnIndex<'a> {
    pub fn new(bank: &'a MemoryBank) -> Self {
        let mut seen: HashMap<Vec<u32>, usize> = HashMap::new();
        let (mut unique, mut count) = (Vec::new(), Vec::new());
        for (m, row) in bank.rows().enumerate() {
            let key = row.iter().map(|v| v.to_bits()).collect();
            match seen.entry(key) {
                Entry::Occupied(e) => count[*e.get()] += 1,
                Entry::Vacant(e) => {
                    e.insert(unique.len());
                    unique.push(m);
                    count.push(1);
                }
            }
        }
        Self { bank, unique, count }
    }

    pub fn unique_rows(&self) -> usize {
        self.unique.len()
    }

    /// Mean distance from `query` to its `k` nearest bank rows (duplicates
    /// counted), and the index of a nearest row. `warm` bank rows only
    /// tighten the initial pruning bound.
    pub fn query(&self, query: &[f32], k: usize, warm: &[usize], scratch: &mut KnnScratch) -> (f64, usize) {
        let bank = self.bank;
        let KnnScratch { best, candidates } = scratch;
        best.clear();
        candidates.clear();
        for &m in warm {
            if let Some(d) = bounded_d2(bank.row(m), query, bound_of(best, k)) {
                push_best(best, d, 1, k);
            }
        }
        let warm_bound = bound_of(best, k);
        best.clear();
        for (u, &m) in self.unique.iter().enumerate() {
            let bound = warm_bound.min(bound_of(best, k));
            if let Some(d) = bounded_d2(bank.row(m), query, bound) {
                push_best(best, d, self.count[u], k);
                candidates.push((d, u));
            }
        }
        let bound = warm_bound.min(bound_of(best, k));
        let mut exact: Vec<(f64, usize)> = candidates
            .iter()
            .filter(|(d, _)| *d <= bound)
            .map(|&(_, u)| (exact_d2(bank.row(self.unique[u]), query), u))
            .collect();
        exact.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let (mut sum, mut taken) = (0.0f64, 0usize);
        for &(d2, u) in &exact {
            let take = self.count[u].min(k - taken);
            sum += d2.sqrt() * take as f64;
            taken += take;
            if taken == k {
                break;
            }
        }
        (sum / k as f64, self.unique[exact[0].1])
    }
}

/// One-off query; builds a [`KnnIndex`] on every call.
pub fn knn_distance(bank: &MemoryBank, query: &[f32], k: usize) -> f64 {
    KnnIndex::new(bank).query(query, k, &[], &mut KnnScratch::default()).0
}

pub fn score_sample(bank: &MemoryBank, grid: &PatchFeatureGrid, k: usize) -> Result<PatchScores> {
    if grid.dim() != bank.dim() {
        return Err(Error::DimensionMismatch(format!(
            "grid dim {} vs bank dim {}",
            grid.dim(),
            bank.dim()
        )));
    }
    if k == 0 || k > bank.len() {
        return Err(Error::InvalidParameter(format!(
            "k must be in 1..={}, got {k}",
            bank.len()
        )));
    }
    let index = KnnIndex::new(bank);
    let n = grid.num_patches();
    // an uncompressed bank stacks whole grids, so row p + t·n sits at the same position
    let stacked = bank.len() % n == 0;
    let scores = (0..n)
        .into_par_iter()
        .map_init(
            || (KnnScratch::default(), Vec::new(), None::<usize>),
            |(scratch, warm, last), p| {
                warm.clear();
                warm.extend(*last);
                if stacked {
                    let copies = bank.len() / n;
                    let step = copies.div_ceil(32);
                    warm.extend((0..copies).step_by(step).map(|t| p + t * n));
                }
                let (d, nearest) = index.query(grid.patch(p), k, warm, scratch);
                *last = Some(nearest);
                d as f32
            },
        )
        .collect();
    PatchScores::new(grid.grid_size(), scores)
}

//! Brute-force reference implementations. Each one follows the textbook
//! definition directly and shares no code with the library.
#![allow(dead_code)]

use ads3d::io::Mask;
use rand::Rng;

/// Mann–Whitney AUC by comparing every positive with every negative.
pub fn auc(scores: &[f64], labels: &[bool]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (i, &si) in scores.iter().enumerate() {
        if !labels[i] {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] {
                continue;
            }
            pairs += 1.0;
            if si > sj {
                wins += 1.0;
            } else if si == sj {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// 8-connected labelling by union-find, relabelled 1.. in raster order of
/// each component's first pixel.
pub fn components(mask: &Mask) -> (Vec<u32>, usize) {
    let (h, w) = (mask.height, mask.width);
    let mut parent: Vec<usize> = (0..h * w).collect();
    for i in 0..h {
        for j in 0..w {
            if !mask.data[i * w + j] {
                continue;
            }
            for (di, dj) in [(0i64, 1i64), (1, -1), (1, 0), (1, 1)] {
                let (ni, nj) = (i as i64 + di, j as i64 + dj);
                if ni < 0 || nj < 0 || ni >= h as i64 || nj >= w as i64 {
                    continue;
                }
                let k = ni as usize * w + nj as usize;
                if mask.data[k] {
                    let (a, b) = (find(&mut parent, i * w + j), find(&mut parent, k));
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut labels = vec![0u32; h * w];
    let mut root_label = std::collections::HashMap::new();
    for k in 0..h * w {
        if mask.data[k] {
            let r = find(&mut parent, k);
            let next = root_label.len() as u32 + 1;
            labels[k] = *root_label.entry(r).or_insert(next);
        }
    }
    (labels, root_label.len())
}

/// Trapezoid area of a piecewise-linear curve over `[0, limit]`, extended
/// flat past its last point, divided by `limit`.
pub fn area_to_limit(points: &[(f64, f64)], limit: f64) -> f64 {
    let mut area = 0.0;
    for seg in points.windows(2) {
        let ((x0, y0), (x1, y1)) = (seg[0], seg[1]);
        if x0 >= limit {
            break;
        }
        let xe = x1.min(limit);
        if xe <= x0 {
            continue;
        }
        let ye = y0 + (y1 - y0) * (xe - x0) / (x1 - x0);
        area += (xe - x0) * (y0 + ye) / 2.0;
    }
    let (xl, yl) = *points.last().unwrap();
    if xl < limit {
        area += (limit - xl) * yl;
    }
    area / limit
}

/// PRO integrated to `limit`, recomputing FPR and every region overlap
/// from scratch at each distinct threshold. The curve starts at FPR 0 with
/// the overlap of the highest threshold.
pub fn pro(maps: &[Vec<f64>], masks: &[Mask], limit: f64) -> f64 {
    let mut regions: Vec<Vec<(usize, usize)>> = Vec::new();
    let mut negatives = Vec::new();
    for (m, mask) in masks.iter().enumerate() {
        let (labels, count) = components(mask);
        let base = regions.len();
        regions.extend((0..count).map(|_| Vec::new()));
        for (k, &l) in labels.iter().enumerate() {
            if l == 0 {
                negatives.push((m, k));
            } else {
                regions[base + l as usize - 1].push((m, k));
            }
        }
    }
    let mut thresholds: Vec<f64> = maps.iter().flatten().copied().collect();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let mut points = Vec::new();
    for &t in &thresholds {
        let fp = negatives.iter().filter(|&&(m, k)| maps[m][k] >= t).count();
        let overlap: f64 = regions
            .iter()
            .map(|r| r.iter().filter(|&&(m, k)| maps[m][k] >= t).count() as f64 / r.len() as f64)
            .sum::<f64>()
            / regions.len() as f64;
        points.push((fp as f64 / negatives.len() as f64, overlap));
    }
    points.insert(0, (0.0, points[0].1));
    area_to_limit(&points, limit)
}

fn d2(a: [f32; 3], b: [f32; 3]) -> f64 {
    (0..3).map(|i| (a[i] as f64 - b[i] as f64).powi(2)).sum()
}

/// Up to `max_nn` points within `radius` of `q` at positive distance,
/// nearest first, ties by index.
pub fn radius_knn(points: &[[f32; 3]], q: [f32; 3], radius: f32, max_nn: usize) -> Vec<(usize, f64)> {
    let r2 = radius as f64 * radius as f64;
    let mut hits: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, &p)| (d2(p, q), i))
        .filter(|&(d, _)| d > 0.0 && d <= r2)
        .collect();
    hits.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    hits.into_iter().take(max_nn).map(|(d, i)| (i, d.sqrt())).collect()
}

/// DBSCAN from its definition: clusters are connected components of the
/// core graph, numbered by their lowest core index; a border point takes
/// the lowest-numbered cluster with a core within `eps`.
pub fn dbscan(points: &[[f32; 3]], eps: f32, min_points: usize) -> Vec<i32> {
    let n = points.len();
    let r2 = eps as f64 * eps as f64;
    let near: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| d2(points[i], points[j]) <= r2).collect())
        .collect();
    let core: Vec<bool> = near.iter().map(|v| v.len() >= min_points).collect();
    let mut labels = vec![-1i32; n];
    let mut next = 0;
    for s in 0..n {
        if !core[s] || labels[s] >= 0 {
            continue;
        }
        let mut stack = vec![s];
        labels[s] = next;
        while let Some(i) = stack.pop() {
            for &j in &near[i] {
                if core[j] && labels[j] < 0 {
                    labels[j] = next;
                    stack.push(j);
                }
            }
        }
        next += 1;
    }
    for i in 0..n {
        if !core[i] {
            labels[i] = near[i].iter().filter(|&&j| core[j]).map(|&j| labels[j]).min().unwrap_or(-1);
        }
    }
    labels
}

/// Mean Euclidean distance from `q` to its `k` nearest bank rows.
pub fn knn_mean(bank: &[Vec<f32>], q: &[f32], k: usize) -> f64 {
    let mut d: Vec<f64> = bank
        .iter()
        .map(|r| r.iter().zip(q).map(|(&a, &b)| (a as f64 - b as f64).powi(2)).sum::<f64>().sqrt())
        .collect();
    d.sort_by(f64::total_cmp);
    d[..k].iter().sum::<f64>() / k as f64
}

/// Cell means of an H×W×D map on a G×G grid; cell `i` spans rows
/// `⌊iH/G⌋ .. ⌈(i+1)H/G⌉`.
pub fn block_means(dense: &[f32], h: usize, w: usize, dim: usize, g: usize) -> Vec<f32> {
    let lo = |i: usize, n: usize| ((i * n) as f64 / g as f64).floor() as usize;
    let hi = |i: usize, n: usize| (((i + 1) * n) as f64 / g as f64).ceil() as usize;
    let mut out = Vec::with_capacity(g * g * dim);
    for gi in 0..g {
        for gj in 0..g {
            for c in 0..dim {
                let (mut sum, mut n) = (0.0f64, 0usize);
                for r in lo(gi, h)..hi(gi, h) {
                    for s in lo(gj, w)..hi(gj, w) {
                        sum += dense[(r * w + s) * dim + c] as f64;
                        n += 1;
                    }
                }
                out.push((sum / n as f64) as f32);
            }
        }
    }
    out
}

/// 8×8 tiles of an n×n map, tile-major, each tile row-major.
pub fn depth_tiles(data: &[f32], n: usize) -> Vec<f32> {
    let mut out = Vec::new();
    for p in 0..n / 8 {
        for q in 0..n / 8 {
            for a in 0..8 {
                for b in 0..8 {
                    out.push(data[(8 * p + a) * n + 8 * q + b]);
                }
            }
        }
    }
    out
}

/// Random masks with a few rectangles and speckles.
pub fn random_mask<R: Rng>(rng: &mut R, h: usize, w: usize) -> Mask {
    let mut data = vec![false; h * w];
    for _ in 0..rng.gen_range(0..4) {
        let (i0, j0) = (rng.gen_range(0..h), rng.gen_range(0..w));
        let (i1, j1) = ((i0 + rng.gen_range(1..=h / 2 + 1)).min(h), (j0 + rng.gen_range(1..=w / 2 + 1)).min(w));
        for i in i0..i1 {
            for j in j0..j1 {
                data[i * w + j] = true;
            }
        }
    }
    for _ in 0..rng.gen_range(0..=(h * w / 20)) {
        data[rng.gen_range(0..h * w)] = true;
    }
    Mask::new(h, w, data).unwrap()
}

/// Scores correlated with the mask, quantized to `levels` values when
/// given so that ties occur.
pub fn random_map<R: Rng>(rng: &mut R, mask: &Mask, levels: Option<u32>) -> Vec<f64> {
    mask.data
        .iter()
        .map(|&m| {
            let v: f64 = rng.gen::<f64>() + if m { rng.gen_range(0.0..0.8) } else { 0.0 };
            match levels {
                Some(l) => (v * l as f64).floor(),
                None => v,
            }
        })
        .collect()
}

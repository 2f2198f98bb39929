//! Static 3-d tree with hybrid radius + max-nn queries.
//!
//! Distances are evaluated in f64 on the difference of the f32 inputs, so
//! results are invariant under exactly representable translations.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{dist2, PointSet};

const LEAF_SIZE: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

#[derive(Debug, Clone)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: f32, left: usize, right: usize },
}

/// Immutable after construction; queries take `&self`.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    points: Vec<[f32; 3]>,
    perm: Vec<usize>,
    nodes: Vec<Node>,
}

#[derive(PartialEq)]
struct HeapEntry {
    d2: f64,
    index: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d2
            .total_cmp(&other.d2)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl SpatialIndex {
    pub fn build(ps: &PointSet) -> Self {
        Self::from_points(ps.points.clone())
    }

    pub fn from_points(points: Vec<[f32; 3]>) -> Self {
        let mut index = SpatialIndex {
            perm: (0..points.len()).collect(),
            points,
            nodes: Vec::new(),
        };
        if !index.points.is_empty() {
            index.build_node(0, index.points.len());
        }
        index
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[[f32; 3]] {
        &self.points
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let mut lo = [f32::INFINITY; 3];
        let mut hi = [f32::NEG_INFINITY; 3];
        for &k in &self.perm[start..end] {
            let p = self.points[k];
            for a in 0..3 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        let axis = (0..3)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
            .unwrap();
        if hi[axis] <= lo[axis] {
            // all coincident
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let mid = start + (end - start) / 2;
        let points = &self.points;
        self.perm[start..end]
            .select_nth_unstable_by(mid - start, |&x, &y| points[x][axis].total_cmp(&points[y][axis]));
        let value = self.points[self.perm[mid]][axis];
        self.nodes.push(Node::Split {
            axis,
            value,
            left: 0,
            right: 0,
        });
        let left = self.build_node(start, mid);
        let right = self.build_node(mid, end);
        if let Node::Split {
            left: l, right: r, ..
        } = &mut self.nodes[id]
        {
            *l = left;
            *r = right;
        }
        id
    }

    /// Up to `max_nn` nearest points within `radius` of `q`, sorted by
    /// ascending distance (ties by index). Points coincident with `q` are
    /// excluded, so querying with a member point never returns itself.
    pub fn radius_knn(&self, q: [f32; 3], radius: f32, max_nn: usize) -> Vec<Neighbor> {
        self.knn_filtered(q, radius, max_nn, |_, d2| d2 > 0.0)
    }

    /// Like [`radius_knn`](Self::radius_knn) for member `i`, excluding only
    /// `i` itself (coincident duplicates are kept).
    pub fn neighbors_of(&self, i: usize, radius: f32, max_nn: usize) -> Vec<Neighbor> {
        self.knn_filtered(self.points[i], radius, max_nn, |k, _| k != i)
    }

    fn knn_filtered(
        &self,
        q: [f32; 3],
        radius: f32,
        max_nn: usize,
        keep: impl Fn(usize, f64) -> bool,
    ) -> Vec<Neighbor> {
        if self.points.is_empty() || max_nn == 0 || !(radius > 0.0) {
            return Vec::new();
        }
        let r = radius as f64;
        let r2 = r * r;
        let mut heap: BinaryHeap<HeapEntry> = BinaryHeap::with_capacity(max_nn + 1);
        let mut stack = vec![(0usize, 0.0f64)];
        while let Some((node, plane_d2)) = stack.pop() {
            let bound = if heap.len() == max_nn {
                heap.peek().unwrap().d2.min(r2)
            } else {
                r2
            };
            if plane_d2 > bound {
                continue;
            }
            match &self.nodes[node] {
                Node::Leaf { start, end } => {
                    for &k in &self.perm[*start..*end] {
                        let d2 = dist2(self.points[k], q);
                        if d2 > r2 || !keep(k, d2) {
                            continue;
                        }
                        let entry = HeapEntry { d2, index: k };
                        if heap.len() < max_nn {
                            heap.push(entry);
                        } else if entry < *heap.peek().unwrap() {
                            heap.pop();
                            heap.push(entry);
                        }
                    }
                }
                Node::Split {
                    axis,
                    value,
                    left,
                    right,
                } => {
                    let diff = q[*axis] as f64 - *value as f64;
                    let (near, far) = if diff < 0.0 {
                        (*left, *right)
                    } else {
                        (*right, *left)
                    };
                    // push far first so near is explored first
                    stack.push((far, diff * diff));
                    stack.push((near, 0.0));
                }
            }
        }
        heap.into_sorted_vec()
            .into_iter()
            .map(|e| Neighbor {
                index: e.index,
                distance: e.d2.sqrt(),
            })
            .collect()
    }

    /// Every point within `radius` of `q`, including coincident ones, in
    /// unspecified order.
    pub fn radius_all(&self, q: [f32; 3], radius: f32, out: &mut Vec<usize>) {
        out.clear();
        if self.points.is_empty() {
            return;
        }
        let r2 = radius as f64 * radius as f64;
        let mut stack = vec![0usize];
        while let Some(node) = stack.pop() {
            match &self.nodes[node] {
                Node::Leaf { start, end } => {
                    for &k in &self.perm[*start..*end] {
                        if dist2(self.points[k], q) <= r2 {
                            out.push(k);
                        }
                    }
                }
                Node::Split {
                    axis,
                    value,
                    left,
                    right,
                } => {
                    let diff = q[*axis] as f64 - *value as f64;
                    if diff < 0.0 {
                        stack.push(*left);
                        if diff * diff <= r2 {
                            stack.push(*right);
                        }
                    } else {
                        stack.push(*right);
                        if diff * diff <= r2 {
                            stack.push(*left);
                        }
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute(points: &[[f32; 3]], q: [f32; 3], radius: f32, max_nn: usize) -> Vec<(usize, f64)> {
        let r = radius as f64;
        let mut all: Vec<(usize, f64)> = points
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let d = (0..3)
                    .map(|a| (p[a] as f64 - q[a] as f64).powi(2))
                    .sum::<f64>();
                (k, d)
            })
            .filter(|&(_, d2)| d2 > 0.0 && d2 <= r * r)
            .collect();
        all.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        all.truncate(max_nn);
        all.into_iter().map(|(k, d2)| (k, d2.sqrt())).collect()
    }

    #[test]
    fn excludes_query_member() {
        let idx = SpatialIndex::from_points(vec![[0.0, 0.0, 0.1], [0.0, 0.0, 0.2], [0.0, 0.0, 0.9]]);
        let res = idx.radius_knn([0.0, 0.0, 0.1], 0.15, 5);
        assert_eq!(res.len(), 1);
        assert_eq!(res[0].index, 1);
    }

    #[test]
    fn max_nn_one_returns_closest() {
        let idx = SpatialIndex::from_points(vec![[0.3, 0.0, 0.0], [0.1, 0.0, 0.0], [0.2, 0.0, 0.0]]);
        let res = idx.radius_knn([0.0, 0.0, 0.0], 1.0, 1);
        assert_eq!(res.len(), 1);
        assert_eq!(res[0].index, 1);
    }

    #[test]
    fn empty_set_gives_empty_result() {
        let idx = SpatialIndex::from_points(vec![]);
        assert!(idx.radius_knn([0.0; 3], 1.0, 3).is_empty());
    }

    #[test]
    fn matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let points: Vec<[f32; 3]> = (0..1000).map(|_| [rng.gen(), rng.gen(), rng.gen()]).collect();
        let idx = SpatialIndex::from_points(points.clone());
        for t in 0..200 {
            let q = if t % 2 == 0 {
                points[rng.gen_range(0..points.len())]
            } else {
                [rng.gen(), rng.gen(), rng.gen()]
            };
            let radius = rng.gen_range(0.01f32..0.4);
            let max_nn = rng.gen_range(1..60);
            let got: Vec<(usize, f64)> = idx
                .radius_knn(q, radius, max_nn)
                .into_iter()
                .map(|n| (n.index, n.distance))
                .collect();
            assert_eq!(got, brute(&points, q, radius, max_nn));
        }
    }

    #[test]
    fn radius_all_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let points: Vec<[f32; 3]> = (0..500).map(|_| [rng.gen(), rng.gen(), 0.0]).collect();
        let idx = SpatialIndex::from_points(points.clone());
        let mut out = Vec::new();
        for k in 0..50 {
            idx.radius_all(points[k], 0.1, &mut out);
            out.sort();
            let r = 0.1f32 as f64;
            let expected: Vec<usize> = (0..points.len())
                .filter(|&m| dist2(points[m], points[k]) <= r * r)
                .collect();
            assert_eq!(out, expected);
            assert!(out.contains(&k));
        }
    }

    #[test]
    fn duplicates_do_not_break_build() {
        let idx = SpatialIndex::from_points(vec![[0.5; 3]; 100]);
        assert_eq!(idx.neighbors_of(3, 0.1, 200).len(), 99);
        assert!(idx.radius_knn([0.5; 3], 0.1, 10).is_empty());
    }
}

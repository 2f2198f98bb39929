use std::collections::VecDeque;

use super::SpatialIndex;

pub const NOISE: i32 = -1;
const UNVISITED: i32 = i32::MIN;

/// Density-based clustering. A point is core when at least `min_points`
/// points (itself included) lie within `eps`. Cluster ids follow the index
/// of each cluster's first core point; border points join the first
/// cluster that reaches them. Noise is labeled [`NOISE`].
pub fn dbscan(points: &[[f32; 3]], eps: f32, min_points: usize) -> Vec<i32> {
    let index = SpatialIndex::from_points(points.to_vec());
    dbscan_indexed(&index, eps, min_points)
}

pub fn dbscan_indexed(index: &SpatialIndex, eps: f32, min_points: usize) -> Vec<i32> {
    let points = index.points();
    let mut labels = vec![UNVISITED; points.len()];
    let mut next_cluster = 0i32;
    let mut neighbors = Vec::new();
    let mut queue = VecDeque::new();
    for i in 0..points.len() {
        if labels[i] != UNVISITED {
            continue;
        }
        index.radius_all(points[i], eps, &mut neighbors);
        if neighbors.len() < min_points {
            labels[i] = NOISE;
            continue;
        }
        let cluster = next_cluster;
        next_cluster += 1;
        labels[i] = cluster;
        queue.clear();
        queue.extend(neighbors.iter().copied());
        while let Some(j) = queue.pop_front() {
            if labels[j] == NOISE {
                labels[j] = cluster;
                continue;
            }
            if labels[j] != UNVISITED {
                continue;
            }
            labels[j] = cluster;
            index.radius_all(points[j], eps, &mut neighbors);
            if neighbors.len() >= min_points {
                queue.extend(neighbors.iter().copied().filter(|&k| labels[k] == UNVISITED || labels[k] == NOISE));
            }
        }
    }
    labels
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_separated_blobs() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let eps = 0.006f32;
        let mut points = Vec::new();
        for center in [0.0f32, 10.0 * eps + 0.004] {
            for _ in 0..50 {
                points.push([center + rng.gen_range(0.0..0.002), rng.gen_range(0.0..0.002), 0.5]);
            }
        }
        let labels = dbscan(&points, eps, 30);
        assert!(labels[..50].iter().all(|&l| l == 0));
        assert!(labels[50..].iter().all(|&l| l == 1));
    }

    #[test]
    fn far_point_is_noise() {
        let mut points = vec![[0.0, 0.0, 0.0], [0.001, 0.0, 0.0], [0.0, 0.001, 0.0]];
        points.push([1.0, 1.0, 1.0]);
        let labels = dbscan(&points, 0.006, 3);
        assert_eq!(labels, vec![0, 0, 0, NOISE]);
    }

    #[test]
    fn empty_input() {
        assert!(dbscan(&[], 0.1, 3).is_empty());
    }
}

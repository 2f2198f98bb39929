use std::collections::VecDeque;

use crate::io::Mask;

/// 8-connected components of a mask. `labels` holds 0 for background and
/// `1..=count` for components, numbered by first pixel in raster order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentSet {
    pub height: usize,
    pub width: usize,
    pub labels: Vec<u32>,
    pub count: usize,
}

impl ComponentSet {
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.count];
        for &l in &self.labels {
            if l > 0 {
                sizes[l as usize - 1] += 1;
            }
        }
        sizes
    }
}

pub fn connected_components(mask: &Mask) -> ComponentSet {
    let (h, w) = (mask.height, mask.width);
    let mut labels = vec![0u32; h * w];
    let mut count = 0u32;
    let mut queue = VecDeque::new();
    for start in 0..h * w {
        if !mask.data[start] || labels[start] != 0 {
            continue;
        }
        count += 1;
        labels[start] = count;
        queue.push_back(start);
        while let Some(k) = queue.pop_front() {
            let (i, j) = ((k / w) as isize, (k % w) as isize);
            for di in -1..=1 {
                for dj in -1..=1 {
                    let (ni, nj) = (i + di, j + dj);
                    if ni < 0 || nj < 0 || ni >= h as isize || nj >= w as isize {
                        continue;
                    }
                    let nk = ni as usize * w + nj as usize;
                    if mask.data[nk] && labels[nk] == 0 {
                        labels[nk] = count;
                        queue.push_back(nk);
                    }
                }
            }
        }
    }
    ComponentSet {
        height: h,
        width: w,
        labels,
        count: count as usize,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_pixels_connect() {
        let m = Mask::new(2, 2, vec![true, false, false, true]).unwrap();
        let c = connected_components(&m);
        assert_eq!(c.count, 1);
        assert_eq!(c.labels, vec![1, 0, 0, 1]);
    }

    #[test]
    fn empty_mask() {
        assert_eq!(connected_components(&Mask::empty(3, 3)).count, 0);
    }

    #[test]
    fn raster_order_numbering() {
        let m = Mask::new(
            3,
            4,
            vec![
                false, false, false, true, //
                true, false, false, false, //
                true, false, false, true,
            ],
        )
        .unwrap();
        let c = connected_components(&m);
        assert_eq!(c.count, 3);
        assert_eq!(c.labels, vec![0, 0, 0, 1, 2, 0, 0, 0, 2, 0, 0, 3]);
        assert_eq!(c.sizes(), vec![1, 2, 1]);
    }
}

use serde::{Deserialize, Serialize};

use super::BinaryMask;

/// Axis-aligned box; `(x, y)` is the top-left pixel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl BoundingBox {
    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x && y >= self.y && x < self.x + self.w && y < self.y + self.h
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Component {
    pub bounding_box: BoundingBox,
    /// Pixel count.
    pub area: usize,
}

/// 8-connected components of the positive pixels, dropping those with fewer
/// than `min_area` pixels. Sorted by box origin `(y, x)`.
pub fn connected_components(mask: &BinaryMask, min_area: usize) -> Vec<Component> {
    let (w, h) = (mask.width(), mask.height());
    let bits = mask.bits();
    let mut visited = vec![false; w * h];
    let mut stack = Vec::new();
    let mut out = Vec::new();

    for start in 0..w * h {
        if !bits[start] || visited[start] {
            continue;
        }
        visited[start] = true;
        stack.push(start);
        let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
        let mut area = 0;
        while let Some(i) = stack.pop() {
            let (x, y) = (i % w, i / w);
            area += 1;
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
            for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                    let j = ny * w + nx;
                    if bits[j] && !visited[j] {
                        visited[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        if area >= min_area {
            out.push(Component {
                bounding_box: BoundingBox {
                    x: x0,
                    y: y0,
                    w: x1 - x0 + 1,
                    h: y1 - y0 + 1,
                },
                area,
            });
        }
    }
    out.sort_by_key(|c| {
        let b = c.bounding_box;
        (b.y, b.x, b.h, b.w, c.area)
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn blocks(w: usize, h: usize, rects: &[(usize, usize, usize, usize)]) -> BinaryMask {
        BinaryMask::from_fn(w, h, |x, y| {
            rects
                .iter()
                .any(|&(rx, ry, rw, rh)| x >= rx && x < rx + rw && y >= ry && y < ry + rh)
        })
        .unwrap()
    }

    #[test]
    fn empty_mask_has_no_components() {
        assert!(connected_components(&BinaryMask::empty(8, 8).unwrap(), 0).is_empty());
    }

    #[test]
    fn two_disjoint_blocks() {
        let m = blocks(16, 16, &[(10, 1, 4, 4), (1, 8, 4, 4)]);
        let cc = connected_components(&m, 0);
        assert_eq!(cc.len(), 2);
        assert_eq!(cc[0].bounding_box, BoundingBox { x: 10, y: 1, w: 4, h: 4 });
        assert_eq!(cc[1].bounding_box, BoundingBox { x: 1, y: 8, w: 4, h: 4 });
        assert!(cc.iter().all(|c| c.area == 16));
    }

    #[test]
    fn area_filter() {
        let m = blocks(8, 8, &[(2, 2, 4, 4)]);
        assert!(connected_components(&m, 17).is_empty());
        assert_eq!(connected_components(&m, 16).len(), 1);
    }

    #[test]
    fn diagonal_neighbors_connect() {
        let m = BinaryMask::from_fn(4, 4, |x, y| x == y).unwrap();
        let cc = connected_components(&m, 0);
        assert_eq!(cc.len(), 1);
        assert_eq!(cc[0].area, 4);
    }

    /// Reference labelling: repeated 8-neighbor label propagation until fixpoint.
    fn oracle_count(m: &BinaryMask) -> usize {
        let (w, h) = (m.width(), m.height());
        let mut label: Vec<usize> = (0..w * h).collect();
        loop {
            let mut changed = false;
            for y in 0..h {
                for x in 0..w {
                    if !m.get(x, y) {
                        continue;
                    }
                    for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                        for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                            if m.get(nx, ny) && label[ny * w + nx] < label[y * w + x] {
                                label[y * w + x] = label[ny * w + nx];
                                changed = true;
                            }
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let mut roots: Vec<usize> = (0..w * h).filter(|&i| m.bits()[i]).map(|i| label[i]).collect();
        roots.sort_unstable();
        roots.dedup();
        roots.len()
    }

    proptest! {
        #[test]
        fn areas_sum_to_positive_count(w in 1usize..20, h in 1usize..20, seed in proptest::collection::vec(any::<bool>(), 400)) {
            let m = BinaryMask::from_fn(w, h, |x, y| seed[y * 20 + x]).unwrap();
            let cc = connected_components(&m, 0);
            prop_assert_eq!(cc.iter().map(|c| c.area).sum::<usize>(), m.count());
            prop_assert_eq!(cc.len(), oracle_count(&m));
            for pair in cc.windows(2) {
                let (a, b) = (pair[0].bounding_box, pair[1].bounding_box);
                prop_assert!((a.y, a.x) <= (b.y, b.x));
            }
        }
    }
}

//! Binary dilation and erosion.
//!
//! Dilation is the Minkowski sum `{a + b}` clipped to the image, so pixels
//! outside the raster never contribute. Erosion is its adjoint
//! `{p : p + b ∈ A for every in-bounds p + b}`: neighbors that fall outside
//! the raster are skipped instead of counting as background. With that
//! pairing a closing never removes pixels, including along the border.

use super::{BinaryMask, StructuringElement};

pub fn dilate(mask: &BinaryMask, se: &StructuringElement, iterations: usize) -> BinaryMask {
    repeat(mask, iterations, |m| {
        if se.is_full_rect() {
            rect_pass(m, se, Op::Dilate)
        } else {
            generic_pass(m, se, Op::Dilate)
        }
    })
}

pub fn erode(mask: &BinaryMask, se: &StructuringElement, iterations: usize) -> BinaryMask {
    repeat(mask, iterations, |m| {
        if se.is_full_rect() {
            rect_pass(m, se, Op::Erode)
        } else {
            generic_pass(m, se, Op::Erode)
        }
    })
}

/// `iterations` dilations followed by as many erosions.
pub fn close(mask: &BinaryMask, se: &StructuringElement, iterations: usize) -> BinaryMask {
    erode(&dilate(mask, se, iterations), se, iterations)
}

/// `iterations` erosions followed by as many dilations.
pub fn open(mask: &BinaryMask, se: &StructuringElement, iterations: usize) -> BinaryMask {
    dilate(&erode(mask, se, iterations), se, iterations)
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub(crate) enum Op {
    Dilate,
    Erode,
}

fn repeat(mask: &BinaryMask, iterations: usize, step: impl Fn(&BinaryMask) -> BinaryMask) -> BinaryMask {
    let mut current = mask.clone();
    for _ in 0..iterations {
        current = step(&current);
    }
    current
}

pub(crate) fn generic_pass(mask: &BinaryMask, se: &StructuringElement, op: Op) -> BinaryMask {
    let (w, h) = (mask.width() as isize, mask.height() as isize);
    let offsets: Vec<(isize, isize)> = se.offsets().collect();
    BinaryMask::from_fn(mask.width(), mask.height(), |x, y| {
        let (x, y) = (x as isize, y as isize);
        match op {
            Op::Dilate => offsets.iter().any(|&(dy, dx)| {
                let (sx, sy) = (x - dx, y - dy);
                sx >= 0 && sy >= 0 && sx < w && sy < h && mask.get(sx as usize, sy as usize)
            }),
            Op::Erode => offsets.iter().all(|&(dy, dx)| {
                let (sx, sy) = (x + dx, y + dy);
                sx < 0 || sy < 0 || sx >= w || sy >= h || mask.get(sx as usize, sy as usize)
            }),
        }
    })
    .expect("same dimensions as input")
}

/// Separable pass for full rectangular footprints: a horizontal segment
/// followed by a vertical one, each evaluated with prefix counts.
fn rect_pass(mask: &BinaryMask, se: &StructuringElement, op: Op) -> BinaryMask {
    let (ar, ac) = se.anchor();
    let (dx0, dx1) = (-(ac as isize), (se.width() - 1 - ac) as isize);
    let (dy0, dy1) = (-(ar as isize), (se.height() - 1 - ar) as isize);
    let (w, h) = (mask.width(), mask.height());

    let mut horizontal = vec![false; w * h];
    let mut prefix = vec![0usize; w.max(h) + 1];
    for y in 0..h {
        let row = &mask.bits()[y * w..(y + 1) * w];
        line_pass(row.iter().copied(), w, dx0, dx1, op, &mut prefix, |x, v| {
            horizontal[y * w + x] = v
        });
    }
    let mut out = vec![false; w * h];
    for x in 0..w {
        let column = (0..h).map(|y| horizontal[y * w + x]);
        line_pass(column, h, dy0, dy1, op, &mut prefix, |y, v| out[y * w + x] = v);
    }
    BinaryMask::new(w, h, out).expect("same dimensions as input")
}

fn line_pass(
    line: impl Iterator<Item = bool>,
    len: usize,
    d0: isize,
    d1: isize,
    op: Op,
    prefix: &mut [usize],
    mut emit: impl FnMut(usize, bool),
) {
    prefix[0] = 0;
    for (i, v) in line.enumerate() {
        prefix[i + 1] = prefix[i] + usize::from(v);
    }
    let n = len as isize;
    for i in 0..n {
        // dilation reads i - d for d in [d0, d1]; erosion reads i + d
        let (lo, hi) = match op {
            Op::Dilate => (i - d1, i - d0),
            Op::Erode => (i + d0, i + d1),
        };
        let lo = lo.max(0);
        let hi = hi.min(n - 1);
        let value = if lo > hi {
            op == Op::Erode
        } else {
            let count = prefix[hi as usize + 1] - prefix[lo as usize];
            match op {
                Op::Dilate => count > 0,
                Op::Erode => count == (hi - lo + 1) as usize,
            }
        };
        emit(i as usize, value);
    }
}

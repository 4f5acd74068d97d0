use super::{BinaryMask, GrayImage, ImageTile, ImagingError};

/// Luma conversion with weights 0.299/0.587/0.114, rounded to nearest.
pub fn to_grayscale(img: &ImageTile) -> GrayImage {
    let pixels = img.pixels().map(luma).collect();
    GrayImage::new(img.width(), img.height(), pixels).expect("dimensions come from a valid tile")
}

/// Rounded luma values as reals, row-major.
pub(crate) fn luma_plane(img: &ImageTile) -> Vec<f64> {
    img.pixels().map(|p| f64::from(luma(p))).collect()
}

#[inline]
pub(crate) fn luma([r, g, b]: [u8; 3]) -> u8 {
    let y = 0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b);
    y.round().clamp(0.0, 255.0) as u8
}

/// Otsu threshold: the `t` maximizing between-class variance of the split
/// `{v <= t}` vs `{v > t}`. Ties resolve to the smallest `t`.
pub fn otsu_threshold(img: &GrayImage) -> Result<u8, ImagingError> {
    let mut hist = [0u64; 256];
    for &v in img.as_raw() {
        hist[v as usize] += 1;
    }
    otsu_threshold_histogram(&hist)
}

/// Otsu on a precomputed 256-bin histogram.
///
/// Comparisons are exact: the between-class variance at `t` is proportional
/// to `q² / (n0·n1)` with `q = N·S0 − n0·S`, and candidates are compared by
/// integer cross-multiplication.
pub fn otsu_threshold_histogram(hist: &[u64; 256]) -> Result<u8, ImagingError> {
    let total: u64 = hist.iter().sum();
    let sum: u128 = hist
        .iter()
        .enumerate()
        .map(|(v, &c)| v as u128 * c as u128)
        .sum();
    if total == 0 || hist.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(ImagingError::ConstantImage);
    }

    let mut best: Option<(u8, Score)> = None;
    let mut n0: u64 = 0;
    let mut s0: u128 = 0;
    for (t, &count) in hist.iter().enumerate().take(255) {
        n0 += count;
        s0 += t as u128 * count as u128;
        let n1 = total - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let lhs = total as u128 * s0;
        let rhs = n0 as u128 * sum;
        // both sides fit easily for any image that fits in memory
        let q = lhs.abs_diff(rhs);
        let score = Score {
            q,
            den: n0 as u128 * n1 as u128,
        };
        match &best {
            Some((_, b)) if !score.greater_than(b) => {}
            _ => best = Some((t as u8, score)),
        }
    }
    best.map(|(t, _)| t).ok_or(ImagingError::ConstantImage)
}

/// Between-class variance up to a positive constant: `q² / den`.
struct Score {
    q: u128,
    den: u128,
}

impl Score {
    fn greater_than(&self, other: &Score) -> bool {
        // q1² · d2 > q2² · d1, evaluated in 256-bit arithmetic
        let a = mul_wide(mul_wide_low(self.q, self.q), other.den);
        let b = mul_wide(mul_wide_low(other.q, other.q), self.den);
        a > b
    }
}

fn mul_wide_low(a: u128, b: u128) -> U256 {
    mul_wide(U256 { hi: 0, lo: a }, b)
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct U256 {
    hi: u128,
    lo: u128,
}

/// Multiplies a 256-bit value by a 128-bit value, panicking on overflow
/// past 256 bits (not reachable for pixel counts below 2^40).
fn mul_wide(a: U256, b: u128) -> U256 {
    let (lo_hi, lo_lo) = mul_128(a.lo, b);
    let (hi_hi, hi_lo) = mul_128(a.hi, b);
    assert!(hi_hi == 0, "otsu score overflow");
    let (hi, carry) = lo_hi.overflowing_add(hi_lo);
    assert!(!carry, "otsu score overflow");
    U256 { hi, lo: lo_lo }
}

/// Full 128×128 → 256-bit product as (high, low).
fn mul_128(a: u128, b: u128) -> (u128, u128) {
    const MASK: u128 = u64::MAX as u128;
    let (a1, a0) = (a >> 64, a & MASK);
    let (b1, b0) = (b >> 64, b & MASK);
    let p00 = a0 * b0;
    let p01 = a0 * b1;
    let p10 = a1 * b0;
    let p11 = a1 * b1;
    let mid = (p00 >> 64) + (p01 & MASK) + (p10 & MASK);
    let lo = (p00 & MASK) | (mid << 64);
    let hi = p11 + (p01 >> 64) + (p10 >> 64) + (mid >> 64);
    (hi, lo)
}

/// Sets a bit where `pixel > t` (`keep_above`) or `pixel <= t` otherwise.
pub fn threshold_mask(img: &GrayImage, t: u8, keep_above: bool) -> BinaryMask {
    let bits = img
        .as_raw()
        .iter()
        .map(|&v| if keep_above { v > t } else { v <= t })
        .collect();
    BinaryMask::new(img.width(), img.height(), bits).expect("dimensions come from a valid image")
}

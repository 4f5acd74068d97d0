use std::collections::HashSet;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AoiPair, PreprocessError};
use crate::imaging::BinaryMask;

/// Rejection-sampling budget per requested patch.
pub const MAX_ATTEMPTS_PER_PATCH: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarity::Positive => "positive",
            Polarity::Negative => "negative",
        })
    }
}

/// Square patch at `(x, y)`; always fully inside its source image.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchSpec {
    pub x: usize,
    pub y: usize,
    pub size: usize,
    pub polarity: Polarity,
}

impl PatchSpec {
    pub fn center(&self) -> (usize, usize) {
        (self.x + self.size / 2, self.y + self.size / 2)
    }
}

/// Draws `count_per_class` distinct positive patches followed by as many
/// negative ones. A patch belongs to a class when its center pixel lies in
/// that class's region.
pub fn sample_patches(
    aoi: &AoiPair,
    count_per_class: usize,
    size: usize,
    seed: u64,
) -> Result<Vec<PatchSpec>, PreprocessError> {
    let mut out = Vec::with_capacity(2 * count_per_class);
    for (stream, polarity, mask) in [
        (0, Polarity::Positive, &aoi.positive),
        (1, Polarity::Negative, &aoi.negative),
    ] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        out.extend(sample_class(mask, polarity, count_per_class, size, &mut rng)?);
    }
    Ok(out)
}

fn sample_class(
    mask: &BinaryMask,
    polarity: Polarity,
    count: usize,
    size: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<PatchSpec>, PreprocessError> {
    let insufficient = |found| PreprocessError::InsufficientArea {
        polarity,
        needed: count,
        found,
        size,
    };
    if count == 0 {
        return Ok(Vec::new());
    }
    if size == 0 || size > mask.width() || size > mask.height() {
        return Err(insufficient(0));
    }
    let (max_x, max_y) = (mask.width() - size, mask.height() - size);
    // origins whose center falls in the region; fail fast instead of
    // exhausting the attempt budget when there are too few
    let half = size / 2;
    let available = (0..=max_y)
        .map(|y| (0..=max_x).filter(|&x| mask.get(x + half, y + half)).count())
        .sum::<usize>();
    if available < count {
        return Err(insufficient(available));
    }
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count.saturating_mul(MAX_ATTEMPTS_PER_PATCH) {
        let x = rng.random_range(0..=max_x);
        let y = rng.random_range(0..=max_y);
        let spec = PatchSpec { x, y, size, polarity };
        let (cx, cy) = spec.center();
        if mask.get(cx, cy) && seen.insert((x, y)) {
            out.push(spec);
            if out.len() == count {
                return Ok(out);
            }
        }
    }
    Err(insufficient(out.len()))
}

//! Overlapping tile grids, tile extraction, overlap-blended stitching and
//! seam diagnostics.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PreprocessError;
use crate::imaging::{to_grayscale, ImageTile};

pub const DEFAULT_TILE: usize = 256;
pub const DEFAULT_OVERLAP: usize = 192;

/// Sliding-window layout over a `width × height` image. Origins are listed
/// row by row, left to right.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileGrid {
    pub width: usize,
    pub height: usize,
    pub tile: usize,
    pub overlap: usize,
    pub origins: Vec<(usize, usize)>,
}

/// Origins step by `tile - overlap`; the last row and column are pulled back
/// so their tiles end exactly at the image edge.
pub fn make_grid(width: usize, height: usize, tile: usize, overlap: usize) -> Result<TileGrid, PreprocessError> {
    if tile == 0 || overlap >= tile {
        return Err(PreprocessError::InvalidGrid(format!(
            "tile {tile} must be positive and larger than overlap {overlap}"
        )));
    }
    if width < tile || height < tile {
        return Err(PreprocessError::ImageSmallerThanTile { width, height, tile });
    }
    let xs = axis_origins(width, tile, tile - overlap);
    let ys = axis_origins(height, tile, tile - overlap);
    let origins = ys.iter().flat_map(|&y| xs.iter().map(move |&x| (x, y))).collect();
    Ok(TileGrid {
        width,
        height,
        tile,
        overlap,
        origins,
    })
}

fn axis_origins(len: usize, tile: usize, stride: usize) -> Vec<usize> {
    let last = len - tile;
    let mut out: Vec<usize> = (0..last).step_by(stride).collect();
    out.push(last);
    out
}

impl TileGrid {
    /// Checks that the grid is exactly what [`make_grid`] produces for its
    /// parameters, e.g. after loading it from JSON.
    pub fn validate(&self) -> Result<(), PreprocessError> {
        let expected = make_grid(self.width, self.height, self.tile, self.overlap)?;
        if expected.origins != self.origins {
            return Err(PreprocessError::InvalidGrid(
                "origins do not match tile/overlap/size".into(),
            ));
        }
        Ok(())
    }

    pub fn x_origins(&self) -> Vec<usize> {
        let mut xs: Vec<usize> = self.origins.iter().map(|o| o.0).collect();
        xs.sort_unstable();
        xs.dedup();
        xs
    }

    pub fn y_origins(&self) -> Vec<usize> {
        let mut ys: Vec<usize> = self.origins.iter().map(|o| o.1).collect();
        ys.sort_unstable();
        ys.dedup();
        ys
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("grid serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, PreprocessError> {
        let grid: TileGrid =
            serde_json::from_str(text).map_err(|e| PreprocessError::InvalidGrid(e.to_string()))?;
        grid.validate()?;
        Ok(grid)
    }
}

/// Tiles keyed by their top-left origin.
pub type PlacedTiles = Vec<((usize, usize), ImageTile)>;

/// Cuts one tile per grid origin, in grid order.
pub fn extract_tiles(img: &ImageTile, grid: &TileGrid) -> Result<PlacedTiles, PreprocessError> {
    if img.width() != grid.width || img.height() != grid.height {
        return Err(PreprocessError::InvalidGrid(format!(
            "grid is {}x{}, image is {}x{}",
            grid.width,
            grid.height,
            img.width(),
            img.height()
        )));
    }
    grid.origins
        .iter()
        .map(|&(x, y)| Ok(((x, y), img.crop(x, y, grid.tile, grid.tile)?)))
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Blend {
    /// Every covering tile counts equally.
    #[default]
    Average,
    /// Weights fall off linearly from the tile center to 1 at its edge.
    Feather,
}

/// Reassembles tiles into a `grid.width × grid.height` image.
///
/// Accumulation is integer-valued and each output row is produced
/// independently, so the result is identical for any thread count.
pub fn stitch(
    tiles: &[((usize, usize), ImageTile)],
    grid: &TileGrid,
    blend: Blend,
) -> Result<ImageTile, PreprocessError> {
    let t = grid.tile;
    let mut by_origin: BTreeMap<(usize, usize), &ImageTile> = BTreeMap::new();
    let on_grid: std::collections::HashSet<_> = grid.origins.iter().copied().collect();
    for (origin, tile) in tiles {
        if !on_grid.contains(origin) || by_origin.insert(*origin, tile).is_some() {
            return Err(PreprocessError::UnexpectedTile(*origin));
        }
        if tile.width() != t || tile.height() != t {
            return Err(PreprocessError::SizeMismatch {
                origin: *origin,
                got_w: tile.width(),
                got_h: tile.height(),
                tile: t,
            });
        }
    }
    let missing: Vec<_> = grid.origins.iter().filter(|o| !by_origin.contains_key(o)).copied().collect();
    if !missing.is_empty() {
        return Err(PreprocessError::MissingTile(missing));
    }

    let weights: Vec<u64> = (0..t)
        .map(|i| match blend {
            Blend::Average => 1,
            Blend::Feather => (i + 1).min(t - i) as u64,
        })
        .collect();

    // tiles grouped by row origin so each output row only visits its band
    let mut rows: BTreeMap<usize, Vec<(usize, &ImageTile)>> = BTreeMap::new();
    for (&(x, y), tile) in &by_origin {
        rows.entry(y).or_default().push((x, tile));
    }
    let bands: Vec<(usize, Vec<(usize, &ImageTile)>)> = rows.into_iter().collect();

    let width = grid.width;
    let mut out = vec![0u8; width * grid.height * 3];
    out.par_chunks_mut(width * 3).enumerate().for_each(|(y, row)| {
        let mut sums = vec![[0u64; 3]; width];
        let mut wsum = vec![0u64; width];
        for (y0, band) in &bands {
            if y < *y0 || y >= y0 + t {
                continue;
            }
            let ty = y - y0;
            for &(x0, tile) in band {
                for tx in 0..t {
                    let w = weights[ty] * weights[tx];
                    let px = tile.get(tx, ty);
                    let acc = &mut sums[x0 + tx];
                    for c in 0..3 {
                        acc[c] += w * u64::from(px[c]);
                    }
                    wsum[x0 + tx] += w;
                }
            }
        }
        for x in 0..width {
            for c in 0..3 {
                row[x * 3 + c] = div_round_half_even(sums[x][c], wsum[x]) as u8;
            }
        }
    });
    Ok(ImageTile::new(grid.width, grid.height, out)?)
}

fn div_round_half_even(num: u64, den: u64) -> u64 {
    let (q, r) = (num / den, num % den);
    match (2 * r).cmp(&den) {
        std::cmp::Ordering::Less => q,
        std::cmp::Ordering::Greater => q + 1,
        std::cmp::Ordering::Equal => q + (q & 1),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeamAxis {
    /// Boundary between columns `position - 1` and `position`.
    Vertical,
    /// Boundary between rows `position - 1` and `position`.
    Horizontal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Seam {
    pub axis: SeamAxis,
    pub position: usize,
    /// Mean absolute grayscale difference across the boundary.
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeamReport {
    pub seams: Vec<Seam>,
    pub max: f64,
    pub mean: f64,
}

/// Mean grayscale jump across every interior tile edge of `grid`.
pub fn seam_report(img: &ImageTile, grid: &TileGrid) -> SeamReport {
    let gray = to_grayscale(img);
    let (w, h) = (gray.width(), gray.height());
    let boundaries = |origins: Vec<usize>, len: usize| {
        let mut b: Vec<usize> = origins
            .iter()
            .flat_map(|&o| [o, o + grid.tile])
            .filter(|&p| p > 0 && p < len)
            .collect();
        b.sort_unstable();
        b.dedup();
        b
    };

    let mut seams = Vec::new();
    for p in boundaries(grid.x_origins(), w) {
        let total: u64 = (0..h).map(|y| u64::from(gray.get(p, y).abs_diff(gray.get(p - 1, y)))).sum();
        seams.push(Seam {
            axis: SeamAxis::Vertical,
            position: p,
            value: total as f64 / h as f64,
        });
    }
    for p in boundaries(grid.y_origins(), h) {
        let total: u64 = (0..w).map(|x| u64::from(gray.get(x, p).abs_diff(gray.get(x, p - 1)))).sum();
        seams.push(Seam {
            axis: SeamAxis::Horizontal,
            position: p,
            value: total as f64 / w as f64,
        });
    }
    let max = seams.iter().map(|s| s.value).fold(0.0, f64::max);
    let mean = if seams.is_empty() {
        0.0
    } else {
        seams.iter().map(|s| s.value).sum::<f64>() / seams.len() as f64
    };
    SeamReport { seams, max, mean }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn noise(w: usize, h: usize, seed: u64) -> ImageTile {
        let mut s = seed | 1;
        ImageTile::from_fn(w, h, |_, _| {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            [s as u8, (s >> 8) as u8, (s >> 16) as u8]
        })
        .unwrap()
    }

    #[test]
    fn grid_examples() {
        assert_eq!(make_grid(256, 256, 256, 192).unwrap().origins, vec![(0, 0)]);
        assert_eq!(make_grid(320, 256, 256, 192).unwrap().x_origins(), vec![0, 64]);
        assert_eq!(make_grid(300, 256, 256, 192).unwrap().x_origins(), vec![0, 44]);
        assert_eq!(make_grid(10, 10, 4, 1).unwrap().x_origins(), vec![0, 3, 6]);
        assert!(matches!(make_grid(200, 300, 256, 192), Err(PreprocessError::ImageSmallerThanTile { .. })));
        assert!(matches!(make_grid(300, 300, 256, 256), Err(PreprocessError::InvalidGrid(_))));
    }

    #[test]
    fn json_round_trip_and_shape() {
        let g = make_grid(20, 12, 8, 3).unwrap();
        let text = g.to_json();
        assert!(text.starts_with(r#"{"width":20,"height":12,"tile":8,"overlap":3,"origins":[[0,0],[5,0]"#));
        assert_eq!(TileGrid::from_json(&text).unwrap(), g);
        let mut bad = g.clone();
        bad.origins.pop();
        assert!(TileGrid::from_json(&bad.to_json()).is_err());
    }

    #[test]
    fn constant_halves_average() {
        let grid = make_grid(12, 8, 8, 4).unwrap();
        let tiles = vec![
            ((0, 0), ImageTile::filled(8, 8, [100; 3]).unwrap()),
            ((4, 0), ImageTile::filled(8, 8, [200; 3]).unwrap()),
        ];
        let out = stitch(&tiles, &grid, Blend::Average).unwrap();
        assert_eq!(out.get(1, 1), [100; 3]);
        assert_eq!(out.get(5, 3), [150; 3]);
        assert_eq!(out.get(11, 7), [200; 3]);
    }

    #[test]
    fn missing_extra_and_wrong_size() {
        let img = noise(20, 20, 3);
        let grid = make_grid(20, 20, 8, 2).unwrap();
        let mut tiles = extract_tiles(&img, &grid).unwrap();
        let removed = tiles.remove(4).0;
        match stitch(&tiles, &grid, Blend::Average) {
            Err(PreprocessError::MissingTile(m)) => assert_eq!(m, vec![removed]),
            other => panic!("{other:?}"),
        }
        let mut tiles = extract_tiles(&img, &grid).unwrap();
        tiles.push(((1, 1), noise(8, 8, 1)));
        assert!(matches!(stitch(&tiles, &grid, Blend::Average), Err(PreprocessError::UnexpectedTile((1, 1)))));
        let mut tiles = extract_tiles(&img, &grid).unwrap();
        tiles[0].1 = noise(7, 8, 1);
        assert!(matches!(stitch(&tiles, &grid, Blend::Average), Err(PreprocessError::SizeMismatch { .. })));
    }

    #[test]
    fn rounding_ties_to_even() {
        assert_eq!(div_round_half_even(5, 2), 2);
        assert_eq!(div_round_half_even(7, 2), 4);
        assert_eq!(div_round_half_even(7, 3), 2);
        assert_eq!(div_round_half_even(8, 3), 3);
    }

    #[test]
    fn seams() {
        let grid = make_grid(24, 16, 16, 8).unwrap();
        let flat = ImageTile::filled(24, 16, [77; 3]).unwrap();
        let r = seam_report(&flat, &grid);
        assert!(!r.seams.is_empty());
        assert_eq!((r.max, r.mean), (0.0, 0.0));

        let step = ImageTile::from_fn(24, 16, |x, _| if x < 8 { [100; 3] } else { [150; 3] }).unwrap();
        let r = seam_report(&step, &grid);
        let at8 = r.seams.iter().find(|s| s.axis == SeamAxis::Vertical && s.position == 8).unwrap();
        assert_eq!(at8.value, 50.0);

        let ramp = ImageTile::from_fn(24, 16, |x, _| [(x * 3) as u8; 3]).unwrap();
        let r = seam_report(&ramp, &grid);
        for s in r.seams.iter().filter(|s| s.axis == SeamAxis::Vertical) {
            assert!((s.value - 3.0).abs() <= 1.0);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn grid_covers_and_steps(w in 8usize..90, h in 8usize..90, tile in 1usize..9, overlap_frac in 0.0f64..1.0) {
            let overlap = ((tile as f64) * overlap_frac) as usize % tile;
            let g = make_grid(w, h, tile, overlap).unwrap();
            for axis in [g.x_origins(), g.y_origins()] {
                prop_assert_eq!(axis[0], 0);
                for pair in axis.windows(2) {
                    prop_assert!(pair[0] < pair[1]);
                }
                for pair in axis[..axis.len() - 1].windows(2) {
                    prop_assert_eq!(pair[1] - pair[0], tile - overlap);
                }
            }
            prop_assert_eq!(*g.x_origins().last().unwrap(), w - tile);
            prop_assert_eq!(*g.y_origins().last().unwrap(), h - tile);
            let mut covered = vec![false; w * h];
            for &(x0, y0) in &g.origins {
                for y in y0..y0 + tile {
                    for x in x0..x0 + tile {
                        covered[y * w + x] = true;
                    }
                }
            }
            prop_assert!(covered.iter().all(|&c| c));
        }

        #[test]
        fn extract_then_stitch_is_identity(w in 10usize..60, h in 10usize..60, tile in 4usize..10, ov in 0usize..4, seed in any::<u64>(), feather in any::<bool>()) {
            let overlap = ov.min(tile - 1);
            let img = noise(w, h, seed);
            let g = make_grid(w, h, tile, overlap).unwrap();
            let blend = if feather { Blend::Feather } else { Blend::Average };
            let out = stitch(&extract_tiles(&img, &g).unwrap(), &g, blend).unwrap();
            prop_assert_eq!(out, img);
        }
    }
}

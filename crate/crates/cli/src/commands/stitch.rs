use std::path::{Path, PathBuf};

use anyhow::Context;
use rayon::prelude::*;
use serde::Serialize;
use stainbench_core::imaging::{read_image, write_image};
use stainbench_core::preprocess::{extract_tiles, make_grid, seam_report, stitch, Blend, SeamReport, TileGrid};

use crate::config::RunConfig;
use crate::output::write_json;
use crate::Outcome;

pub fn tile_file_name(origin: (usize, usize)) -> String {
    format!("tile_{}_{}.png", origin.0, origin.1)
}

/// Writes `<out>/tiles/tile_<x>_<y>.png` for every grid origin and the grid
/// description to `<out>/grid.json`.
pub fn run_tile(cfg: &RunConfig, image: &Path, out: &Path) -> anyhow::Result<Outcome> {
    let img = read_image(image)?;
    let grid = make_grid(img.width(), img.height(), cfg.tile, cfg.overlap)?;
    let dir = out.join("tiles");
    std::fs::create_dir_all(&dir)?;
    let tiles = extract_tiles(&img, &grid)?;
    tiles
        .par_iter()
        .try_for_each(|(origin, tile)| write_image(dir.join(tile_file_name(*origin)), tile))?;
    let mut text = grid.to_json();
    text.push('\n');
    std::fs::write(out.join("grid.json"), text)?;
    log::info!("{} tiles of {} px written to {}", tiles.len(), grid.tile, dir.display());
    Ok(Outcome::Clean)
}

#[derive(Serialize)]
struct SeamFile<'a> {
    config_digest: String,
    blend: Blend,
    grid: &'a TileGrid,
    #[serde(flatten)]
    report: SeamReport,
}

pub fn seam_path(output: &Path) -> PathBuf {
    output.with_extension("seams.json")
}

/// Stitches `tile_<x>_<y>.png` files from `tile_dir` and writes the seam
/// report next to the output image.
pub fn run_stitch(cfg: &RunConfig, tile_dir: &Path, grid_path: &Path, blend: Blend, output: &Path) -> anyhow::Result<Outcome> {
    let text = std::fs::read_to_string(grid_path).with_context(|| format!("reading {}", grid_path.display()))?;
    let grid = TileGrid::from_json(&text)?;
    let missing: Vec<(usize, usize)> = grid
        .origins
        .iter()
        .copied()
        .filter(|o| !tile_dir.join(tile_file_name(*o)).is_file())
        .collect();
    anyhow::ensure!(missing.is_empty(), "missing tiles at origins {missing:?} in {}", tile_dir.display());

    let tiles = grid
        .origins
        .par_iter()
        .map(|&o| {
            let path = tile_dir.join(tile_file_name(o));
            read_image(&path)
                .with_context(|| format!("reading {}", path.display()))
                .map(|t| (o, t))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let img = stitch(&tiles, &grid, blend)?;
    if let Some(parent) = output.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    write_image(output, &img)?;
    let report = seam_report(&img, &grid);
    log::info!("stitched {} tiles; seam mean {:.3}, max {:.3}", tiles.len(), report.mean, report.max);
    write_json(
        &seam_path(output),
        &SeamFile {
            config_digest: cfg.digest(),
            blend,
            grid: &grid,
            report,
        },
    )?;
    Ok(Outcome::Clean)
}

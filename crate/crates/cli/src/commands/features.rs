use std::path::{Path, PathBuf};

use anyhow::Context;
use rayon::prelude::*;
use stainbench_core::distribution::{toy_encoder, write_features, FeatureSet, TOY_DIM, TOY_ENCODER_TAG};
use stainbench_core::imaging::read_image;

use crate::manifest::PairManifest;
use crate::output::{log_failures, write_json, Failure};
use crate::{Outcome, Side};

/// One toy-encoder row per readable tile, in manifest order, with tile ids.
/// Unreadable tiles are skipped and listed in `<output>.failures.json`.
pub fn run(manifest_path: &Path, side: Side, output: &Path) -> anyhow::Result<Outcome> {
    let manifest = PairManifest::load(manifest_path)?;
    let rows: Vec<anyhow::Result<[f64; TOY_DIM]>> = manifest
        .rows
        .par_iter()
        .map(|row| {
            let path = match side {
                Side::Real => &row.real_path,
                Side::Virtual => &row.virtual_path,
            };
            let img = read_image(path).with_context(|| format!("reading {}", path.display()))?;
            Ok(toy_encoder(&img))
        })
        .collect();

    let mut data = Vec::new();
    let mut ids = Vec::new();
    let mut failures = Vec::new();
    for (index, (row, outcome)) in manifest.rows.iter().zip(rows).enumerate() {
        match outcome {
            Ok(v) => {
                data.extend(v.iter().map(|&x| x as f32));
                ids.push(row.tile_id.clone());
            }
            Err(e) => failures.push(Failure {
                index,
                id: row.tile_id.clone(),
                error: format!("{e:#}"),
            }),
        }
    }
    log_failures("tile", &failures);
    let mut failure_path = PathBuf::from(output).into_os_string();
    failure_path.push(".failures.json");
    write_json(Path::new(&failure_path), &failures)?;
    anyhow::ensure!(!ids.is_empty(), "no readable tiles in {}", manifest_path.display());

    let fs = FeatureSet::new(ids.len(), TOY_DIM, data)?
        .with_ids(ids)?
        .with_tag(TOY_ENCODER_TAG);
    write_features(output, &fs).with_context(|| format!("writing {}", output.display()))?;
    log::info!("wrote {} x {} features to {}", fs.n(), fs.d(), output.display());
    Ok(Outcome::from_failures(failures.len()))
}

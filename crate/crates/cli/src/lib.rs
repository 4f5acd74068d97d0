//! Command-line driver: evaluation runs over pair manifests, distribution
//! metrics over feature files, dataset preparation, tiling and stitching,
//! toy feature extraction and report regeneration.
//!
//! Exit codes: 0 clean, 1 usage or configuration error, 2 when some inputs
//! failed but the run still produced output.

pub mod commands;
pub mod config;
pub mod manifest;
pub mod output;

use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use stainbench_core::preprocess::Blend;

use crate::config::{RunConfig, CONFIG_ENV};

#[derive(Debug, Parser)]
#[command(name = "stainbench", version, about = "Evaluate virtual IHC staining against real ground truth")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// JSON run configuration.
    #[arg(long, global = true, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Only log errors.
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score every real/virtual pair of a manifest and write the report.
    Eval {
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Distribution metrics between two FEAT1 feature files.
    Dist {
        #[arg(long)]
        real: PathBuf,
        #[arg(long = "virtual")]
        virt: PathBuf,
        /// Compare files whose encoder tags differ.
        #[arg(long)]
        allow_tag_mismatch: bool,
    },
    /// Build balanced positive/negative patch sets from slide pairs.
    Prep {
        /// CSV with columns group, he_path, ihc_path.
        #[arg(long)]
        slides: PathBuf,
    },
    /// Cut an image into the configured overlapping tile grid.
    Tile {
        #[arg(long)]
        image: PathBuf,
    },
    /// Reassemble a tile directory into one image and report seams.
    Stitch {
        #[arg(long)]
        tiles: PathBuf,
        #[arg(long)]
        grid: PathBuf,
        #[arg(long, value_enum)]
        blend: Option<BlendArg>,
        /// Output image (default: <out>/stitched.png).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Embed manifest tiles with the built-in toy encoder.
    Features {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, value_enum, default_value = "virtual")]
        side: Side,
        /// Output FEAT1 file (default: <out>/features_<side>.feat).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Rebuild the report from one or more saved record files.
    Report {
        #[arg(long, required = true)]
        records: Vec<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum BlendArg {
    Average,
    Feather,
}

impl From<BlendArg> for Blend {
    fn from(b: BlendArg) -> Self {
        match b {
            BlendArg::Average => Blend::Average,
            BlendArg::Feather => Blend::Feather,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Side {
    Real,
    Virtual,
}

/// Result of a command that did not hit a fatal error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Clean,
    /// Some inputs failed; their errors are listed in the outputs.
    Partial,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Clean => 0,
            Outcome::Partial => 2,
        }
    }

    pub fn from_failures(n: usize) -> Self {
        if n == 0 {
            Outcome::Clean
        } else {
            Outcome::Partial
        }
    }
}

/// Loads the config file (if any) and applies flag overrides.
pub fn effective_config(common: &CommonArgs) -> anyhow::Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(cli: Cli) -> anyhow::Result<Outcome> {
    let cfg = effective_config(&cli.common)?;
    std::fs::create_dir_all(&cli.common.out)
        .with_context(|| format!("cannot create output directory {}", cli.common.out.display()))?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.common.workers {
        anyhow::ensure!(n > 0, "--workers must be at least 1");
        pool = pool.num_threads(n);
    }
    let pool = pool.build()?;
    let out = cli.common.out.clone();
    pool.install(|| match cli.command {
        Command::Eval { manifest } => commands::eval::run(&cfg, &manifest, &out),
        Command::Dist {
            real,
            virt,
            allow_tag_mismatch,
        } => commands::dist::run(&cfg, &real, &virt, allow_tag_mismatch, &out),
        Command::Prep { slides } => commands::prep::run(&cfg, &slides, &out),
        Command::Tile { image } => commands::stitch::run_tile(&cfg, &image, &out),
        Command::Stitch {
            tiles,
            grid,
            blend,
            output,
        } => {
            let blend = blend.map(Blend::from).unwrap_or(cfg.blend);
            let output = output.unwrap_or_else(|| out.join("stitched.png"));
            commands::stitch::run_stitch(&cfg, &tiles, &grid, blend, &output)
        }
        Command::Features { manifest, side, output } => {
            let name = match side {
                Side::Real => "features_real.feat",
                Side::Virtual => "features_virtual.feat",
            };
            let output = output.unwrap_or_else(|| out.join(name));
            commands::features::run(&manifest, side, &output)
        }
        Command::Report { records } => commands::report::run(&cfg, &records, &out),
    })
}

//! Output helpers shared by the subcommands.
//!
//! Everything written here is a pure function of the inputs and the
//! effective config, except `run_meta.json`, which holds wall-clock and
//! machine details.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use serde::Serialize;

use crate::config::{sha256_hex, RunConfig};

/// Per-input failure collected without aborting the run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Failure {
    /// Position in the input list.
    pub index: usize,
    pub id: String,
    pub error: String,
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

/// Short id derived from the config digest and the raw input bytes.
pub fn run_id(config_digest: &str, inputs: &[&[u8]]) -> String {
    let mut buf = config_digest.as_bytes().to_vec();
    for input in inputs {
        buf.extend_from_slice(&(input.len() as u64).to_le_bytes());
        buf.extend_from_slice(input);
    }
    sha256_hex(&buf)[..16].to_string()
}

pub fn read_bytes(path: &Path) -> anyhow::Result<Vec<u8>> {
    std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))
}

/// Writes `config.json` (effective config with its digest) and
/// `run_meta.json` into `out`.
pub fn write_run_files(out: &Path, cfg: &RunConfig, command: &str, run_id: &str) -> anyhow::Result<()> {
    #[derive(Serialize)]
    struct ConfigEcho<'a> {
        config_digest: String,
        config: &'a RunConfig,
    }
    write_json(
        &out.join("config.json"),
        &ConfigEcho {
            config_digest: cfg.digest(),
            config: cfg,
        },
    )?;

    #[derive(Serialize)]
    struct Meta<'a> {
        command: &'a str,
        run_id: &'a str,
        unix_time: u64,
        workers: usize,
        version: &'a str,
    }
    let unix_time = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    write_json(
        &out.join("run_meta.json"),
        &Meta {
            command,
            run_id,
            unix_time,
            workers: rayon::current_num_threads(),
            version: env!("CARGO_PKG_VERSION"),
        },
    )
}

/// Logs each failure as a warning.
pub fn log_failures(what: &str, failures: &[Failure]) {
    for f in failures {
        log::warn!("{what} {} (#{}) failed: {}", f.id, f.index, f.error);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_id_depends_on_inputs() {
        let a = run_id("d", &[b"x", b"y"]);
        assert_eq!(a.len(), 16);
        assert_eq!(a, run_id("d", &[b"x", b"y"]));
        assert_ne!(a, run_id("d", &[b"xy"]));
        assert_ne!(a, run_id("e", &[b"x", b"y"]));
    }
}

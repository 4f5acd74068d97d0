//! CSV manifests. Relative paths resolve against the manifest's directory.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use serde::Deserialize;

pub const DEFAULT_MODEL_ID: &str = "model";

#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error("cannot read manifest {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("manifest {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("manifest {path}, line {line}: {message}")]
    Row {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("manifest {0} has no rows")]
    Empty(PathBuf),
}

/// One real/virtual tile pair.
#[derive(Clone, Debug, PartialEq)]
pub struct PairRow {
    pub tile_id: String,
    pub group: Option<String>,
    pub model_id: String,
    pub real_path: PathBuf,
    pub virtual_path: PathBuf,
    pub real_mask_path: Option<PathBuf>,
    pub virtual_mask_path: Option<PathBuf>,
    pub manual_flags: BTreeMap<String, bool>,
}

#[derive(Deserialize)]
struct RawPairRow {
    tile_id: String,
    #[serde(default)]
    group: Option<String>,
    #[serde(default)]
    model_id: Option<String>,
    real_path: String,
    virtual_path: String,
    #[serde(default)]
    real_mask_path: Option<String>,
    #[serde(default)]
    virtual_mask_path: Option<String>,
    #[serde(default)]
    manual_flags: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairManifest {
    pub path: PathBuf,
    pub rows: Vec<PairRow>,
}

fn non_empty(s: Option<String>) -> Option<String> {
    s.map(|v| v.trim().to_string()).filter(|v| !v.is_empty())
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p.trim());
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Parses `label=1;other=0`. Accepts `1/0`, `true/false` and `yes/no`.
pub fn parse_flags(text: &str) -> Result<BTreeMap<String, bool>, String> {
    let mut out = BTreeMap::new();
    for item in text.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = item.split_once('=').ok_or_else(|| format!("flag `{item}` is not label=value"))?;
        let value = match v.trim().to_ascii_lowercase().as_str() {
            "1" | "true" | "yes" => true,
            "0" | "false" | "no" => false,
            other => return Err(format!("flag `{}` has non-boolean value `{other}`", k.trim())),
        };
        out.insert(k.trim().to_string(), value);
    }
    Ok(out)
}

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>, ManifestError> {
    let file = std::fs::File::open(path).map_err(|source| ManifestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

impl PairManifest {
    /// Required columns: `tile_id, real_path, virtual_path`. Optional:
    /// `group, model_id, real_mask_path, virtual_mask_path, manual_flags`.
    pub fn load(path: &Path) -> Result<Self, ManifestError> {
        let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
        let mut rdr = reader(path)?;
        let mut rows = Vec::new();
        let mut seen = HashSet::new();
        for rec in rdr.deserialize::<RawPairRow>() {
            let raw = rec.map_err(|source| ManifestError::Csv {
                path: path.to_path_buf(),
                source,
            })?;
            let row_err = |message: String| ManifestError::Row {
                path: path.to_path_buf(),
                // header is line 1
                line: rows.len() as u64 + 2,
                message,
            };
            if raw.tile_id.is_empty() {
                return Err(row_err("empty tile_id".into()));
            }
            let model_id = non_empty(raw.model_id).unwrap_or_else(|| DEFAULT_MODEL_ID.to_string());
            if !seen.insert((model_id.clone(), raw.tile_id.clone())) {
                return Err(row_err(format!("duplicate tile_id `{}` for model `{model_id}`", raw.tile_id)));
            }
            let manual_flags = match non_empty(raw.manual_flags) {
                Some(text) => parse_flags(&text).map_err(row_err)?,
                None => BTreeMap::new(),
            };
            rows.push(PairRow {
                tile_id: raw.tile_id,
                group: non_empty(raw.group),
                model_id,
                real_path: resolve(&base, &raw.real_path),
                virtual_path: resolve(&base, &raw.virtual_path),
                real_mask_path: non_empty(raw.real_mask_path).map(|p| resolve(&base, &p)),
                virtual_mask_path: non_empty(raw.virtual_mask_path).map(|p| resolve(&base, &p)),
                manual_flags,
            });
        }
        if rows.is_empty() {
            return Err(ManifestError::Empty(path.to_path_buf()));
        }
        Ok(Self {
            path: path.to_path_buf(),
            rows,
        })
    }
}

/// One H&E/IHC slide pair for dataset preparation.
#[derive(Clone, Debug, PartialEq)]
pub struct SlideRow {
    pub group: String,
    pub he_path: PathBuf,
    pub ihc_path: PathBuf,
}

#[derive(Deserialize)]
struct RawSlideRow {
    group: String,
    he_path: String,
    ihc_path: String,
}

/// Columns: `group, he_path, ihc_path`.
pub fn load_slides(path: &Path) -> Result<Vec<SlideRow>, ManifestError> {
    let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
    let mut rdr = reader(path)?;
    let mut rows = Vec::new();
    for rec in rdr.deserialize::<RawSlideRow>() {
        let raw = rec.map_err(|source| ManifestError::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        if raw.group.is_empty() {
            return Err(ManifestError::Row {
                path: path.to_path_buf(),
                line: rows.len() as u64 + 2,
                message: "empty group".into(),
            });
        }
        rows.push(SlideRow {
            group: raw.group,
            he_path: resolve(&base, &raw.he_path),
            ihc_path: resolve(&base, &raw.ihc_path),
        });
    }
    if rows.is_empty() {
        return Err(ManifestError::Empty(path.to_path_buf()));
    }
    Ok(rows)
}

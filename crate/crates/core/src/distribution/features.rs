//! Embedding sets and the FEAT1 binary file format.
//!
//! Layout (little-endian):
//!
//! ```text
//! "FEAT" | version: u32 = 1 | n: u32 | d: u32
//! | tag_len: u16 | tag: UTF-8
//! | n·d f32, row-major
//! | [optional] has_ids: u8, then n × (len: u16, UTF-8)
//! ```
//!
//! Writers always emit the `has_ids` byte; readers accept files that end
//! right after the payload.

use std::io::{Read, Write};
use std::path::Path;

use super::DistError;

pub const MAGIC: &[u8; 4] = b"FEAT";
pub const VERSION: u32 = 1;

/// `n × d` embeddings, one row per image, stored as `f32`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureSet {
    n: usize,
    d: usize,
    data: Vec<f32>,
    ids: Option<Vec<String>>,
    encoder_tag: String,
}

impl FeatureSet {
    pub fn new(n: usize, d: usize, data: Vec<f32>) -> Result<Self, DistError> {
        if n == 0 || d == 0 {
            return Err(DistError::InvalidFeatures(format!("empty feature set {n}x{d}")));
        }
        if data.len() != n * d {
            return Err(DistError::InvalidFeatures(format!(
                "{} values for a {n}x{d} set",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(DistError::InvalidFeatures(format!(
                "non-finite value at row {}, column {}",
                i / d,
                i % d
            )));
        }
        Ok(Self {
            n,
            d,
            data,
            ids: None,
            encoder_tag: String::new(),
        })
    }

    /// Builds a set from rows of equal length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, DistError> {
        let d = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        if rows.iter().any(|r| r.as_ref().len() != d) {
            return Err(DistError::InvalidFeatures("ragged rows".into()));
        }
        let data = rows
            .iter()
            .flat_map(|r| r.as_ref().iter().map(|&v| v as f32))
            .collect();
        Self::new(rows.len(), d, data)
    }

    pub fn with_ids(mut self, ids: Vec<String>) -> Result<Self, DistError> {
        if ids.len() != self.n {
            return Err(DistError::InvalidFeatures(format!(
                "{} ids for {} rows",
                ids.len(),
                self.n
            )));
        }
        self.ids = Some(ids);
        Ok(self)
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.encoder_tag = tag.into();
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn ids(&self) -> Option<&[String]> {
        self.ids.as_deref()
    }

    pub fn encoder_tag(&self) -> &str {
        &self.encoder_tag
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f32]> {
        self.data.chunks_exact(self.d)
    }

    /// New set made of the given rows, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<FeatureSet, DistError> {
        let mut data = Vec::with_capacity(indices.len() * self.d);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        let mut out = FeatureSet::new(indices.len(), self.d, data)?;
        out.encoder_tag = self.encoder_tag.clone();
        if let Some(ids) = &self.ids {
            out.ids = Some(indices.iter().map(|&i| ids[i].clone()).collect());
        }
        Ok(out)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, DistError> {
        let mut buf = Vec::with_capacity(19 + self.encoder_tag.len() + self.data.len() * 4);
        write_to(&mut buf, self)?;
        Ok(buf)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DistError> {
        let mut cursor = Cursor { bytes, pos: 0 };
        if cursor.take(4)? != MAGIC {
            return Err(DistError::BadMagic);
        }
        let version = cursor.u32()?;
        if version != VERSION {
            return Err(DistError::VersionUnsupported(version));
        }
        let n = cursor.u32()? as usize;
        let d = cursor.u32()? as usize;
        let tag_len = cursor.u16()? as usize;
        let tag = cursor.string(tag_len)?;
        let payload = n
            .checked_mul(d)
            .and_then(|v| v.checked_mul(4))
            .ok_or(DistError::TruncatedFile)?;
        let raw = cursor.take(payload)?;
        let data: Vec<f32> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        let mut set = FeatureSet::new(n, d, data)?.with_tag(tag);
        if !cursor.at_end() {
            match cursor.take(1)?[0] {
                0 => {}
                1 => {
                    let mut ids = Vec::with_capacity(n);
                    for _ in 0..n {
                        let len = cursor.u16()? as usize;
                        ids.push(cursor.string(len)?);
                    }
                    set = set.with_ids(ids)?;
                }
                other => {
                    return Err(DistError::CorruptFile(format!("id-table flag {other}")));
                }
            }
            if !cursor.at_end() {
                return Err(DistError::CorruptFile("trailing bytes after id table".into()));
            }
        }
        Ok(set)
    }
}

fn write_to(w: &mut impl Write, fs: &FeatureSet) -> Result<(), DistError> {
    let tag = fs.encoder_tag.as_bytes();
    let tag_len = u16::try_from(tag.len())
        .map_err(|_| DistError::InvalidFeatures("encoder tag longer than 65535 bytes".into()))?;
    let n = u32::try_from(fs.n).map_err(|_| DistError::InvalidFeatures("too many rows".into()))?;
    let d = u32::try_from(fs.d).map_err(|_| DistError::InvalidFeatures("dimension too large".into()))?;
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&n.to_le_bytes())?;
    w.write_all(&d.to_le_bytes())?;
    w.write_all(&tag_len.to_le_bytes())?;
    w.write_all(tag)?;
    for v in &fs.data {
        w.write_all(&v.to_le_bytes())?;
    }
    match &fs.ids {
        None => w.write_all(&[0])?,
        Some(ids) => {
            w.write_all(&[1])?;
            for id in ids {
                let len = u16::try_from(id.len())
                    .map_err(|_| DistError::InvalidFeatures(format!("id too long: {id:.32}…")))?;
                w.write_all(&len.to_le_bytes())?;
                w.write_all(id.as_bytes())?;
            }
        }
    }
    Ok(())
}

pub fn write_features(path: impl AsRef<Path>, fs: &FeatureSet) -> Result<(), DistError> {
    let bytes = fs.to_bytes()?;
    std::fs::write(path, bytes)?;
    Ok(())
}

pub fn read_features(path: impl AsRef<Path>) -> Result<FeatureSet, DistError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    FeatureSet::from_bytes(&bytes)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8], DistError> {
        let end = self.pos.checked_add(len).ok_or(DistError::TruncatedFile)?;
        let out = self.bytes.get(self.pos..end).ok_or(DistError::TruncatedFile)?;
        self.pos = end;
        Ok(out)
    }

    fn u16(&mut self) -> Result<u16, DistError> {
        let b = self.take(2)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Result<u32, DistError> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn string(&mut self, len: usize) -> Result<String, DistError> {
        let b = self.take(len)?;
        String::from_utf8(b.to_vec()).map_err(|_| DistError::CorruptFile("invalid UTF-8".into()))
    }

    fn at_end(&self) -> bool {
        self.pos == self.bytes.len()
    }
}

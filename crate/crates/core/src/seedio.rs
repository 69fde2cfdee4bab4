//! Seed-set files, path dumps and JSON reports.
//!
//! Binary seed-set layout (all integers and values little-endian):
//!
//! | offset | size | field                          |
//! |--------|------|--------------------------------|
//! | 0      | 4    | magic `NAOS`                   |
//! | 4      | 1    | version, currently 1           |
//! | 5      | 1    | dtype: 0 = f64, 1 = f32        |
//! | 6      | 4    | `d` as u32                     |
//! | 10     | 4    | `count` as u32                 |
//! | 14     | …    | `count · d` values, row-major  |
//!
//! Files are written to a temporary sibling and renamed into place.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{NaoError, Result};
use crate::path::PiecewisePath;
use crate::prior::SeedPoint;

pub const MAGIC: &[u8; 4] = b"NAOS";
pub const VERSION: u8 = 1;
const HEADER_LEN: usize = 14;
/// Paths in higher dimensions go to the binary format instead of CSV.
pub const CSV_MAX_DIM: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    F64,
    F32,
}

impl Dtype {
    fn tag(self) -> u8 {
        match self {
            Dtype::F64 => 0,
            Dtype::F32 => 1,
        }
    }

    fn width(self) -> usize {
        match self {
            Dtype::F64 => 8,
            Dtype::F32 => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedSet {
    pub d: usize,
    pub seeds: Vec<SeedPoint>,
    pub dtype: Dtype,
}

impl SeedSet {
    pub fn new(seeds: Vec<SeedPoint>, dtype: Dtype) -> Result<Self> {
        let d = seeds
            .first()
            .map(SeedPoint::dim)
            .ok_or_else(|| NaoError::invalid("a seed set needs at least one seed"))?;
        if seeds.iter().any(|s| s.dim() != d) {
            return Err(NaoError::invalid("all seeds in a set must share one dimension"));
        }
        Ok(SeedSet { d, seeds, dtype })
    }

    pub fn count(&self) -> usize {
        self.seeds.len()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let d = u32::try_from(self.d).map_err(|_| NaoError::invalid("dimension exceeds u32"))?;
        let count = u32::try_from(self.count()).map_err(|_| NaoError::invalid("count exceeds u32"))?;
        let mut out = Vec::with_capacity(HEADER_LEN + self.count() * self.d * self.dtype.width());
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.push(self.dtype.tag());
        out.extend_from_slice(&d.to_le_bytes());
        out.extend_from_slice(&count.to_le_bytes());
        for s in &self.seeds {
            for &x in s.as_slice() {
                match self.dtype {
                    Dtype::F64 => out.extend_from_slice(&x.to_le_bytes()),
                    Dtype::F32 => out.extend_from_slice(&(x as f32).to_le_bytes()),
                }
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let fail = |offset: usize, message: &str| NaoError::Format {
            offset: offset as u64,
            message: message.to_string(),
        };
        if bytes.len() < HEADER_LEN {
            return Err(fail(bytes.len(), "truncated header"));
        }
        if &bytes[..4] != MAGIC {
            return Err(fail(0, "bad magic, expected NAOS"));
        }
        if bytes[4] != VERSION {
            return Err(fail(4, &format!("unsupported version {}", bytes[4])));
        }
        let dtype = match bytes[5] {
            0 => Dtype::F64,
            1 => Dtype::F32,
            t => return Err(fail(5, &format!("unknown dtype tag {t}"))),
        };
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes")) as usize;
        let d = u32_at(6);
        let count = u32_at(10);
        if d == 0 {
            return Err(fail(6, "dimension is zero"));
        }
        if count == 0 {
            return Err(fail(10, "count is zero"));
        }
        let width = dtype.width();
        let expected = d
            .checked_mul(count)
            .and_then(|n| n.checked_mul(width))
            .and_then(|n| n.checked_add(HEADER_LEN))
            .ok_or_else(|| fail(6, "declared size overflows"))?;
        if bytes.len() < expected {
            return Err(fail(
                bytes.len(),
                &format!("truncated payload, expected {expected} bytes"),
            ));
        }
        if bytes.len() > expected {
            return Err(fail(expected, "trailing bytes after payload"));
        }
        let mut seeds = Vec::with_capacity(count);
        for s in 0..count {
            let mut v = Vec::with_capacity(d);
            for j in 0..d {
                let o = HEADER_LEN + (s * d + j) * width;
                let x = match dtype {
                    Dtype::F64 => f64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes")),
                    Dtype::F32 => f64::from(f32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"))),
                };
                if !x.is_finite() {
                    return Err(fail(o, "non-finite value"));
                }
                v.push(x);
            }
            seeds.push(SeedPoint::from_trusted(v));
        }
        Ok(SeedSet { d, seeds, dtype })
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| NaoError::invalid(format!("not a file path: {}", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_seedset(path: &Path, set: &SeedSet) -> Result<()> {
    write_atomic(path, &set.to_bytes()?)
}

pub fn read_seedset(path: &Path) -> Result<SeedSet> {
    SeedSet::from_bytes(&fs::read(path)?)
}

/// CSV with header `index,c0,…,c{d−1}`, one row per path point.
pub fn path_to_csv(path: &PiecewisePath) -> Result<String> {
    if path.dim() > CSV_MAX_DIM {
        return Err(NaoError::invalid(format!(
            "CSV path dumps support d <= {CSV_MAX_DIM}; use the binary format for d = {}",
            path.dim()
        )));
    }
    let mut out = String::from("index");
    for j in 0..path.dim() {
        out.push_str(&format!(",c{j}"));
    }
    out.push('\n');
    for (i, p) in path.points().enumerate() {
        out.push_str(&i.to_string());
        for x in p {
            out.push_str(&format!(",{x}"));
        }
        out.push('\n');
    }
    Ok(out)
}

/// Writes a path as CSV when the file name ends in `.csv`, otherwise as a
/// binary seed set with one seed per path point.
pub fn write_path(file: &Path, path: &PiecewisePath) -> Result<()> {
    let is_csv = file.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        write_atomic(file, path_to_csv(path)?.as_bytes())
    } else {
        write_seedset(file, &SeedSet::new(path.to_seed_points(), Dtype::F64)?)
    }
}

pub fn write_text(file: &Path, text: &str) -> Result<()> {
    write_atomic(file, text.as_bytes())
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(file: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(file, text.as_bytes())
}

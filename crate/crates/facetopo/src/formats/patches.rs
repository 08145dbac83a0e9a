//! One little-endian `f32` file per sample holding its `n` patches back to
//! back, plus a manifest mapping sample ids to file names.

use std::collections::BTreeMap;
use std::path::Path;

use facetopo_core::data::PatchSet;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatchManifest {
    pub patch_size: usize,
    pub files: BTreeMap<String, String>,
}

pub fn write_patch_file(path: &Path, patches: &PatchSet) -> Result<()> {
    let bytes: Vec<u8> = patches.data.iter().flat_map(|&v| (v as f32).to_le_bytes()).collect();
    std::fs::write(path, bytes).map_err(Error::io(path))
}

/// Reads `n` patches of side `size`.
pub fn read_patch_file(path: &Path, size: usize, n: usize) -> Result<PatchSet> {
    let bytes = std::fs::read(path).map_err(Error::io(path))?;
    let expected = 4 * n * size * size;
    if bytes.len() != expected {
        return Err(Error::parse(
            path,
            0,
            format!("expected {expected} bytes for {n} patches of {size}x{size}, found {}", bytes.len()),
        ));
    }
    let data = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    Ok(PatchSet { size, data })
}

//! Dataset directories:
//!
//! ```text
//! meta.json            n, num_classes, patch_size, embed_dim, mirror_map
//! landmarks.csv
//! patches/manifest.json + NNNNNN.bin    (optional, manifest maps id to file)
//! embeddings/manifest.json + NNNNNN.csv (optional)
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use facetopo_core::data::Dataset;
use serde::{Deserialize, Serialize};

use super::{
    read_embedding_csv, read_json, read_landmark_csv, read_patch_file, write_embedding_csv, write_json,
    write_landmark_csv, write_patch_file, PatchManifest,
};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetMeta {
    pub n: usize,
    pub num_classes: usize,
    #[serde(default)]
    pub patch_size: Option<usize>,
    #[serde(default)]
    pub embed_dim: Option<usize>,
    #[serde(default)]
    pub mirror_map: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EmbeddingManifest {
    embed_dim: usize,
    files: BTreeMap<String, String>,
}

pub fn save_dataset(dir: &Path, data: &Dataset) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(Error::io(dir))?;
    write_landmark_csv(&dir.join("landmarks.csv"), &data.samples)?;
    let patch_size = data.patch_size();
    if let Some(size) = patch_size {
        let pdir = dir.join("patches");
        std::fs::create_dir_all(&pdir).map_err(Error::io(&pdir))?;
        let mut files = BTreeMap::new();
        for (i, s) in data.samples.iter().enumerate() {
            let patches = s.patches.as_ref().ok_or_else(|| missing(&s.id, "patches"))?;
            let name = format!("{i:06}.bin");
            write_patch_file(&pdir.join(&name), patches)?;
            files.insert(s.id.clone(), name);
        }
        write_json(&pdir.join("manifest.json"), &PatchManifest { patch_size: size, files })?;
    }
    let embed_dim = data.samples.first().and_then(|s| s.embeddings.as_ref()).map(|e| e.dim);
    if let Some(embed_dim) = embed_dim {
        let edir = dir.join("embeddings");
        std::fs::create_dir_all(&edir).map_err(Error::io(&edir))?;
        let mut files = BTreeMap::new();
        for (i, s) in data.samples.iter().enumerate() {
            let e = s.embeddings.as_ref().ok_or_else(|| missing(&s.id, "embeddings"))?;
            let name = format!("{i:06}.csv");
            write_embedding_csv(&edir.join(&name), e)?;
            files.insert(s.id.clone(), name);
        }
        write_json(&edir.join("manifest.json"), &EmbeddingManifest { embed_dim, files })?;
    }
    let meta = DatasetMeta {
        n: data.n,
        num_classes: data.num_classes,
        patch_size,
        embed_dim,
        mirror_map: data.mirror_map.clone(),
    };
    write_json(&dir.join("meta.json"), &meta)
}

/// Loads a dataset directory, or a bare landmark CSV (classes inferred from
/// the largest label, no texture inputs).
pub fn load_dataset(path: &Path) -> Result<Dataset> {
    if !path.is_dir() {
        let samples = read_landmark_csv(path)?;
        let n = samples.first().map_or(0, |s| s.n());
        let k = samples.iter().map(|s| s.label + 1).max().unwrap_or(0);
        return Ok(Dataset::new(n, k, samples, None)?);
    }
    let meta: DatasetMeta = read_json(&path.join("meta.json"))?;
    let mut samples = read_landmark_csv(&path.join("landmarks.csv"))?;
    if let Some(s) = samples.first() {
        if s.n() != meta.n {
            return Err(Error::Core(facetopo_core::Error::Dimension {
                what: "landmarks per sample",
                expected: meta.n,
                got: s.n(),
            }));
        }
    }
    if let Some(size) = meta.patch_size {
        let pdir = path.join("patches");
        let manifest: PatchManifest = read_json(&pdir.join("manifest.json"))?;
        if manifest.patch_size != size {
            return Err(Error::Core(facetopo_core::Error::Dimension {
                what: "patch size",
                expected: size,
                got: manifest.patch_size,
            }));
        }
        for s in &mut samples {
            let file = manifest.files.get(&s.id).ok_or_else(|| missing(&s.id, "patches"))?;
            s.patches = Some(read_patch_file(&pdir.join(file), size, meta.n)?);
        }
    }
    if let Some(dim) = meta.embed_dim {
        let edir = path.join("embeddings");
        let manifest: EmbeddingManifest = read_json(&edir.join("manifest.json"))?;
        for s in &mut samples {
            let file = manifest.files.get(&s.id).ok_or_else(|| missing(&s.id, "embeddings"))?;
            let e = read_embedding_csv(&edir.join(file))?;
            if e.dim != dim || e.data.len() != dim * meta.n {
                return Err(Error::Core(facetopo_core::Error::Dimension {
                    what: "embedding values",
                    expected: dim * meta.n,
                    got: e.data.len(),
                }));
            }
            s.embeddings = Some(e);
        }
    }
    Ok(Dataset::new(meta.n, meta.num_classes, samples, meta.mirror_map)?)
}

fn missing(id: &str, what: &str) -> Error {
    Error::Core(facetopo_core::Error::Validation {
        what: "dataset",
        reason: format!("sample `{id}` has no {what}"),
    })
}

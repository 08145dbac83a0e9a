//! On-disk formats. Everything is plain text or little-endian binary so runs
//! can be diffed and inspected by hand.

mod checkpoint;
mod dataset;
mod embeddings;
mod landmarks;
mod patches;
mod reports;
mod tree;

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::{Error, Result};

pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_FORMAT};
pub use dataset::{load_dataset, save_dataset, DatasetMeta};
pub use embeddings::{read_embedding_csv, write_embedding_csv};
pub use landmarks::{read_landmark_csv, write_landmark_csv};
pub use patches::{read_patch_file, write_patch_file, PatchManifest};
pub use reports::{
    write_baseline_csv, write_confusion_csv, write_history_csv, ClassMetrics, MetricsReport,
};
pub use tree::{read_tree, tree_from_json, tree_to_json, write_tree, TreeFile};

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(Error::json(path))?;
    text.push('\n');
    std::fs::write(path, text).map_err(Error::io(path))
}

pub(crate) fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
    serde_json::from_str(&text).map_err(Error::json(path))
}

/// Shortest text that parses back to the same `f64`.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

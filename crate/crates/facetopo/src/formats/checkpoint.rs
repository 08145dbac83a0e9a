use std::path::Path;

use facetopo_core::model::{FaceTopoNet, ModelConfig};
use facetopo_core::nn::{Block, ParamStore};
use facetopo_core::seed::rng_from;
use serde::{Deserialize, Serialize};

use super::{read_json, write_json};
use crate::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "topo-seq-ckpt-v1";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointFile {
    format: String,
    model: ModelConfig,
    blocks: Vec<BlockFile>,
}

/// One parameter block, values in row-major order.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BlockFile {
    name: String,
    shape: [usize; 2],
    values: Vec<f64>,
}

pub fn write_checkpoint(path: &Path, config: &ModelConfig, params: &ParamStore) -> Result<()> {
    if !params.all_finite() {
        return Err(Error::Core(facetopo_core::Error::Validation {
            what: "checkpoint",
            reason: "parameters contain non-finite values".into(),
        }));
    }
    let file = CheckpointFile {
        format: CHECKPOINT_FORMAT.into(),
        model: config.clone(),
        blocks: params
            .blocks()
            .iter()
            .map(|b| BlockFile {
                name: b.name.clone(),
                shape: [b.rows, b.cols],
                values: b.values.clone(),
            })
            .collect(),
    };
    write_json(path, &file)
}

/// Loads a checkpoint and rebuilds the network it belongs to. The block
/// layout must match what the stored model config produces.
pub fn read_checkpoint(path: &Path) -> Result<(FaceTopoNet, ParamStore)> {
    let file: CheckpointFile = read_json(path)?;
    if file.format != CHECKPOINT_FORMAT {
        return Err(Error::Core(facetopo_core::Error::Validation {
            what: "checkpoint format",
            reason: format!("expected `{CHECKPOINT_FORMAT}`, found `{}`", file.format),
        }));
    }
    let blocks = file
        .blocks
        .into_iter()
        .map(|b| Block {
            name: b.name,
            rows: b.shape[0],
            cols: b.shape[1],
            values: b.values,
        })
        .collect();
    let params = ParamStore::from_blocks(blocks)?;
    let (model, _) = FaceTopoNet::new(&file.model, &mut rng_from(0, 0))?;
    model.check_params(&params)?;
    Ok((model, params))
}

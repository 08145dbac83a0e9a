//! Flat run configuration. Every key is optional; the defaults are the
//! desk-scale study (15 landmarks, 4 classes, 200 samples per class, a short
//! swarm search and a 20-tree random baseline).

use std::path::{Path, PathBuf};

use facetopo_core::ccpso2::SwarmConfig;
use facetopo_core::data::{Dataset, SyntheticConfig};
use facetopo_core::model::{CellChoice, ModelConfig};
use facetopo_core::nn::{AdamConfig, FocalLoss};
use facetopo_core::trainer::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Dataset directory or landmark CSV. Without one, data is synthesized
    /// in memory from the keys below.
    pub dataset: Option<PathBuf>,
    pub seed: u64,

    pub n: usize,
    pub num_classes: usize,
    pub samples_per_class: usize,
    pub noise_std: f64,
    pub deform_scale: f64,
    pub mirror_map: Option<Vec<usize>>,
    pub image_size: usize,
    pub patch_size: usize,
    pub skew: f64,
    pub train_fraction: f64,

    pub inner_epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub focal_gamma: f64,
    pub focal_alpha: f64,
    pub flip_probability: f64,
    pub root: usize,
    pub patience: Option<usize>,
    /// Random trees scored next to the learned one; 0 skips the baseline.
    pub baseline_trees: usize,

    pub swarm_size: usize,
    pub iterations: usize,
    pub group_sizes: Vec<usize>,
    pub weight_bounds: (f64, f64),
    pub restarts: usize,

    pub hidden_dim: usize,
    pub stream_dim: usize,
    pub fusion_dim: usize,
    pub cell: CellChoice,
    pub embed_dim: usize,
    pub conv_channels: [usize; 2],
    pub precomputed_embeddings: bool,
    pub structure_stream: bool,
    pub texture_stream: bool,
    pub gated_fusion: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let synth = SyntheticConfig::default();
        let train = TrainConfig::default();
        let model = ModelConfig::default();
        Self {
            dataset: None,
            seed: 0,
            n: synth.n,
            num_classes: synth.num_classes,
            samples_per_class: synth.samples_per_class,
            noise_std: synth.noise_std,
            deform_scale: synth.deform_scale,
            mirror_map: None,
            image_size: synth.image_size,
            patch_size: synth.patch_size,
            skew: synth.skew,
            train_fraction: 0.8,
            inner_epochs: 3,
            batch_size: train.batch_size,
            lr: train.adam.lr,
            beta1: train.adam.beta1,
            beta2: train.adam.beta2,
            adam_eps: train.adam.eps,
            focal_gamma: train.focal.gamma,
            focal_alpha: train.focal.alpha,
            flip_probability: train.flip_probability,
            root: 0,
            patience: None,
            baseline_trees: 20,
            swarm_size: 4,
            iterations: 6,
            group_sizes: vec![21, 35],
            weight_bounds: train.swarm.bounds,
            restarts: 1,
            hidden_dim: model.hidden_dim,
            stream_dim: model.stream_dim,
            fusion_dim: model.fusion_dim,
            cell: model.cell,
            embed_dim: model.embed_dim,
            conv_channels: model.conv_channels,
            precomputed_embeddings: false,
            structure_stream: true,
            texture_stream: true,
            gated_fusion: true,
        }
    }
}

impl RunConfig {
    /// Reads a config file. Unknown keys are rejected by name.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("config serializes");
        text.push('\n');
        text
    }

    pub fn synthetic(&self) -> SyntheticConfig {
        SyntheticConfig {
            n: self.n,
            num_classes: self.num_classes,
            samples_per_class: self.samples_per_class,
            noise_std: self.noise_std,
            deform_scale: self.deform_scale,
            seed: self.seed,
            mirror_map: self.mirror_map.clone(),
            image_size: self.image_size,
            patch_size: self.patch_size,
            skew: self.skew,
        }
    }

    /// Trainer settings. Landmark count, class count and texture input sizes
    /// follow `data` when given.
    pub fn train(&self, data: Option<&Dataset>) -> TrainConfig {
        let mut model = ModelConfig {
            n: self.n,
            num_classes: self.num_classes,
            hidden_dim: self.hidden_dim,
            stream_dim: self.stream_dim,
            fusion_dim: self.fusion_dim,
            cell: self.cell,
            patch_size: self.patch_size,
            embed_dim: self.embed_dim,
            conv_channels: self.conv_channels,
            precomputed_embeddings: self.precomputed_embeddings,
            structure_stream: self.structure_stream,
            texture_stream: self.texture_stream,
            gated_fusion: self.gated_fusion,
        };
        if let Some(data) = data {
            model.n = data.n;
            model.num_classes = data.num_classes;
            if let Some(a) = data.patch_size() {
                model.patch_size = a;
            }
            if self.precomputed_embeddings {
                if let Some(e) = data.samples.first().and_then(|s| s.embeddings.as_ref()) {
                    model.embed_dim = e.dim;
                }
            }
        }
        TrainConfig {
            inner_epochs: self.inner_epochs,
            batch_size: self.batch_size,
            adam: AdamConfig {
                lr: self.lr,
                beta1: self.beta1,
                beta2: self.beta2,
                eps: self.adam_eps,
            },
            focal: FocalLoss {
                gamma: self.focal_gamma,
                alpha: self.focal_alpha,
            },
            swarm: SwarmConfig {
                dimensions: 1,
                group_sizes: self.group_sizes.clone(),
                swarm_size: self.swarm_size,
                iterations: self.iterations,
                seed: self.seed,
                bounds: self.weight_bounds,
                restarts: self.restarts,
            },
            seed: self.seed,
            patience: self.patience,
            flip_probability: self.flip_probability,
            root: self.root,
            model,
        }
    }

    /// Checks the settings against `data`, or against the synthetic keys
    /// when there is no dataset yet.
    pub fn validate(&self, data: Option<&Dataset>) -> Result<()> {
        let config_err = |e: facetopo_core::Error| Error::Config(e.to_string());
        if data.is_none() {
            self.synthetic().validate().map_err(config_err)?;
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!("train_fraction must lie in (0, 1), got {}", self.train_fraction)));
        }
        self.train(data).validate().map_err(config_err)
    }
}

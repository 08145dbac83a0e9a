use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::math::sqrt;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BlockId(usize);

impl BlockId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Init {
    /// Uniform in `[-r, r]` with `r = sqrt(6 / (fan_in + fan_out))`.
    Glorot { fan_in: usize, fan_out: usize },
    Constant(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

/// Named parameter blocks.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamStore {
    blocks: Vec<Block>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rebuilds a store from saved blocks, keeping their order.
    pub fn from_blocks(blocks: Vec<Block>) -> Result<Self> {
        for (i, b) in blocks.iter().enumerate() {
            if b.values.len() != b.rows * b.cols {
                return Err(Error::dim("parameter block values", b.rows * b.cols, b.values.len()));
            }
            if blocks[..i].iter().any(|o| o.name == b.name) {
                return Err(Error::invalid("parameter blocks", alloc::format!("duplicate block `{}`", b.name)));
            }
        }
        Ok(Self { blocks })
    }

    pub fn add<R: Rng>(&mut self, name: &str, rows: usize, cols: usize, init: Init, rng: &mut R) -> BlockId {
        assert!(
            self.blocks.iter().all(|b| b.name != name),
            "duplicate parameter block `{name}`"
        );
        let values = match init {
            Init::Glorot { fan_in, fan_out } => {
                let r = sqrt(6.0 / (fan_in + fan_out) as f64);
                (0..rows * cols).map(|_| rng.random_range(-r..=r)).collect()
            }
            Init::Constant(c) => vec![c; rows * cols],
        };
        self.blocks.push(Block {
            name: name.to_string(),
            rows,
            cols,
            values,
        });
        BlockId(self.blocks.len() - 1)
    }

    #[inline]
    pub fn get(&self, id: BlockId) -> &[f64] {
        &self.blocks[id.0].values
    }

    #[inline]
    pub fn get_mut(&mut self, id: BlockId) -> &mut [f64] {
        &mut self.blocks[id.0].values
    }

    pub fn block(&self, id: BlockId) -> &Block {
        &self.blocks[id.0]
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn blocks_mut(&mut self) -> &mut [Block] {
        &mut self.blocks
    }

    pub fn find(&self, name: &str) -> Option<BlockId> {
        self.blocks.iter().position(|b| b.name == name).map(BlockId)
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = BlockId> {
        (0..self.blocks.len()).map(BlockId)
    }

    pub fn scalar_count(&self) -> usize {
        self.blocks.iter().map(|b| b.values.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.blocks.iter().all(|b| b.values.iter().all(|v| v.is_finite()))
    }
}

/// Gradient buffers shaped like a [`ParamStore`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    data: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(store: &ParamStore) -> Self {
        Self {
            data: store.blocks().iter().map(|b| vec![0.0; b.values.len()]).collect(),
        }
    }

    #[inline]
    pub fn get(&self, id: BlockId) -> &[f64] {
        &self.data[id.0]
    }

    #[inline]
    pub fn get_mut(&mut self, id: BlockId) -> &mut [f64] {
        &mut self.data[id.0]
    }

    pub fn zero(&mut self) {
        for d in &mut self.data {
            d.fill(0.0);
        }
    }

    pub fn scale(&mut self, s: f64) {
        for d in &mut self.data {
            for v in d {
                *v *= s;
            }
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn norm(&self, id: BlockId) -> f64 {
        sqrt(self.data[id.0].iter().map(|v| v * v).sum())
    }

    pub fn blocks(&self) -> &[Vec<f64>] {
        &self.data
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.99,
            eps: 1e-8,
        }
    }
}

/// Bias-corrected adaptive moment estimation.
impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lr.is_finite()
            && self.lr > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.eps.is_finite()
            && self.eps > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid("adam config", "need lr > 0, betas in [0, 1), eps > 0"))
        }
    }
}

#[derive(Debug, Clone)]
pub struct Adam {
    pub config: AdamConfig,
    t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(config: AdamConfig, store: &ParamStore) -> Self {
        let zeros: Vec<Vec<f64>> = store.blocks().iter().map(|b| vec![0.0; b.values.len()]).collect();
        Self {
            config,
            t: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// Applies one update. Refuses to touch anything if a gradient is not finite.
    pub fn step(&mut self, store: &mut ParamStore, grads: &Gradients) -> Result<()> {
        for (b, g) in store.blocks().iter().zip(grads.blocks()) {
            if g.iter().any(|v| !v.is_finite()) {
                return Err(Error::Update { block: b.name.clone() });
            }
        }
        self.t += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let c1 = 1.0 - crate::math::powf(beta1, self.t as f64);
        let c2 = 1.0 - crate::math::powf(beta2, self.t as f64);
        for (k, block) in store.blocks_mut().iter_mut().enumerate() {
            let g = &grads.blocks()[k];
            let m = &mut self.m[k];
            let v = &mut self.v[k];
            for i in 0..block.values.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                let mh = m[i] / c1;
                let vh = v[i] / c2;
                block.values[i] -= lr * mh / (sqrt(vh) + eps);
            }
        }
        debug_assert!(store.all_finite(), "non-finite parameter after Adam step");
        Ok(())
    }
}

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::ops::softmax;
use super::{BlockId, Gradients, Init, ParamStore};
use crate::math::tanh;

/// Soft attention over a sequence of hidden states.
///
/// Each state gets a scalar score `o_i = tanh(w . h_i + b)`; the weights are
/// `softmax(o)` over all time steps and the context is `sum_i delta_i h_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttentionHead {
    pub dim: usize,
    pub w: BlockId,
    pub b: BlockId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionCache {
    pub scores: Vec<f64>,
    pub weights: Vec<f64>,
    pub context: Vec<f64>,
}

impl AttentionHead {
    pub fn new<R: Rng>(store: &mut ParamStore, name: &str, dim: usize, rng: &mut R) -> Self {
        let w = store.add(&format!("{name}.w"), 1, dim, Init::Glorot { fan_in: dim, fan_out: 1 }, rng);
        let b = store.add(&format!("{name}.b"), 1, 1, Init::Constant(0.0), rng);
        Self { dim, w, b }
    }

    /// `hidden` is `T x dim` row-major.
    pub fn forward(&self, store: &ParamStore, hidden: &[f64]) -> AttentionCache {
        let d = self.dim;
        let steps = hidden.len() / d;
        debug_assert!(steps >= 1 && steps * d == hidden.len());
        let w = store.get(self.w);
        let b = store.get(self.b)[0];
        let scores: Vec<f64> = hidden
            .chunks_exact(d)
            .map(|h| tanh(b + h.iter().zip(w).map(|(x, y)| x * y).sum::<f64>()))
            .collect();
        let weights = softmax(&scores);
        let mut context = vec![0.0; d];
        for (h, &a) in hidden.chunks_exact(d).zip(&weights) {
            for k in 0..d {
                context[k] += a * h[k];
            }
        }
        AttentionCache {
            scores,
            weights,
            context,
        }
    }

    /// Returns `dL/dhidden` given `dL/dcontext`.
    pub fn backward(
        &self,
        store: &ParamStore,
        grads: &mut Gradients,
        hidden: &[f64],
        cache: &AttentionCache,
        dcontext: &[f64],
    ) -> Vec<f64> {
        let d = self.dim;
        let w = store.get(self.w);
        let mut dh = vec![0.0; hidden.len()];
        let dweights: Vec<f64> = hidden
            .chunks_exact(d)
            .map(|h| h.iter().zip(dcontext).map(|(a, b)| a * b).sum())
            .collect();
        let mean: f64 = dweights.iter().zip(&cache.weights).map(|(g, a)| g * a).sum();
        let mut gw = vec![0.0; d];
        let mut gb = 0.0;
        for (t, h) in hidden.chunks_exact(d).enumerate() {
            let a = cache.weights[t];
            let dscore = a * (dweights[t] - mean);
            let dpre = dscore * (1.0 - cache.scores[t] * cache.scores[t]);
            gb += dpre;
            let row = &mut dh[t * d..(t + 1) * d];
            for k in 0..d {
                row[k] = a * dcontext[k] + dpre * w[k];
                gw[k] += dpre * h[k];
            }
        }
        for (g, v) in grads.get_mut(self.w).iter_mut().zip(gw) {
            *g += v;
        }
        grads.get_mut(self.b)[0] += gb;
        dh
    }
}

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::math::dot;

use super::{BlockId, Gradients, Init, ParamStore};

/// Affine map `y = W x + b` with `W` stored `out x in`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dense {
    pub input: usize,
    pub output: usize,
    pub w: BlockId,
    pub b: BlockId,
}

impl Dense {
    pub fn new<R: Rng>(store: &mut ParamStore, name: &str, input: usize, output: usize, rng: &mut R) -> Self {
        let w = store.add(
            &format!("{name}.w"),
            output,
            input,
            Init::Glorot {
                fan_in: input,
                fan_out: output,
            },
            rng,
        );
        let b = store.add(&format!("{name}.b"), output, 1, Init::Constant(0.0), rng);
        Self { input, output, w, b }
    }

    pub fn forward(&self, store: &ParamStore, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.input);
        let w = store.get(self.w);
        let b = store.get(self.b);
        (0..self.output)
            .map(|o| {
                let row = &w[o * self.input..(o + 1) * self.input];
                b[o] + dot(row, x)
            })
            .collect()
    }

    /// Accumulates parameter gradients and returns `dL/dx`.
    pub fn backward(&self, store: &ParamStore, grads: &mut Gradients, x: &[f64], dy: &[f64]) -> Vec<f64> {
        let w = store.get(self.w);
        let mut dx = vec![0.0; self.input];
        {
            let gw = grads.get_mut(self.w);
            for o in 0..self.output {
                let d = dy[o];
                if d == 0.0 {
                    continue;
                }
                let row = &w[o * self.input..(o + 1) * self.input];
                let grow = &mut gw[o * self.input..(o + 1) * self.input];
                for i in 0..self.input {
                    grow[i] += d * x[i];
                    dx[i] += d * row[i];
                }
            }
        }
        let gb = grads.get_mut(self.b);
        for o in 0..self.output {
            gb[o] += dy[o];
        }
        dx
    }
}

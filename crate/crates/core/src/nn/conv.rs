use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::math::{axpy, dot};

use super::{BlockId, Gradients, Init, ParamStore};

/// 3x3 convolution, stride 1, no padding. Tensors are `C x H x W` row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conv2d {
    pub in_channels: usize,
    pub out_channels: usize,
    /// `out x (in * 9)`
    pub w: BlockId,
    pub b: BlockId,
}

const K: usize = 3;

impl Conv2d {
    pub fn new<R: Rng>(store: &mut ParamStore, name: &str, in_channels: usize, out_channels: usize, rng: &mut R) -> Self {
        let w = store.add(
            &format!("{name}.w"),
            out_channels,
            in_channels * K * K,
            Init::Glorot {
                fan_in: in_channels * K * K,
                fan_out: out_channels * K * K,
            },
            rng,
        );
        let b = store.add(&format!("{name}.b"), out_channels, 1, Init::Constant(0.0), rng);
        Self {
            in_channels,
            out_channels,
            w,
            b,
        }
    }

    pub fn output_size(height: usize, width: usize) -> (usize, usize) {
        (height.saturating_sub(K - 1), width.saturating_sub(K - 1))
    }

    pub fn forward(&self, store: &ParamStore, input: &[f64], height: usize, width: usize) -> Vec<f64> {
        let (oh, ow) = Self::output_size(height, width);
        let w = store.get(self.w);
        let b = store.get(self.b);
        let mut out = vec![0.0; self.out_channels * oh * ow];
        for o in 0..self.out_channels {
            let plane = &mut out[o * oh * ow..(o + 1) * oh * ow];
            plane.fill(b[o]);
            for c in 0..self.in_channels {
                let src = &input[c * height * width..(c + 1) * height * width];
                let kern = &w[(o * self.in_channels + c) * K * K..(o * self.in_channels + c + 1) * K * K];
                for y in 0..oh {
                    let dst = &mut plane[y * ow..(y + 1) * ow];
                    for ky in 0..K {
                        for kx in 0..K {
                            let start = (y + ky) * width + kx;
                            axpy(kern[ky * K + kx], &src[start..start + ow], dst);
                        }
                    }
                }
            }
        }
        out
    }

    /// Returns `dL/dinput` and accumulates kernel and bias gradients.
    pub fn backward(
        &self,
        store: &ParamStore,
        grads: &mut Gradients,
        input: &[f64],
        height: usize,
        width: usize,
        dout: &[f64],
    ) -> Vec<f64> {
        let mut dinput = vec![0.0; input.len()];
        self.accumulate(store, grads, input, height, width, dout, Some(&mut dinput));
        dinput
    }

    /// Kernel and bias gradients only, for layers whose input is data.
    pub fn backward_params(
        &self,
        store: &ParamStore,
        grads: &mut Gradients,
        input: &[f64],
        height: usize,
        width: usize,
        dout: &[f64],
    ) {
        self.accumulate(store, grads, input, height, width, dout, None);
    }

    #[allow(clippy::too_many_arguments)]
    fn accumulate(
        &self,
        store: &ParamStore,
        grads: &mut Gradients,
        input: &[f64],
        height: usize,
        width: usize,
        dout: &[f64],
        mut dinput: Option<&mut [f64]>,
    ) {
        let (oh, ow) = Self::output_size(height, width);
        let w = store.get(self.w);
        let mut gw = vec![0.0; w.len()];
        let mut gb = vec![0.0; self.out_channels];
        for o in 0..self.out_channels {
            let dplane = &dout[o * oh * ow..(o + 1) * oh * ow];
            gb[o] += dplane.iter().sum::<f64>();
            for c in 0..self.in_channels {
                let src = &input[c * height * width..(c + 1) * height * width];
                let base = (o * self.in_channels + c) * K * K;
                let kern = &w[base..base + K * K];
                let gk = &mut gw[base..base + K * K];
                for y in 0..oh {
                    let drow = &dplane[y * ow..(y + 1) * ow];
                    for ky in 0..K {
                        for kx in 0..K {
                            let start = (y + ky) * width + kx;
                            gk[ky * K + kx] += dot(drow, &src[start..start + ow]);
                            if let Some(dsrc) = dinput.as_deref_mut() {
                                let off = c * height * width + start;
                                axpy(kern[ky * K + kx], drow, &mut dsrc[off..off + ow]);
                            }
                        }
                    }
                }
            }
        }
        for (g, v) in grads.get_mut(self.w).iter_mut().zip(gw) {
            *g += v;
        }
        for (g, v) in grads.get_mut(self.b).iter_mut().zip(gb) {
            *g += v;
        }
    }
}

/// 2x2 average pooling with stride 2; a trailing odd row or column is dropped.
pub fn avg_pool2(input: &[f64], channels: usize, height: usize, width: usize) -> (Vec<f64>, usize, usize) {
    let (oh, ow) = (height / 2, width / 2);
    let mut out = vec![0.0; channels * oh * ow];
    for c in 0..channels {
        let src = &input[c * height * width..];
        for y in 0..oh {
            for x in 0..ow {
                let (a, b) = (2 * y * width + 2 * x, (2 * y + 1) * width + 2 * x);
                out[c * oh * ow + y * ow + x] = 0.25 * (src[a] + src[a + 1] + src[b] + src[b + 1]);
            }
        }
    }
    (out, oh, ow)
}

pub fn avg_pool2_backward(dout: &[f64], channels: usize, height: usize, width: usize) -> Vec<f64> {
    let (oh, ow) = (height / 2, width / 2);
    let mut dinput = vec![0.0; channels * height * width];
    for c in 0..channels {
        for y in 0..oh {
            for x in 0..ow {
                let d = 0.25 * dout[c * oh * ow + y * ow + x];
                let base = c * height * width;
                for (dy, dx) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                    dinput[base + (2 * y + dy) * width + 2 * x + dx] += d;
                }
            }
        }
    }
    dinput
}

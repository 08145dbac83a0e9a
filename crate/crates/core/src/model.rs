//! Two-stream classifier over traversal-ordered landmark sequences.
//!
//! The structure stream reads landmark coordinates, the texture stream reads
//! per-landmark patch embeddings; both are reordered by the same selection
//! matrix, run through a recurrent layer and soft attention, and meet in a
//! gated fusion head. Training minimizes the mean of three focal losses
//! (fusion, structure, texture).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::LandmarkSample;
use crate::math::tanh;
use crate::nn::gradcheck::{check_blocks, GradCheckReport};
use crate::nn::{
    avg_pool2, avg_pool2_backward, focal_loss_from_logits, softmax, AttentionCache, AttentionHead, CellKind, Conv2d,
    Dense, FocalLoss, Gradients, ParamStore, Recurrent, RecurrentCache, RecurrentSpec,
};
use crate::topology::SelectionMatrix;
use crate::{Error, Result};

/// Recurrent cell used by both streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellChoice {
    #[default]
    Lstm,
    LstmNoPeephole,
    Gru,
    /// Experimental.
    BiLstm,
    /// Experimental.
    BiGru,
}

impl CellChoice {
    fn spec(self, input_dim: usize, hidden_dim: usize) -> RecurrentSpec {
        let (kind, bidirectional) = match self {
            CellChoice::Lstm => (CellKind::Lstm { peephole: true }, false),
            CellChoice::LstmNoPeephole => (CellKind::Lstm { peephole: false }, false),
            CellChoice::Gru => (CellKind::Gru, false),
            CellChoice::BiLstm => (CellKind::Lstm { peephole: true }, true),
            CellChoice::BiGru => (CellKind::Gru, true),
        };
        RecurrentSpec {
            kind,
            input_dim,
            hidden_dim,
            bidirectional,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub n: usize,
    pub num_classes: usize,
    pub hidden_dim: usize,
    /// Width of the per-stream encodings `T*` and `S*` feeding the gate.
    pub stream_dim: usize,
    /// Width of the fused representation `y`.
    pub fusion_dim: usize,
    pub cell: CellChoice,
    pub patch_size: usize,
    /// Patch-encoder output width, or the width of precomputed embeddings.
    pub embed_dim: usize,
    pub conv_channels: [usize; 2],
    /// Read per-landmark embeddings from the samples instead of encoding patches.
    pub precomputed_embeddings: bool,
    pub structure_stream: bool,
    pub texture_stream: bool,
    /// When off, the two contexts are concatenated without the `(1 + eta)` scaling.
    pub gated_fusion: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            n: 15,
            num_classes: 4,
            hidden_dim: 32,
            stream_dim: 32,
            fusion_dim: 32,
            cell: CellChoice::Lstm,
            patch_size: 17,
            embed_dim: 16,
            conv_channels: [4, 8],
            precomputed_embeddings: false,
            structure_stream: true,
            texture_stream: true,
            gated_fusion: true,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: &str| Err(Error::invalid("model config", reason));
        if self.n < 2 {
            return bad("n must be at least 2");
        }
        if self.num_classes < 2 {
            return bad("need at least 2 classes");
        }
        if self.hidden_dim == 0 || self.stream_dim == 0 || self.fusion_dim == 0 || self.embed_dim == 0 {
            return bad("layer widths must be positive");
        }
        if !self.structure_stream && !self.texture_stream {
            return bad("at least one stream must be enabled");
        }
        if self.texture_stream && !self.precomputed_embeddings {
            if self.conv_channels.contains(&0) {
                return bad("conv channels must be positive");
            }
            if PatchEncoder::flat_side(self.patch_size) == 0 {
                return Err(Error::invalid(
                    "model config",
                    format!("patch size {} too small for the encoder (need >= 10)", self.patch_size),
                ));
            }
        }
        Ok(())
    }

    /// Length of the traversal sequence.
    pub fn steps(&self) -> usize {
        2 * self.n - 1
    }

    fn context_dim(&self) -> usize {
        self.cell.spec(1, self.hidden_dim).output_dim()
    }
}

/// Small convnet mapping one `a x a` patch to an embedding:
/// conv 3x3, tanh, 2x2 average pool, conv 3x3, tanh, pool, dense, tanh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchEncoder {
    pub patch_size: usize,
    pub conv1: Conv2d,
    pub conv2: Conv2d,
    pub dense: Dense,
}

struct EncoderTrace {
    a1: Vec<f64>,
    s1: usize,
    p1: Vec<f64>,
    q1: usize,
    a2: Vec<f64>,
    s2: usize,
    p2: Vec<f64>,
    out: Vec<f64>,
}

impl PatchEncoder {
    /// Side of the final pooled map, 0 when the patch is too small.
    pub fn flat_side(a: usize) -> usize {
        if a < 3 {
            return 0;
        }
        let q1 = (a - 2) / 2;
        if q1 < 3 {
            return 0;
        }
        (q1 - 2) / 2
    }

    pub fn new<R: Rng>(store: &mut ParamStore, name: &str, config: &ModelConfig, rng: &mut R) -> Self {
        let [c1, c2] = config.conv_channels;
        let side = Self::flat_side(config.patch_size);
        Self {
            patch_size: config.patch_size,
            conv1: Conv2d::new(store, &format!("{name}.conv1"), 1, c1, rng),
            conv2: Conv2d::new(store, &format!("{name}.conv2"), c1, c2, rng),
            dense: Dense::new(store, &format!("{name}.dense"), c2 * side * side, config.embed_dim, rng),
        }
    }

    pub fn output_dim(&self) -> usize {
        self.dense.output
    }

    pub fn encode(&self, store: &ParamStore, patch: &[f64]) -> Vec<f64> {
        self.trace(store, patch).out
    }

    fn trace(&self, store: &ParamStore, patch: &[f64]) -> EncoderTrace {
        let a = self.patch_size;
        let mut a1 = self.conv1.forward(store, patch, a, a);
        a1.iter_mut().for_each(|v| *v = tanh(*v));
        let s1 = a - 2;
        let (p1, q1, _) = avg_pool2(&a1, self.conv1.out_channels, s1, s1);
        let mut a2 = self.conv2.forward(store, &p1, q1, q1);
        a2.iter_mut().for_each(|v| *v = tanh(*v));
        let s2 = q1 - 2;
        let (p2, _, _) = avg_pool2(&a2, self.conv2.out_channels, s2, s2);
        let mut out = self.dense.forward(store, &p2);
        out.iter_mut().for_each(|v| *v = tanh(*v));
        EncoderTrace {
            a1,
            s1,
            p1,
            q1,
            a2,
            s2,
            p2,
            out,
        }
    }

    fn backward(&self, store: &ParamStore, grads: &mut Gradients, patch: &[f64], t: &EncoderTrace, dout: &[f64]) {
        let dz = tanh_back(&t.out, dout);
        let dp2 = self.dense.backward(store, grads, &t.p2, &dz);
        let da2 = avg_pool2_backward(&dp2, self.conv2.out_channels, t.s2, t.s2);
        let dz2 = tanh_back(&t.a2, &da2);
        let dp1 = self.conv2.backward(store, grads, &t.p1, t.q1, t.q1, &dz2);
        let da1 = avg_pool2_backward(&dp1, self.conv1.out_channels, t.s1, t.s1);
        let dz1 = tanh_back(&t.a1, &da1);
        let a = self.patch_size;
        self.conv1.backward_params(store, grads, patch, a, a, &dz1);
    }
}

fn tanh_back(y: &[f64], dy: &[f64]) -> Vec<f64> {
    y.iter().zip(dy).map(|(y, d)| d * (1.0 - y * y)).collect()
}

/// Turns a `rows x cols` row-major matrix into `cols x rows`.
fn transpose(m: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; m.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = m[r * cols + c];
        }
    }
    out
}

/// Recurrent layer, attention and auxiliary classifier shared by both streams.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceHead {
    pub rnn: Recurrent,
    pub attention: AttentionHead,
    pub aux: Dense,
}

struct HeadTrace {
    rnn: RecurrentCache,
    attention: AttentionCache,
    aux_logits: Vec<f64>,
}

impl SequenceHead {
    fn new<R: Rng>(store: &mut ParamStore, name: &str, input_dim: usize, config: &ModelConfig, rng: &mut R) -> Self {
        let spec = config.cell.spec(input_dim, config.hidden_dim);
        let rnn = Recurrent::new(store, &format!("{name}.rnn"), spec, rng);
        let attention = AttentionHead::new(store, &format!("{name}.attn"), spec.output_dim(), rng);
        let aux = Dense::new(store, &format!("{name}.aux"), spec.output_dim(), config.num_classes, rng);
        shrink(store, aux);
        Self { rnn, attention, aux }
    }

    fn forward(&self, store: &ParamStore, inputs: &[f64]) -> HeadTrace {
        let rnn = self.rnn.forward(store, inputs);
        let attention = self.attention.forward(store, rnn.output());
        let aux_logits = self.aux.forward(store, &attention.context);
        HeadTrace {
            rnn,
            attention,
            aux_logits,
        }
    }

    /// Returns `dL/dinputs`.
    fn backward(&self, store: &ParamStore, grads: &mut Gradients, t: &HeadTrace, daux: &[f64], dcontext: &[f64]) -> Vec<f64> {
        let mut dctx = self.aux.backward(store, grads, &t.attention.context, daux);
        dctx.iter_mut().zip(dcontext).for_each(|(a, b)| *a += b);
        let dh = self
            .attention
            .backward(store, grads, t.rnn.output(), &t.attention, &dctx);
        self.rnn.backward(store, grads, &t.rnn, &dh)
    }
}

/// Output layers start small so the untrained model is close to uniform.
const OUTPUT_INIT_SCALE: f64 = 0.3;

fn shrink(store: &mut ParamStore, layer: Dense) {
    store.get_mut(layer.w).iter_mut().for_each(|v| *v *= OUTPUT_INIT_SCALE);
}

/// Structure stream: coordinates `lambda` (2 x n) reordered to `zeta = lambda U`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureStream {
    pub head: SequenceHead,
}

/// Texture stream: embeddings `Psi` (embed x n) reordered to `Psi U`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TextureStream {
    pub encoder: Option<PatchEncoder>,
    pub head: SequenceHead,
}

/// Gate and combiner.
///
/// `T* = tanh(D_t H_t)`, `S* = tanh(D_s H_s)`,
/// `eta = softmax(tanh(W_f [T*, S*] + b_f))`,
/// `y = tanh(W_y [(1 + eta_T) H_t, (1 + eta_S) H_s] + b_y)`, then a classifier on `y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionHead {
    pub texture_enc: Option<Dense>,
    pub structure_enc: Option<Dense>,
    pub gate: Option<Dense>,
    pub combine: Dense,
    pub classifier: Dense,
}

/// Intermediate values of the fusion head.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionOutput {
    pub t_star: Vec<f64>,
    pub s_star: Vec<f64>,
    pub gate_pre: Vec<f64>,
    /// `(eta_T, eta_S)`; `(0, 0)` when gating is off.
    pub eta: [f64; 2],
    pub y: Vec<f64>,
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
}

impl FusionHead {
    fn new<R: Rng>(store: &mut ParamStore, config: &ModelConfig, rng: &mut R) -> Self {
        let h = config.context_dim();
        let (texture_enc, structure_enc, gate) = if config.gated_fusion {
            (
                Some(Dense::new(store, "fusion.t_enc", h, config.stream_dim, rng)),
                Some(Dense::new(store, "fusion.s_enc", h, config.stream_dim, rng)),
                Some(Dense::new(store, "fusion.gate", 2 * config.stream_dim, 2, rng)),
            )
        } else {
            (None, None, None)
        };
        let combine = Dense::new(store, "fusion.combine", 2 * h, config.fusion_dim, rng);
        let classifier = Dense::new(store, "fusion.classifier", config.fusion_dim, config.num_classes, rng);
        shrink(store, classifier);
        Self {
            texture_enc,
            structure_enc,
            gate,
            combine,
            classifier,
        }
    }

    pub fn forward(&self, store: &ParamStore, h_texture: &[f64], h_structure: &[f64]) -> FusionOutput {
        let (t_star, s_star, gate_pre, eta) = match (self.texture_enc, self.structure_enc, self.gate) {
            (Some(te), Some(se), Some(g)) => {
                let t_star: Vec<f64> = te.forward(store, h_texture).into_iter().map(tanh).collect();
                let s_star: Vec<f64> = se.forward(store, h_structure).into_iter().map(tanh).collect();
                let cat: Vec<f64> = t_star.iter().chain(&s_star).copied().collect();
                let gate_pre: Vec<f64> = g.forward(store, &cat).into_iter().map(tanh).collect();
                let e = softmax(&gate_pre);
                (t_star, s_star, gate_pre, [e[0], e[1]])
            }
            _ => (Vec::new(), Vec::new(), Vec::new(), [0.0, 0.0]),
        };
        let z: Vec<f64> = h_texture
            .iter()
            .map(|v| (1.0 + eta[0]) * v)
            .chain(h_structure.iter().map(|v| (1.0 + eta[1]) * v))
            .collect();
        let y: Vec<f64> = self.combine.forward(store, &z).into_iter().map(tanh).collect();
        let logits = self.classifier.forward(store, &y);
        let probs = softmax(&logits);
        FusionOutput {
            t_star,
            s_star,
            gate_pre,
            eta,
            y,
            logits,
            probs,
        }
    }

    /// Returns `(dL/dH_texture, dL/dH_structure)`.
    fn backward(
        &self,
        store: &ParamStore,
        grads: &mut Gradients,
        h_texture: &[f64],
        h_structure: &[f64],
        out: &FusionOutput,
        dlogits: &[f64],
        fault: Fault,
    ) -> (Vec<f64>, Vec<f64>) {
        let h = h_texture.len();
        let eta = out.eta;
        let z: Vec<f64> = h_texture
            .iter()
            .map(|v| (1.0 + eta[0]) * v)
            .chain(h_structure.iter().map(|v| (1.0 + eta[1]) * v))
            .collect();
        let dy = self.classifier.backward(store, grads, &out.y, dlogits);
        let dpre = tanh_back(&out.y, &dy);
        let dz = self.combine.backward(store, grads, &z, &dpre);
        let scale = match fault {
            Fault::None => [1.0 + eta[0], 1.0 + eta[1]],
            Fault::DropGateScale => [1.0, 1.0],
        };
        let mut dht: Vec<f64> = dz[..h].iter().map(|d| scale[0] * d).collect();
        let mut dhs: Vec<f64> = dz[h..].iter().map(|d| scale[1] * d).collect();
        let (Some(te), Some(se), Some(g)) = (self.texture_enc, self.structure_enc, self.gate) else {
            return (dht, dhs);
        };
        let deta = [
            dz[..h].iter().zip(h_texture).map(|(d, v)| d * v).sum::<f64>(),
            dz[h..].iter().zip(h_structure).map(|(d, v)| d * v).sum::<f64>(),
        ];
        let mean = eta[0] * deta[0] + eta[1] * deta[1];
        let dgate: Vec<f64> = (0..2)
            .map(|k| eta[k] * (deta[k] - mean) * (1.0 - out.gate_pre[k] * out.gate_pre[k]))
            .collect();
        let cat: Vec<f64> = out.t_star.iter().chain(&out.s_star).copied().collect();
        let dcat = g.backward(store, grads, &cat, &dgate);
        let sd = out.t_star.len();
        let dt = tanh_back(&out.t_star, &dcat[..sd]);
        let ds = tanh_back(&out.s_star, &dcat[sd..]);
        let extra_t = te.backward(store, grads, h_texture, &dt);
        let extra_s = se.backward(store, grads, h_structure, &ds);
        dht.iter_mut().zip(&extra_t).for_each(|(a, b)| *a += b);
        dhs.iter_mut().zip(&extra_s).for_each(|(a, b)| *a += b);
        (dht, dhs)
    }
}

/// Deliberate backward-pass defects used to prove the gradient checker bites.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fault {
    #[default]
    None,
    /// Forgets the `(1 + eta)` factor when backpropagating into the contexts.
    DropGateScale,
}

/// Everything the model computes for one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub class: usize,
    pub probs: Vec<f64>,
    pub structure_probs: Option<Vec<f64>>,
    pub texture_probs: Option<Vec<f64>>,
    pub h_structure: Vec<f64>,
    pub h_texture: Vec<f64>,
    pub structure_weights: Option<Vec<f64>>,
    pub texture_weights: Option<Vec<f64>>,
    pub fusion: FusionOutput,
}

struct SampleTrace {
    structure: Option<HeadTrace>,
    texture: Option<HeadTrace>,
    encoders: Vec<EncoderTrace>,
    h_structure: Vec<f64>,
    h_texture: Vec<f64>,
    fusion: FusionOutput,
}

/// Loss terms of one sample; absent streams contribute nothing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossTerms {
    pub fusion: f64,
    pub structure: Option<f64>,
    pub texture: Option<f64>,
}

impl LossTerms {
    pub fn total(&self) -> f64 {
        let mut sum = self.fusion;
        let mut count = 1.0;
        for v in [self.structure, self.texture].into_iter().flatten() {
            sum += v;
            count += 1.0;
        }
        sum / count
    }
}

/// Mean of the three focal losses, each computed from a probability vector.
pub fn total_loss(fusion: &[f64], structure: &[f64], texture: &[f64], target: usize, focal: FocalLoss) -> Result<f64> {
    let f = |p: &[f64]| crate::nn::focal_loss(p, target, focal.gamma, focal.alpha);
    Ok((f(fusion)? + f(structure)? + f(texture)?) / 3.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaceTopoNet {
    pub config: ModelConfig,
    pub structure: Option<StructureStream>,
    pub texture: Option<TextureStream>,
    pub fusion: FusionHead,
}

impl FaceTopoNet {
    /// Builds the layer layout and a freshly initialized parameter store.
    pub fn new<R: Rng>(config: &ModelConfig, rng: &mut R) -> Result<(Self, ParamStore)> {
        config.validate()?;
        let mut store = ParamStore::new();
        let structure = config.structure_stream.then(|| StructureStream {
            head: SequenceHead::new(&mut store, "structure", 2, config, rng),
        });
        let texture = config.texture_stream.then(|| {
            let encoder = (!config.precomputed_embeddings).then(|| PatchEncoder::new(&mut store, "texture.encoder", config, rng));
            TextureStream {
                encoder,
                head: SequenceHead::new(&mut store, "texture", config.embed_dim, config, rng),
            }
        });
        let fusion = FusionHead::new(&mut store, config, rng);
        let model = Self {
            config: config.clone(),
            structure,
            texture,
            fusion,
        };
        Ok((model, store))
    }

    /// Checks that `store` has exactly this model's block layout.
    pub fn check_params(&self, store: &ParamStore) -> Result<()> {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0);
        let (_, fresh) = Self::new(&self.config, &mut rng)?;
        if fresh.len() != store.len() {
            return Err(Error::dim("parameter blocks", fresh.len(), store.len()));
        }
        for (a, b) in fresh.blocks().iter().zip(store.blocks()) {
            if a.name != b.name || a.rows != b.rows || a.cols != b.cols || a.values.len() != b.values.len() {
                return Err(Error::invalid(
                    "parameters",
                    format!("block `{}` ({}x{}) does not match `{}` ({}x{})", b.name, b.rows, b.cols, a.name, a.rows, a.cols),
                ));
            }
        }
        Ok(())
    }

    fn check_inputs(&self, sample: &LandmarkSample, u: &SelectionMatrix) -> Result<()> {
        let n = self.config.n;
        if sample.n() != n {
            return Err(Error::dim("sample landmarks", n, sample.n()));
        }
        if u.rows() != n {
            return Err(Error::dim("selection matrix rows", n, u.rows()));
        }
        if sample.label >= self.config.num_classes {
            return Err(Error::invalid("sample", format!("{}: label out of range", sample.id)));
        }
        if self.texture.is_some() {
            if self.config.precomputed_embeddings {
                match &sample.embeddings {
                    None => return Err(Error::invalid("texture input", format!("{}: missing embeddings", sample.id))),
                    Some(e) if e.dim != self.config.embed_dim => {
                        return Err(Error::dim("embedding width", self.config.embed_dim, e.dim))
                    }
                    _ => {}
                }
            } else {
                match &sample.patches {
                    None => return Err(Error::invalid("texture input", format!("{}: missing patches", sample.id))),
                    Some(p) if p.size != self.config.patch_size || p.count() != n => {
                        return Err(Error::dim(
                            "patch pixels",
                            n * self.config.patch_size * self.config.patch_size,
                            p.data.len(),
                        ))
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    /// `zeta = lambda U` as a `2 x T` matrix.
    pub fn structure_sequence(sample: &LandmarkSample, u: &SelectionMatrix) -> Result<Vec<f64>> {
        u.apply(&sample.coord_matrix(), 2)
    }

    /// `Psi` as an `embed x n` matrix.
    pub fn texture_embeddings(&self, store: &ParamStore, sample: &LandmarkSample) -> Result<Vec<f64>> {
        let (psi_rows, _) = self.embed_rows(store, sample)?;
        Ok(transpose(&psi_rows, self.config.n, self.config.embed_dim))
    }

    /// Per-landmark embeddings (`n x embed`), plus encoder traces when patches are encoded.
    fn embed_rows(&self, store: &ParamStore, sample: &LandmarkSample) -> Result<(Vec<f64>, Vec<EncoderTrace>)> {
        let stream = self
            .texture
            .as_ref()
            .ok_or_else(|| Error::invalid("texture input", "texture stream disabled"))?;
        match &stream.encoder {
            None => {
                let e = sample
                    .embeddings
                    .as_ref()
                    .ok_or_else(|| Error::invalid("texture input", "missing embeddings"))?;
                Ok((e.data.clone(), Vec::new()))
            }
            Some(enc) => {
                let patches = sample
                    .patches
                    .as_ref()
                    .ok_or_else(|| Error::invalid("texture input", "missing patches"))?;
                let traces: Vec<EncoderTrace> = (0..self.config.n).map(|i| enc.trace(store, patches.patch(i))).collect();
                let rows = traces.iter().flat_map(|t| t.out.iter().copied()).collect();
                Ok((rows, traces))
            }
        }
    }

    fn trace(&self, store: &ParamStore, sample: &LandmarkSample, u: &SelectionMatrix) -> Result<SampleTrace> {
        self.check_inputs(sample, u)?;
        let steps = u.cols();
        let ctx = self.config.context_dim();
        let structure = match &self.structure {
            Some(s) => {
                let zeta = Self::structure_sequence(sample, u)?;
                Some(s.head.forward(store, &transpose(&zeta, 2, steps)))
            }
            None => None,
        };
        let (texture, encoders) = match &self.texture {
            Some(t) => {
                let (rows, encoders) = self.embed_rows(store, sample)?;
                let e = self.config.embed_dim;
                // Psi U, already time-major: row j is psi of the j-th visited vertex.
                let mut seq = Vec::with_capacity(steps * e);
                for &v in u.column_vertices() {
                    seq.extend_from_slice(&rows[v * e..(v + 1) * e]);
                }
                (Some(t.head.forward(store, &seq)), encoders)
            }
            None => (None, Vec::new()),
        };
        let h_structure = structure
            .as_ref()
            .map_or_else(|| vec![0.0; ctx], |t| t.attention.context.clone());
        let h_texture = texture
            .as_ref()
            .map_or_else(|| vec![0.0; ctx], |t| t.attention.context.clone());
        let fusion = self.fusion.forward(store, &h_texture, &h_structure);
        Ok(SampleTrace {
            structure,
            texture,
            encoders,
            h_structure,
            h_texture,
            fusion,
        })
    }

    pub fn predict(&self, store: &ParamStore, sample: &LandmarkSample, u: &SelectionMatrix) -> Result<Prediction> {
        let t = self.trace(store, sample, u)?;
        Ok(Prediction {
            class: argmax(&t.fusion.probs),
            probs: t.fusion.probs.clone(),
            structure_probs: t.structure.as_ref().map(|s| softmax(&s.aux_logits)),
            texture_probs: t.texture.as_ref().map(|s| softmax(&s.aux_logits)),
            structure_weights: t.structure.as_ref().map(|s| s.attention.weights.clone()),
            texture_weights: t.texture.as_ref().map(|s| s.attention.weights.clone()),
            h_structure: t.h_structure,
            h_texture: t.h_texture,
            fusion: t.fusion,
        })
    }

    pub fn loss_terms(&self, store: &ParamStore, sample: &LandmarkSample, u: &SelectionMatrix, focal: FocalLoss) -> Result<LossTerms> {
        let t = self.trace(store, sample, u)?;
        let y = sample.label;
        let term = |logits: &[f64]| focal_loss_from_logits(logits, y, focal).0;
        Ok(LossTerms {
            fusion: term(&t.fusion.logits),
            structure: t.structure.as_ref().map(|s| term(&s.aux_logits)),
            texture: t.texture.as_ref().map(|s| term(&s.aux_logits)),
        })
    }

    /// Mean total loss over `samples`.
    pub fn batch_loss(&self, store: &ParamStore, samples: &[&LandmarkSample], u: &SelectionMatrix, focal: FocalLoss) -> Result<f64> {
        let mut sum = 0.0;
        for s in samples {
            sum += self.loss_terms(store, s, u, focal)?.total();
        }
        Ok(sum / samples.len().max(1) as f64)
    }

    /// Mean total loss over `samples`; the gradient of that mean is added to `grads`.
    pub fn loss_and_grad(
        &self,
        store: &ParamStore,
        samples: &[&LandmarkSample],
        u: &SelectionMatrix,
        focal: FocalLoss,
        grads: &mut Gradients,
    ) -> Result<f64> {
        self.loss_and_grad_with(store, samples, u, focal, grads, Fault::None)
    }

    #[doc(hidden)]
    pub fn loss_and_grad_with(
        &self,
        store: &ParamStore,
        samples: &[&LandmarkSample],
        u: &SelectionMatrix,
        focal: FocalLoss,
        grads: &mut Gradients,
        fault: Fault,
    ) -> Result<f64> {
        if samples.is_empty() {
            return Ok(0.0);
        }
        let scale = 1.0 / samples.len() as f64;
        let mut sum = 0.0;
        for sample in samples {
            sum += self.backward_sample(store, sample, u, focal, grads, scale, fault)?;
        }
        Ok(sum * scale)
    }

    #[allow(clippy::too_many_arguments)]
    fn backward_sample(
        &self,
        store: &ParamStore,
        sample: &LandmarkSample,
        u: &SelectionMatrix,
        focal: FocalLoss,
        grads: &mut Gradients,
        batch_scale: f64,
        fault: Fault,
    ) -> Result<f64> {
        let t = self.trace(store, sample, u)?;
        let y = sample.label;
        let terms = 1 + usize::from(t.structure.is_some()) + usize::from(t.texture.is_some());
        let w = batch_scale / terms as f64;
        let scaled = |g: Vec<f64>| -> Vec<f64> { g.into_iter().map(|v| v * w).collect() };

        let (lf, _, gf) = focal_loss_from_logits(&t.fusion.logits, y, focal);
        let mut loss = lf;
        let (dht, dhs) = self
            .fusion
            .backward(store, grads, &t.h_texture, &t.h_structure, &t.fusion, &scaled(gf), fault);

        if let (Some(stream), Some(st)) = (&self.structure, &t.structure) {
            let (l, _, g) = focal_loss_from_logits(&st.aux_logits, y, focal);
            loss += l;
            stream.head.backward(store, grads, st, &scaled(g), &dhs);
        }
        if let (Some(stream), Some(tt)) = (&self.texture, &t.texture) {
            let (l, _, g) = focal_loss_from_logits(&tt.aux_logits, y, focal);
            loss += l;
            let dseq = stream.head.backward(store, grads, tt, &scaled(g), &dht);
            if let Some(enc) = &stream.encoder {
                let e = self.config.embed_dim;
                let mut dpsi = vec![0.0; self.config.n * e];
                for (j, &v) in u.column_vertices().iter().enumerate() {
                    for k in 0..e {
                        dpsi[v * e + k] += dseq[j * e + k];
                    }
                }
                let patches = sample.patches.as_ref().expect("checked in trace");
                for (i, et) in t.encoders.iter().enumerate() {
                    let d = &dpsi[i * e..(i + 1) * e];
                    if d.iter().any(|v| *v != 0.0) {
                        enc.backward(store, grads, patches.patch(i), et, d);
                    }
                }
            }
        }
        Ok(loss / terms as f64)
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Settings of the full-model finite-difference check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckSetup {
    pub n: usize,
    pub num_classes: usize,
    pub hidden_dim: usize,
    pub samples: usize,
    pub step: f64,
}

impl Default for GradCheckSetup {
    fn default() -> Self {
        Self {
            n: 6,
            num_classes: 3,
            hidden_dim: 32,
            samples: 2,
            step: 1e-4,
        }
    }
}

/// Builds a small synthetic problem with a random tree and compares the
/// analytic gradient of every parameter block with central differences.
pub fn gradient_check(setup: GradCheckSetup, seed: u64, fault: Fault) -> Result<GradCheckReport> {
    use crate::data::{synth_generate, SyntheticConfig};
    use crate::seed::{rng_from, salt};
    use crate::topology::{euler_tour, prim_mst, selection_matrix, WeightedCompleteGraph, edge_count};

    let data = synth_generate(&SyntheticConfig {
        n: setup.n,
        num_classes: setup.num_classes,
        samples_per_class: setup.samples.div_ceil(setup.num_classes).max(1),
        seed,
        ..SyntheticConfig::default()
    })?;
    let step = (data.len() / setup.samples.max(1)).max(1);
    let samples: Vec<&LandmarkSample> = data.samples.iter().step_by(step).take(setup.samples).collect();
    let mut rng = rng_from(seed, salt::INNER_INIT);
    let weights = (0..edge_count(setup.n)).map(|_| rng.random::<f64>()).collect();
    let tree = prim_mst(&WeightedCompleteGraph::new(setup.n, weights)?, 0)?;
    let u = selection_matrix(&euler_tour(&tree));
    let config = ModelConfig {
        n: setup.n,
        num_classes: setup.num_classes,
        hidden_dim: setup.hidden_dim,
        ..ModelConfig::default()
    };
    let (model, mut store) = FaceTopoNet::new(&config, &mut rng)?;
    let focal = FocalLoss::default();
    let mut grads = Gradients::zeros_like(&store);
    model.loss_and_grad_with(&store, &samples, &u, focal, &mut grads, fault)?;
    Ok(check_blocks(&mut store, &grads, setup.step, |s| {
        model.batch_loss(s, &samples, &u, focal).unwrap_or(f64::NAN)
    }))
}

//! Small differentiable kernels with hand-written backward passes.
//!
//! Everything is `f64` and row-major. Layers hold [`BlockId`]s into a shared
//! [`ParamStore`]; backward passes accumulate into a matching [`Gradients`].

mod attention;
mod conv;
mod dense;
pub mod gradcheck;
mod ops;
mod params;
mod recurrent;

pub use attention::{AttentionCache, AttentionHead};
pub use conv::{avg_pool2, avg_pool2_backward, Conv2d};
pub use dense::Dense;
pub use ops::{focal_loss, focal_loss_from_logits, softmax, FocalLoss, LOG_FLOOR};
pub use params::{Adam, AdamConfig, Block, BlockId, Gradients, Init, ParamStore};
pub use recurrent::{
    CellKind, Gru, GruCache, Lstm, LstmCache, LstmSpec, Recurrent, RecurrentCache, RecurrentSpec,
};

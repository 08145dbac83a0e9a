//! Central finite-difference checks of analytic gradients.

use alloc::string::String;
use alloc::vec::Vec;

use super::{Gradients, ParamStore};
use crate::math::sqrt;

/// Norms below this are treated as zero when forming relative errors.
pub const NORM_FLOOR: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct BlockReport {
    pub name: String,
    pub len: usize,
    pub analytic_norm: f64,
    pub numeric_norm: f64,
    /// `|a - n| / max(|a|, |n|, NORM_FLOOR)` over the whole block.
    pub rel_error: f64,
    pub max_abs_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GradCheckReport {
    pub blocks: Vec<BlockReport>,
}

impl GradCheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.blocks.iter().map(|b| b.rel_error).fold(0.0, f64::max)
    }

    pub fn worst(&self) -> Option<&BlockReport> {
        self.blocks
            .iter()
            .max_by(|a, b| a.rel_error.total_cmp(&b.rel_error))
    }

    pub fn passes(&self, tolerance: f64) -> bool {
        self.blocks.iter().all(|b| b.rel_error < tolerance)
    }
}

/// Perturbs every scalar of every block by `+-step` and compares the central
/// difference of `loss` with `analytic`. Parameters are restored afterwards.
pub fn check_blocks<F>(store: &mut ParamStore, analytic: &Gradients, step: f64, loss: F) -> GradCheckReport
where
    F: Fn(&ParamStore) -> f64,
{
    let ids: Vec<_> = store.ids().collect();
    let mut blocks = Vec::with_capacity(ids.len());
    for id in ids {
        let len = store.get(id).len();
        let mut numeric = Vec::with_capacity(len);
        for k in 0..len {
            let orig = store.get(id)[k];
            store.get_mut(id)[k] = orig + step;
            let up = loss(store);
            store.get_mut(id)[k] = orig - step;
            let down = loss(store);
            store.get_mut(id)[k] = orig;
            numeric.push((up - down) / (2.0 * step));
        }
        let a = analytic.get(id);
        let an = sqrt(a.iter().map(|v| v * v).sum());
        let nn = sqrt(numeric.iter().map(|v| v * v).sum());
        let diff = sqrt(a.iter().zip(&numeric).map(|(x, y)| (x - y) * (x - y)).sum());
        let max_abs_diff = a
            .iter()
            .zip(&numeric)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        blocks.push(BlockReport {
            name: store.block(id).name.clone(),
            len,
            analytic_norm: an,
            numeric_norm: nn,
            rel_error: diff / an.max(nn).max(NORM_FLOOR),
            max_abs_diff,
        });
    }
    GradCheckReport { blocks }
}

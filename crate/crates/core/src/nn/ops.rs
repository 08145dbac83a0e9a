use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math::{exp, ln, powf};
use crate::{Error, Result};

/// Probabilities below this are clamped before taking the log.
pub const LOG_FLOOR: f64 = 1e-12;

/// Max-shifted softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&z| exp(z - max)).collect();
    let sum: f64 = out.iter().sum();
    for p in &mut out {
        *p /= sum;
    }
    out
}

/// Focusing and balancing parameters of the focal loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FocalLoss {
    pub gamma: f64,
    pub alpha: f64,
}

impl Default for FocalLoss {
    fn default() -> Self {
        Self {
            gamma: 2.0,
            alpha: 0.25,
        }
    }
}

impl FocalLoss {
    /// `-alpha (1 - p)^gamma ln(max(p, floor))` for the target probability `p`.
    pub fn value(&self, p: f64) -> f64 {
        let pf = p.max(LOG_FLOOR);
        -self.alpha * powf(1.0 - p, self.gamma) * ln(pf)
    }

    /// Derivative of [`FocalLoss::value`] with respect to `p`.
    pub fn dvalue(&self, p: f64) -> f64 {
        let q = 1.0 - p;
        let log_term = if p > LOG_FLOOR {
            // d/dp of -(1-p)^g ln p = g (1-p)^(g-1) ln p - (1-p)^g / p
            let modulating = if q > 0.0 { self.gamma * powf(q, self.gamma - 1.0) * ln(p) } else { 0.0 };
            modulating - powf(q, self.gamma) / p
        } else {
            // ln is clamped here, only the modulating factor varies.
            if q > 0.0 {
                self.gamma * powf(q, self.gamma - 1.0) * ln(LOG_FLOOR)
            } else {
                0.0
            }
        };
        self.alpha * log_term
    }
}

/// Focal loss of a probability vector against `target`.
pub fn focal_loss(probs: &[f64], target: usize, gamma: f64, alpha: f64) -> Result<f64> {
    if target >= probs.len() {
        return Err(Error::invalid(
            "focal loss target",
            format!("class {target} out of range 0..{}", probs.len()),
        ));
    }
    if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::invalid("distribution", "probabilities must lie in [0, 1]"));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::invalid("distribution", format!("probabilities sum to {sum}")));
    }
    Ok(FocalLoss { gamma, alpha }.value(probs[target]))
}

/// Softmax followed by focal loss. Returns the loss, the probabilities and the
/// gradient with respect to the logits.
pub fn focal_loss_from_logits(logits: &[f64], target: usize, focal: FocalLoss) -> (f64, Vec<f64>, Vec<f64>) {
    let probs = softmax(logits);
    let p = probs[target];
    let loss = focal.value(p);
    let dl_dp = focal.dvalue(p);
    let grad = probs
        .iter()
        .enumerate()
        .map(|(k, &pk)| {
            let indicator = if k == target { 1.0 } else { 0.0 };
            dl_dp * p * (indicator - pk)
        })
        .collect();
    (loss, probs, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn softmax_sums_to_one_and_is_shift_invariant() {
        let z = [1.0, -2.0, 0.5, 3.0];
        let p = softmax(&z);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let shifted: Vec<f64> = z.iter().map(|v| v + 100.0).collect();
        for (a, b) in p.iter().zip(softmax(&shifted)) {
            assert!((a - b).abs() < 1e-12);
        }
        let big = softmax(&[1000.0, 1000.0]);
        assert_eq!(big, vec![0.5, 0.5]);
    }

    #[test]
    fn focal_reduces_to_cross_entropy() {
        let l = focal_loss(&[0.5, 0.5], 0, 0.0, 1.0).unwrap();
        assert!((l - core::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn focal_default_setting_at_half() {
        let l = focal_loss(&[0.5, 0.3, 0.2], 0, 2.0, 0.25).unwrap();
        let expected = 0.25 * 0.25 * core::f64::consts::LN_2;
        assert!((l - expected).abs() < 1e-15);
        assert!((l - 0.043322).abs() < 1e-6);
    }

    #[test]
    fn focal_decreases_to_zero_as_target_prob_grows() {
        let mut prev = f64::INFINITY;
        for k in 1..=100 {
            let p = k as f64 / 100.0;
            let l = FocalLoss::default().value(p);
            assert!(l >= 0.0 && l < prev);
            prev = l;
        }
        assert_eq!(prev, 0.0);
    }

    #[test]
    fn focal_rejects_bad_distributions() {
        assert!(focal_loss(&[0.5, 0.6], 0, 2.0, 0.25).is_err());
        assert!(focal_loss(&[1.5, -0.5], 0, 2.0, 0.25).is_err());
        assert!(focal_loss(&[0.5, 0.5], 2, 2.0, 0.25).is_err());
    }

    #[test]
    fn saturated_target_has_finite_gradient() {
        let (l, p, g) = focal_loss_from_logits(&[800.0, 0.0, 0.0], 0, FocalLoss::default());
        assert_eq!(p[0], 1.0);
        assert_eq!(l, 0.0);
        assert!(g.iter().all(|v| v.is_finite()));
        let (l, _, g) = focal_loss_from_logits(&[-800.0, 0.0], 0, FocalLoss::default());
        assert!(l.is_finite());
        assert!(g.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn logit_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for gamma in [0.0, 0.5, 2.0] {
            let focal = FocalLoss { gamma, alpha: 0.25 };
            let z: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
            let (_, _, g) = focal_loss_from_logits(&z, 1, focal);
            for k in 0..4 {
                let h = 1e-5;
                let mut zp = z.clone();
                zp[k] += h;
                let mut zm = z.clone();
                zm[k] -= h;
                let fd = (focal_loss_from_logits(&zp, 1, focal).0 - focal_loss_from_logits(&zm, 1, focal).0)
                    / (2.0 * h);
                assert!((fd - g[k]).abs() < 1e-8, "gamma {gamma} k {k}: {fd} vs {}", g[k]);
            }
        }
    }
}

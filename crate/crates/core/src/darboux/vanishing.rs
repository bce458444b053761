//! One-sided finite-difference estimates of `f^(j)(1)` under refinement.

use crate::error::{Error, Result};
use crate::Verdict;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub const DEFAULT_SPACING: f64 = 0.2;
pub const LEVELS: usize = 5;
/// Halvings at the fine end of the refinement that decide the tag.
pub const ASYMPTOTIC_HALVINGS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VanishingTag {
    /// Every estimate is at the roundoff floor of its stencil.
    AtFloor,
    /// Each of the last [`ASYMPTOTIC_HALVINGS`] halvings shrinks the estimate
    /// at least twofold, or reaches the floor.
    Shrinking,
    NotVanishing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeEstimate {
    pub order: usize,
    pub spacings: Vec<f64>,
    pub estimates: Vec<f64>,
    pub floors: Vec<f64>,
    pub tag: VanishingTag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VanishingReport {
    pub max_order: usize,
    pub base_spacing: f64,
    pub noise: f64,
    pub orders: Vec<DerivativeEstimate>,
    pub verdict: Verdict,
}

/// Largest order whose backward stencil fits in `[0, 1]` at this spacing.
pub fn max_resolvable_order(spacing: f64) -> usize {
    ((1.0 / spacing + 1e-9).floor() as usize).saturating_sub(1)
}

/// Weights `w_i` with `sum w_i f(-i) = f^(j)(0)` for nodes `0, -1, ..., -(j+1)`.
fn backward_weights(order: usize) -> Vec<f64> {
    let k = order + 2;
    let v = DMatrix::from_fn(k, k, |row, col| (-(col as f64)).powi(row as i32));
    let mut rhs = DVector::zeros(k);
    rhs[order] = (1..=order).map(|x| x as f64).product();
    v.lu().solve(&rhs).expect("Vandermonde matrix on distinct nodes").iter().copied().collect()
}

/// Estimates `f^(j)(1)` for `j <= max_order` at spacings `spacing / 2^k`.
/// `noise` is an absolute error level of `f`; with roundoff it sets the
/// floor below which an estimate counts as zero.
pub fn vanishing_diagnostic<F>(f: F, max_order: usize, spacing: f64, noise: f64) -> Result<VanishingReport>
where
    F: Fn(f64) -> f64,
{
    if !(spacing > 0.0 && spacing < 1.0) {
        return Err(Error::Invalid(format!("spacing must lie in (0, 1), got {spacing}")));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::Invalid(format!("noise level must be finite and non-negative, got {noise}")));
    }
    let max = max_resolvable_order(spacing);
    if max_order > max {
        return Err(Error::OrderTooLarge { requested: max_order, max });
    }
    let orders: Vec<DerivativeEstimate> = (0..=max_order)
        .map(|order| {
            let w = backward_weights(order);
            let wsum: f64 = w.iter().map(|x| x.abs()).sum();
            let mut spacings = Vec::with_capacity(LEVELS);
            let mut estimates = Vec::with_capacity(LEVELS);
            let mut floors = Vec::with_capacity(LEVELS);
            for level in 0..LEVELS {
                let h = spacing / (1u32 << level) as f64;
                let vals: Vec<f64> = (0..w.len()).map(|i| f(1.0 - i as f64 * h)).collect();
                let scale = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                let hj = h.powi(order as i32);
                spacings.push(h);
                estimates.push(w.iter().zip(&vals).map(|(a, b)| a * b).sum::<f64>() / hj);
                floors.push((1e3 * f64::EPSILON * scale + noise) * wsum / hj);
            }
            let at_floor = |k: usize| estimates[k].abs() <= floors[k];
            let tag = if (0..LEVELS).all(at_floor) {
                VanishingTag::AtFloor
            } else if (LEVELS - ASYMPTOTIC_HALVINGS..LEVELS)
                .all(|k| at_floor(k) || estimates[k].abs() * 2.0 <= estimates[k - 1].abs())
            {
                VanishingTag::Shrinking
            } else {
                VanishingTag::NotVanishing
            };
            DerivativeEstimate { order, spacings, estimates, floors, tag }
        })
        .collect();
    let verdict = Verdict::from_pass(orders.iter().all(|o| o.tag != VanishingTag::NotVanishing));
    Ok(VanishingReport { max_order, base_spacing: spacing, noise, orders, verdict })
}

//! Directional-consistency (DC) heterogeneity levels.
//!
//! Under the hierarchical model with `γ = φ²/(φ²+ω²)`, the probability that a
//! study-level effect shares the sign of the grand effect is
//!
//! ```text
//! p(γ) = √(2/π) ∫₀^∞ Φ(√((1−γ)/γ)·ξ) e^{−ξ²/2} dξ = ½ + arcsin(√(1−γ))/π
//! ```
//!
//! The closed form is the orthant probability of a bivariate normal with
//! correlation `√(1−γ)`. It is used here; the integral form is checked against
//! it by quadrature in the test suite.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Default sign-consistency targets defining the heterogeneity grid.
pub const DEFAULT_TARGETS: [f64; 4] = [1.0, 0.99, 0.975, 0.95];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaLevel {
    pub target_prob: f64,
    pub gamma: f64,
}

/// Sign-consistency probability `p(γ)`; monotone decreasing from 1 to ½.
pub fn sign_consistency_prob(gamma: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::arg(
            "gamma",
            format!("must lie in [0, 1], got {gamma}"),
        ));
    }
    Ok(0.5 + (1.0 - gamma).sqrt().asin() / PI)
}

/// Inverts [`sign_consistency_prob`] by bisection on `[0, 1]`.
pub fn gamma_for_prob(target: f64) -> Result<f64> {
    if !(target > 0.5 && target <= 1.0) {
        return Err(Error::arg(
            "target",
            format!("sign-consistency target must lie in (0.5, 1], got {target}"),
        ));
    }
    if target == 1.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        // p is decreasing: too consistent means gamma must grow
        if sign_consistency_prob(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Heterogeneity levels for arbitrary targets, sorted by ascending `γ`.
pub fn gamma_levels(targets: &[f64]) -> Result<Vec<GammaLevel>> {
    let mut levels = targets
        .iter()
        .map(|&t| {
            Ok(GammaLevel {
                target_prob: t,
                gamma: gamma_for_prob(t)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    levels.sort_by(|a, b| a.gamma.total_cmp(&b.gamma));
    Ok(levels)
}

/// The four default levels at targets 1.00, 0.99, 0.975, 0.95.
pub fn default_gamma_set() -> Vec<GammaLevel> {
    gamma_levels(&DEFAULT_TARGETS).expect("default targets are valid")
}

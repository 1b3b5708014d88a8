//! Prior-predictive replication p-values for an original/replication pair.
//!
//! Conditioning on the original study, each reference component yields a
//! normal posterior for the grand effect and hence a normal predictive law for
//! the replication estimate. Mixing with the component posterior weights gives
//! a mixture-normal predictive distribution; p-values are its tail areas and
//! central predictive intervals are its quantiles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    PredictiveInterval, PrpResult, ReferenceModel, ReplicationPair, Sidedness, StudySummary,
};
use crate::special::{normal_cdf, normal_ln_pdf, normal_sf};

/// One normal component of a [`MixtureNormal`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalComponent {
    pub weight: f64,
    pub mean: f64,
    pub variance: f64,
}

/// Finite mixture of normals with positive variances and unit total weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureNormal {
    components: Vec<NormalComponent>,
}

impl MixtureNormal {
    pub fn new(components: Vec<NormalComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::EmptyGrid);
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Numeric(format!("mixture weights sum to {total}")));
        }
        if components
            .iter()
            .any(|c| !(c.variance > 0.0 && c.variance.is_finite() && c.mean.is_finite()))
        {
            return Err(Error::Numeric(
                "mixture components need finite means and positive variances".into(),
            ));
        }
        Ok(Self { components })
    }

    pub fn components(&self) -> &[NormalComponent] {
        &self.components
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.weight * normal_cdf((x - c.mean) / c.variance.sqrt()))
            .sum::<f64>()
            .clamp(0.0, 1.0)
    }

    /// Upper tail `P(X ≥ x)`, summed per component to avoid `1 − F` cancellation.
    pub fn sf(&self, x: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.weight * normal_sf((x - c.mean) / c.variance.sqrt()))
            .sum::<f64>()
            .clamp(0.0, 1.0)
    }

    pub fn mean(&self) -> f64 {
        self.components.iter().map(|c| c.weight * c.mean).sum()
    }

    /// Quantile by bisection on the CDF, bracketed at ±12 sd of the widest component.
    pub fn quantile(&self, p: f64) -> f64 {
        let sd_max = self
            .components
            .iter()
            .map(|c| c.variance.sqrt())
            .fold(0.0, f64::max);
        let lo_mean = self
            .components
            .iter()
            .map(|c| c.mean)
            .fold(f64::INFINITY, f64::min);
        let hi_mean = self
            .components
            .iter()
            .map(|c| c.mean)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut lo = lo_mean - 12.0 * sd_max;
        let mut hi = hi_mean + 12.0 * sd_max;
        let tol = 1e-10 * sd_max.max(1e-300);
        for _ in 0..400 {
            if hi - lo <= tol {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }
}

/// Posterior probabilities of the reference components given the original study.
///
/// `w_k ∝ π_k · N(β̂_orig | 0, ω²_k + φ²_k + σ²_orig)`, normalized in log space.
pub fn component_posterior_weights(
    orig: &StudySummary,
    model: &ReferenceModel,
) -> Result<Vec<f64>> {
    let log_w: Vec<f64> = model
        .components()
        .iter()
        .map(|c| {
            c.weight.ln() + normal_ln_pdf(orig.beta_hat, 0.0, c.total_variance() + orig.variance())
        })
        .collect();
    normalize_log_weights(&log_w)
}

pub(crate) fn normalize_log_weights(log_w: &[f64]) -> Result<Vec<f64>> {
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::Numeric(
            "all component likelihoods underflow or are undefined".into(),
        ));
    }
    let unnorm: Vec<f64> = log_w.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = unnorm.iter().sum();
    Ok(unnorm.into_iter().map(|u| u / total).collect())
}

/// Mixture-normal predictive law of a replication estimate with standard error `sigma_rep`.
pub fn predictive_distribution(
    orig: &StudySummary,
    sigma_rep: f64,
    model: &ReferenceModel,
) -> Result<MixtureNormal> {
    if !(sigma_rep.is_finite() && sigma_rep > 0.0) {
        return Err(Error::arg(
            "sigma_rep",
            format!("must be positive and finite, got {sigma_rep}"),
        ));
    }
    let weights = component_posterior_weights(orig, model)?;
    let rep_var = sigma_rep * sigma_rep;
    let components = model
        .components()
        .iter()
        .zip(weights)
        .map(|(c, weight)| {
            let noise = orig.variance() + c.phi_sq;
            // ω² = 0 pins β̄ at zero: posterior is a point mass
            let (post_mean, post_var) = if c.omega_sq == 0.0 {
                (0.0, 0.0)
            } else {
                let v = 1.0 / (1.0 / noise + 1.0 / c.omega_sq);
                (v * orig.beta_hat / noise, v)
            };
            NormalComponent {
                weight,
                mean: post_mean,
                variance: post_var + c.phi_sq + rep_var,
            }
        })
        .collect();
    MixtureNormal::new(components)
}

/// Tail probability of `x` under `dist` with the requested sidedness.
pub fn tail_p_value(dist: &MixtureNormal, x: f64, sidedness: Sidedness) -> f64 {
    match sidedness {
        Sidedness::OneSidedHigh => dist.sf(x),
        Sidedness::OneSidedLow => dist.cdf(x),
        Sidedness::TwoSided => (2.0 * dist.cdf(x).min(dist.sf(x))).min(1.0),
    }
}

/// Prior-predictive replication p-value using `T(X) = β̂`.
pub fn prior_prp(
    pair: &ReplicationPair,
    model: &ReferenceModel,
    sidedness: Sidedness,
) -> Result<PrpResult> {
    let dist = predictive_distribution(&pair.original, pair.replication.se, model)?;
    let x = pair.replication.beta_hat;
    Ok(PrpResult {
        p_value: tail_p_value(&dist, x, sidedness),
        sidedness,
        statistic_name: "beta_hat".into(),
        statistic_value: x,
        component_posteriors: component_posterior_weights(&pair.original, model)?,
        mc_stderr: None,
        predictive_interval: None,
    })
}

/// One-sided p-value for shrinkage of the replication relative to the original,
/// based on `T_pb = β̂_rep / β̂_orig` with the original held fixed.
pub fn prior_prp_pub_bias(pair: &ReplicationPair, model: &ReferenceModel) -> Result<PrpResult> {
    let orig = pair.original.beta_hat;
    if orig == 0.0 {
        return Err(Error::UndefinedRatio);
    }
    let dist = predictive_distribution(&pair.original, pair.replication.se, model)?;
    let x = pair.replication.beta_hat;
    // dividing by a negative original flips the inequality
    let p = if orig > 0.0 { dist.cdf(x) } else { dist.sf(x) };
    Ok(PrpResult {
        p_value: p,
        sidedness: Sidedness::OneSidedLow,
        statistic_name: "T_pb".into(),
        statistic_value: x / orig,
        component_posteriors: component_posterior_weights(&pair.original, model)?,
        mc_stderr: None,
        predictive_interval: None,
    })
}

/// Central `(1 − α)` predictive interval for a replication with standard error `sigma_rep`.
pub fn predictive_interval(
    orig: &StudySummary,
    sigma_rep: f64,
    model: &ReferenceModel,
    alpha: f64,
) -> Result<PredictiveInterval> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::arg(
            "alpha",
            format!("must lie in (0, 1), got {alpha}"),
        ));
    }
    let dist = predictive_distribution(orig, sigma_rep, model)?;
    Ok(PredictiveInterval {
        lower: dist.quantile(0.5 * alpha),
        upper: dist.quantile(1.0 - 0.5 * alpha),
        level: 1.0 - alpha,
    })
}

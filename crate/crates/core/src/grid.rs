//! Data-adaptive total-variance grids and the default reference model.
//!
//! Rather than fixing ω² directly, a set Λ of total variances `λ² = ω² + φ²`
//! is chosen from the data and crossed with the heterogeneity levels Γ,
//! giving `ω² = (1−γ)λ²` and `φ² = γλ²`.

use serde::{Deserialize, Serialize};

use crate::dc::{self, GammaLevel};
use crate::error::{Error, Result};
use crate::model::{HyperComponent, ReferenceModel, ReplicationPair, StudySummary};
use crate::special::chi2_quantile;

/// Three positive total variances in ascending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaSet {
    values: Vec<f64>,
}

impl LambdaSet {
    /// Sorts the values; each must be positive and finite.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::arg(
                "lambda_sq",
                format!("total variances must be positive and finite, got {v}"),
            ));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// First, second and third quartiles of χ²₁.
pub fn chi2_1_quartiles() -> [f64; 3] {
    [
        chi2_quantile(0.25, 1.0),
        chi2_quantile(0.5, 1.0),
        chi2_quantile(0.75, 1.0),
    ]
}

/// Λ for the two-group scenario: `(β̂²+σ²)/q` for the χ²₁ quartiles `q₃, q₂, q₁`.
pub fn two_group_lambda(orig: &StudySummary) -> LambdaSet {
    let scale = orig.beta_hat * orig.beta_hat + orig.variance();
    let [q1, q2, q3] = chi2_1_quartiles();
    LambdaSet {
        values: vec![scale / q3, scale / q2, scale / q1],
    }
}

/// Fixed-effect (inverse-variance) pooled estimate and its standard error.
pub fn fixed_effect_estimate(studies: &[StudySummary]) -> (f64, f64) {
    let (mut sw, mut swb) = (0.0, 0.0);
    for s in studies {
        let w = 1.0 / s.variance();
        sw += w;
        swb += w * s.beta_hat;
    }
    (swb / sw, (1.0 / sw).sqrt())
}

/// Λ for the exchangeable scenario: `{(β̄̂−se)², β̄̂², (β̄̂+se)²}`, floored away from zero.
pub fn exchangeable_lambda(studies: &[StudySummary]) -> Result<LambdaSet> {
    if studies.len() < 2 {
        return Err(Error::TooFewStudies {
            required: 2,
            got: studies.len(),
        });
    }
    let (pooled, se) = fixed_effect_estimate(studies);
    let max_var = studies.iter().map(|s| s.variance()).fold(0.0, f64::max);
    let floor = f64::max(1e-8, 1e-6 * max_var);
    let mut values: Vec<f64> = [(pooled - se), pooled, (pooled + se)]
        .iter()
        .map(|v| (v * v).max(floor))
        .collect();
    values.sort_by(f64::total_cmp);
    Ok(LambdaSet { values })
}

/// Cartesian product Λ × Γ with equal weights, λ-major order.
pub fn reference_model_from(lambda: &LambdaSet, gammas: &[GammaLevel]) -> Result<ReferenceModel> {
    if gammas.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let w = 1.0 / (lambda.values.len() * gammas.len()) as f64;
    let mut components = Vec::with_capacity(lambda.values.len() * gammas.len());
    for &l in &lambda.values {
        for g in gammas {
            components.push(HyperComponent::from_lambda_gamma(l, g.gamma, w)?);
        }
    }
    ReferenceModel::equal_weight(components)
}

/// Input to the default model builder.
#[derive(Debug, Clone, Copy)]
pub enum ScenarioInput<'a> {
    TwoGroup(&'a ReplicationPair),
    Exchangeable(&'a [StudySummary]),
}

/// Data-adaptive total variances for either scenario.
pub fn default_lambda(input: ScenarioInput<'_>) -> Result<LambdaSet> {
    match input {
        ScenarioInput::TwoGroup(pair) => Ok(two_group_lambda(&pair.original)),
        ScenarioInput::Exchangeable(studies) => exchangeable_lambda(studies),
    }
}

/// The 12-component default model (3 λ² values × 4 DC levels).
pub fn default_reference_model(input: ScenarioInput<'_>) -> Result<ReferenceModel> {
    reference_model_from(&default_lambda(input)?, &dc::default_gamma_set())
}

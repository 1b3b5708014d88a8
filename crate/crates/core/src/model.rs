//! Generative-model types shared by every engine.
//!
//! A study is summarized by its effect estimate and standard error. The
//! reference reproducible model is a finite mixture of hierarchical normal
//! models, one per grid point `(ω², φ², γ)`:
//!
//! ```text
//! β̄   ~ N(0, ω²)
//! βᵢ  = β̄ + N(0, φ²)
//! β̂ᵢ  = βᵢ + N(0, σᵢ²)
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One experiment's sufficient statistic `(β̂, σ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySummary {
    pub id: String,
    pub beta_hat: f64,
    pub se: f64,
}

impl StudySummary {
    pub fn new(id: impl Into<String>, beta_hat: f64, se: f64) -> Result<Self> {
        let id = id.into();
        if !beta_hat.is_finite() {
            return Err(Error::InvalidStudy {
                id,
                reason: format!("beta_hat must be finite, got {beta_hat}"),
            });
        }
        if !(se.is_finite() && se > 0.0) {
            return Err(Error::InvalidStudy {
                id,
                reason: format!("se must be positive and finite, got {se}"),
            });
        }
        Ok(Self { id, beta_hat, se })
    }

    pub fn variance(&self) -> f64 {
        self.se * self.se
    }
}

/// An original experiment and its designated replication. Roles are not exchangeable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationPair {
    pub original: StudySummary,
    pub replication: StudySummary,
}

impl ReplicationPair {
    pub fn new(original: StudySummary, replication: StudySummary) -> Self {
        Self {
            original,
            replication,
        }
    }
}

/// One grid point of the reference model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperComponent {
    pub omega_sq: f64,
    pub phi_sq: f64,
    pub gamma: f64,
    pub weight: f64,
}

impl HyperComponent {
    /// Builds a component from `(ω², γ)`, deriving `φ² = ω²·γ/(1−γ)`.
    pub fn from_omega_gamma(omega_sq: f64, gamma: f64, weight: f64) -> Result<Self> {
        check_variance("omega_sq", omega_sq)?;
        check_gamma(gamma)?;
        check_weight(weight)?;
        let phi_sq = if gamma == 0.0 || omega_sq == 0.0 {
            0.0
        } else if gamma == 1.0 {
            return Err(Error::UnboundedHeterogeneity { omega_sq });
        } else {
            omega_sq * gamma / (1.0 - gamma)
        };
        Ok(Self {
            omega_sq,
            phi_sq,
            gamma,
            weight,
        })
    }

    /// Builds a component from total variance `λ² = ω² + φ²` split by `γ`.
    pub fn from_lambda_gamma(lambda_sq: f64, gamma: f64, weight: f64) -> Result<Self> {
        check_variance("lambda_sq", lambda_sq)?;
        check_gamma(gamma)?;
        check_weight(weight)?;
        Ok(Self {
            omega_sq: (1.0 - gamma) * lambda_sq,
            phi_sq: gamma * lambda_sq,
            gamma,
            weight,
        })
    }

    pub fn total_variance(&self) -> f64 {
        self.omega_sq + self.phi_sq
    }
}

fn check_variance(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::arg(
            name,
            format!("must be a finite non-negative variance, got {v}"),
        ))
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if (0.0..=1.0).contains(&gamma) {
        Ok(())
    } else {
        Err(Error::arg(
            "gamma",
            format!("must lie in [0, 1], got {gamma}"),
        ))
    }
}

fn check_weight(w: f64) -> Result<()> {
    if w.is_finite() && w > 0.0 && w <= 1.0 {
        Ok(())
    } else {
        Err(Error::arg("weight", format!("must lie in (0, 1], got {w}")))
    }
}

/// The reference reproducible model: an ordered, nonempty mixture of grid points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceModel {
    components: Vec<HyperComponent>,
}

impl ReferenceModel {
    /// Wraps components whose weights already sum to one (within 1e-12).
    pub fn new(components: Vec<HyperComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::EmptyGrid);
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::arg(
                "components",
                format!("weights sum to {total}, expected 1"),
            ));
        }
        Ok(Self { components })
    }

    /// Assigns equal prior mass to every component, overriding their weights.
    pub fn equal_weight(mut components: Vec<HyperComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::EmptyGrid);
        }
        let w = 1.0 / components.len() as f64;
        for c in &mut components {
            c.weight = w;
        }
        Ok(Self { components })
    }

    pub fn components(&self) -> &[HyperComponent] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Keeps only the components satisfying `keep`, re-weighting equally.
    pub fn restrict(&self, keep: impl Fn(&HyperComponent) -> bool) -> Result<Self> {
        Self::equal_weight(
            self.components
                .iter()
                .copied()
                .filter(|c| keep(c))
                .collect(),
        )
    }
}

/// Equal-weight reference model over a grid of `(ω², γ)` pairs.
pub fn make_reference_model(grid: &[(f64, f64)]) -> Result<ReferenceModel> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let w = 1.0 / grid.len() as f64;
    let components = grid
        .iter()
        .map(|&(omega_sq, gamma)| HyperComponent::from_omega_gamma(omega_sq, gamma, w))
        .collect::<Result<Vec<_>>>()?;
    Ok(ReferenceModel { components })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sidedness {
    OneSidedLow,
    OneSidedHigh,
    TwoSided,
}

/// A replication p-value with the diagnostics that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrpResult {
    pub p_value: f64,
    pub sidedness: Sidedness,
    pub statistic_name: String,
    pub statistic_value: f64,
    pub component_posteriors: Vec<f64>,
    pub mc_stderr: Option<f64>,
    pub predictive_interval: Option<PredictiveInterval>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictiveInterval {
    pub lower: f64,
    pub upper: f64,
    /// Coverage `1 − α`.
    pub level: f64,
}

impl PredictiveInterval {
    /// Open-interval membership; the endpoints themselves count as excluded.
    pub fn contains(&self, x: f64) -> bool {
        self.lower < x && x < self.upper
    }

    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }
}

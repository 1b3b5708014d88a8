//! Posterior-predictive replication p-values for exchangeable studies.
//!
//! All conditionals are conjugate, so the posterior is sampled exactly:
//!
//! 1. draw a component `k` with probability proportional to its marginal
//!    likelihood `N(β̂ | 0, Σ_k)`, `Σ_k = diag(φ²_k + σᵢ²) + ω²_k·11ᵀ`;
//! 2. draw the grand effect `β̄ | β̂, k`;
//! 3. draw each study effect `βᵢ | β̄, β̂ᵢ, k`;
//! 4. replicate `β̂′ᵢ ~ N(βᵢ, σᵢ²)`.
//!
//! The p-value is the fraction of draws whose replicated test quantity is at
//! least as extreme as the observed one, both evaluated at the sampled latent
//! parameters. Draws are processed in fixed-size chunks, each with its own
//! counter-derived random stream, so results do not depend on thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{HyperComponent, PrpResult, ReferenceModel, Sidedness, StudySummary};
use crate::prior::normalize_log_weights;
use crate::regress::weighted_line;
use crate::special::LN_SQRT_2PI;

/// Draws per parallel chunk; each chunk owns one random stream.
pub const CHUNK_DRAWS: usize = 1_000;
pub const DEFAULT_DRAWS: usize = 10_000;

/// How replicated and observed quantities are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    GreaterEqual,
    AbsGreaterEqual,
}

impl Comparison {
    pub fn exceeds(self, replicated: f64, observed: f64) -> bool {
        match self {
            Comparison::GreaterEqual => replicated >= observed,
            Comparison::AbsGreaterEqual => replicated.abs() >= observed.abs(),
        }
    }
}

/// A discrepancy `T(β̂, σ; β̄, φ²)` depending on data and latent parameters.
pub trait TestQuantity: Sync {
    fn name(&self) -> &str;
    fn comparison(&self) -> Comparison;
    /// Smallest number of studies for which the quantity is defined.
    fn min_studies(&self) -> usize {
        1
    }
    fn evaluate(&self, data: &[f64], ses: &[f64], beta_bar: f64, phi_sq: f64) -> Result<f64>;
}

/// `Σ wᵢ(β̂ᵢ − β̄)²` with `wᵢ = 1/(σᵢ² + φ²)`.
pub fn quantity_q(data: &[f64], ses: &[f64], beta_bar: f64, phi_sq: f64) -> f64 {
    data.iter()
        .zip(ses)
        .map(|(b, s)| (b - beta_bar).powi(2) / (s * s + phi_sq))
        .sum()
}

/// Slope t-statistic of the weighted regression of `β̂ᵢ` on `s̃ᵢ = √(σᵢ² + φ²)`
/// with weights `1/s̃ᵢ²`. With `φ² = 0` this is the classic Egger regressor.
pub fn quantity_egger(data: &[f64], ses: &[f64], _beta_bar: f64, phi_sq: f64) -> Result<f64> {
    let s_tilde: Vec<f64> = ses.iter().map(|s| (s * s + phi_sq).sqrt()).collect();
    let w: Vec<f64> = s_tilde.iter().map(|s| 1.0 / (s * s)).collect();
    Ok(weighted_line(&s_tilde, data, &w)?.t)
}

/// Built-in test quantities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Q,
    Egger,
}

impl TestQuantity for Quantity {
    fn name(&self) -> &str {
        match self {
            Quantity::Q => "Q",
            Quantity::Egger => "egger",
        }
    }

    fn comparison(&self) -> Comparison {
        match self {
            Quantity::Q => Comparison::GreaterEqual,
            // funnel asymmetry can run either way depending on the pooled sign
            Quantity::Egger => Comparison::AbsGreaterEqual,
        }
    }

    fn min_studies(&self) -> usize {
        match self {
            Quantity::Q => 1,
            Quantity::Egger => 3,
        }
    }

    fn evaluate(&self, data: &[f64], ses: &[f64], beta_bar: f64, phi_sq: f64) -> Result<f64> {
        match self {
            Quantity::Q => Ok(quantity_q(data, ses, beta_bar, phi_sq)),
            Quantity::Egger => quantity_egger(data, ses, beta_bar, phi_sq),
        }
    }
}

/// Adapter turning a closure into a [`TestQuantity`].
pub struct FnQuantity<F> {
    pub name: String,
    pub comparison: Comparison,
    pub evaluator: F,
}

impl<F> TestQuantity for FnQuantity<F>
where
    F: Fn(&[f64], &[f64], f64, f64) -> f64 + Sync,
{
    fn name(&self) -> &str {
        &self.name
    }

    fn comparison(&self) -> Comparison {
        self.comparison
    }

    fn evaluate(&self, data: &[f64], ses: &[f64], beta_bar: f64, phi_sq: f64) -> Result<f64> {
        Ok((self.evaluator)(data, ses, beta_bar, phi_sq))
    }
}

/// Log marginal likelihood `log N(β̂ | 0, Σ_k)` via the rank-one structure of `Σ_k`.
///
/// With `D = diag(φ² + σᵢ²)`:
/// `det Σ = det D · (1 + ω²·Σ 1/dᵢ)` and
/// `β̂ᵀΣ⁻¹β̂ = Σ β̂ᵢ²/dᵢ − ω²(Σ β̂ᵢ/dᵢ)² / (1 + ω²·Σ 1/dᵢ)`.
pub fn marginal_loglik(studies: &[StudySummary], component: &HyperComponent) -> f64 {
    let m = studies.len() as f64;
    let (mut log_det_d, mut s_inv, mut s_b, mut s_bb) = (0.0, 0.0, 0.0, 0.0);
    for s in studies {
        let d = component.phi_sq + s.variance();
        log_det_d += d.ln();
        s_inv += 1.0 / d;
        s_b += s.beta_hat / d;
        s_bb += s.beta_hat * s.beta_hat / d;
    }
    let denom = 1.0 + component.omega_sq * s_inv;
    assert!(denom > 0.0, "covariance must be positive definite");
    let quad = s_bb - component.omega_sq * s_b * s_b / denom;
    -m * LN_SQRT_2PI - 0.5 * (log_det_d + denom.ln()) - 0.5 * quad
}

/// Posterior probabilities of the reference components given all studies.
pub fn component_posterior(studies: &[StudySummary], model: &ReferenceModel) -> Result<Vec<f64>> {
    let log_w: Vec<f64> = model
        .components()
        .iter()
        .map(|c| c.weight.ln() + marginal_loglik(studies, c))
        .collect();
    normalize_log_weights(&log_w)
}

/// One joint draw of latent parameters and replicated data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorDraw {
    pub component_index: usize,
    pub beta_bar: f64,
    pub betas: Vec<f64>,
    pub replicated: Vec<f64>,
}

/// Precomputed conditionals for repeated posterior sampling of one dataset.
#[derive(Debug, Clone)]
pub struct PosteriorSampler {
    betas: Vec<f64>,
    variances: Vec<f64>,
    components: Vec<HyperComponent>,
    posterior: Vec<f64>,
    cumulative: Vec<f64>,
    // per component: (mean, sd) of β̄ | β̂
    grand: Vec<(f64, f64)>,
}

impl PosteriorSampler {
    pub fn new(studies: &[StudySummary], model: &ReferenceModel) -> Result<Self> {
        if studies.is_empty() {
            return Err(Error::TooFewStudies {
                required: 1,
                got: 0,
            });
        }
        let posterior = component_posterior(studies, model)?;
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = posterior
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        if let Some(last) = cumulative.last_mut() {
            *last = f64::INFINITY;
        }
        let grand = model
            .components()
            .iter()
            .map(|c| {
                if c.omega_sq == 0.0 {
                    return (0.0, 0.0);
                }
                let (mut prec, mut num) = (1.0 / c.omega_sq, 0.0);
                for s in studies {
                    let d = s.variance() + c.phi_sq;
                    prec += 1.0 / d;
                    num += s.beta_hat / d;
                }
                (num / prec, (1.0 / prec).sqrt())
            })
            .collect();
        Ok(Self {
            betas: studies.iter().map(|s| s.beta_hat).collect(),
            variances: studies.iter().map(|s| s.variance()).collect(),
            components: model.components().to_vec(),
            posterior,
            cumulative,
            grand,
        })
    }

    pub fn component_posterior(&self) -> &[f64] {
        &self.posterior
    }

    pub fn num_studies(&self) -> usize {
        self.betas.len()
    }

    /// Posterior mean and sd of the grand effect under component `k`.
    pub fn grand_effect_conditional(&self, k: usize) -> (f64, f64) {
        self.grand[k]
    }

    /// Fills `draw` in place (vectors are resized to `m`).
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, draw: &mut PosteriorDraw) {
        let u: f64 = rng.random();
        let k = self.cumulative.partition_point(|&c| c <= u);
        let comp = &self.components[k];
        let (mean, sd) = self.grand[k];
        let beta_bar = if sd == 0.0 {
            mean
        } else {
            mean + sd * rng.sample::<f64, _>(StandardNormal)
        };
        let m = self.betas.len();
        draw.component_index = k;
        draw.beta_bar = beta_bar;
        draw.betas.resize(m, 0.0);
        draw.replicated.resize(m, 0.0);
        for j in 0..m {
            let beta_j = if comp.phi_sq == 0.0 {
                beta_bar
            } else {
                let v = 1.0 / (1.0 / comp.phi_sq + 1.0 / self.variances[j]);
                let mu = v * (beta_bar / comp.phi_sq + self.betas[j] / self.variances[j]);
                mu + v.sqrt() * rng.sample::<f64, _>(StandardNormal)
            };
            draw.betas[j] = beta_j;
            draw.replicated[j] =
                beta_j + self.variances[j].sqrt() * rng.sample::<f64, _>(StandardNormal);
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PosteriorDraw {
        let mut draw = PosteriorDraw {
            component_index: 0,
            beta_bar: 0.0,
            betas: Vec::new(),
            replicated: Vec::new(),
        };
        self.sample_into(rng, &mut draw);
        draw
    }
}

/// Single posterior draw; builds a [`PosteriorSampler`] each call, so prefer the
/// sampler directly for repeated draws.
pub fn sample_posterior_draw<R: Rng + ?Sized>(
    studies: &[StudySummary],
    model: &ReferenceModel,
    rng: &mut R,
) -> Result<PosteriorDraw> {
    Ok(PosteriorSampler::new(studies, model)?.sample(rng))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PosteriorPrpConfig {
    pub draws: usize,
    pub seed: u64,
    /// Report `(l+1)/(L+1)` instead of `l/L`.
    pub smoothed: bool,
}

impl Default for PosteriorPrpConfig {
    fn default() -> Self {
        Self {
            draws: DEFAULT_DRAWS,
            seed: 42,
            smoothed: false,
        }
    }
}

/// Random stream for draw chunk `chunk` under master seed `seed`.
pub fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// Monte Carlo posterior-predictive replication p-value.
pub fn posterior_prp(
    studies: &[StudySummary],
    model: &ReferenceModel,
    quantity: &dyn TestQuantity,
    config: &PosteriorPrpConfig,
) -> Result<PrpResult> {
    if config.draws == 0 {
        return Err(Error::arg("draws", "need at least one posterior draw"));
    }
    if studies.len() < quantity.min_studies() {
        return Err(Error::TooFewStudies {
            required: quantity.min_studies(),
            got: studies.len(),
        });
    }
    let sampler = PosteriorSampler::new(studies, model)?;
    let ses: Vec<f64> = studies.iter().map(|s| s.se).collect();
    let observed: Vec<f64> = studies.iter().map(|s| s.beta_hat).collect();
    let comparison = quantity.comparison();
    let n_chunks = config.draws.div_ceil(CHUNK_DRAWS);

    let per_chunk: Vec<(usize, f64)> = (0..n_chunks)
        .into_par_iter()
        .map(|c| -> Result<(usize, f64)> {
            let mut rng = chunk_rng(config.seed, c as u64);
            let n = CHUNK_DRAWS.min(config.draws - c * CHUNK_DRAWS);
            let mut draw = sampler.sample(&mut rng);
            let (mut hits, mut obs_sum) = (0usize, 0.0);
            for i in 0..n {
                if i > 0 {
                    sampler.sample_into(&mut rng, &mut draw);
                }
                let phi_sq = sampler.components[draw.component_index].phi_sq;
                let t_obs = quantity.evaluate(&observed, &ses, draw.beta_bar, phi_sq)?;
                let t_rep = quantity.evaluate(&draw.replicated, &ses, draw.beta_bar, phi_sq)?;
                if comparison.exceeds(t_rep, t_obs) {
                    hits += 1;
                }
                obs_sum += t_obs;
            }
            Ok((hits, obs_sum))
        })
        .collect::<Result<_>>()?;

    let hits: usize = per_chunk.iter().map(|c| c.0).sum();
    let obs_sum: f64 = per_chunk.iter().map(|c| c.1).sum();
    let l = config.draws as f64;
    let raw = hits as f64 / l;
    let p_value = if config.smoothed {
        (hits as f64 + 1.0) / (l + 1.0)
    } else {
        raw
    };
    Ok(PrpResult {
        p_value,
        sidedness: match comparison {
            Comparison::GreaterEqual => Sidedness::OneSidedHigh,
            Comparison::AbsGreaterEqual => Sidedness::TwoSided,
        },
        statistic_name: quantity.name().to_string(),
        statistic_value: obs_sum / l,
        component_posteriors: sampler.posterior.clone(),
        mc_stderr: Some((raw * (1.0 - raw) / l).sqrt()),
        predictive_interval: None,
    })
}

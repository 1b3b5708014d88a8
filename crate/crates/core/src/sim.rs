//! Simulation lab: batch-effect contamination and publication-bias censoring,
//! plus sensitivity sweeps that push simulated datasets through the engines.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classic::{cochran_q, egger_test};
use crate::dc::gamma_for_prob;
use crate::error::{Error, Result};
use crate::grid::{default_reference_model, ScenarioInput};
use crate::model::{ReferenceModel, ReplicationPair, Sidedness, StudySummary};
use crate::posterior::{chunk_rng, posterior_prp, PosteriorPrpConfig, Quantity};
use crate::prior::{prior_prp, prior_prp_pub_bias};
use crate::regress::{binary_ols, logistic_fit};
use crate::special::normal_sf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Design {
    TwoGroup,
    Exchangeable,
}

/// A simulated dataset in either scenario.
#[derive(Debug, Clone, PartialEq)]
pub enum SimDataset {
    TwoGroup(ReplicationPair),
    Exchangeable(Vec<StudySummary>),
}

/// Quantitative-trait case-control experiments with optional batch contamination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSimConfig {
    pub design: Design,
    /// Samples per experiment, split evenly between cases and controls.
    pub n_per_group: usize,
    pub true_effect: f64,
    /// Batch effects are drawn from `N(0, η²)` for contaminated experiments.
    pub eta: f64,
    pub residual_sd: f64,
    /// Residual sd of the (uncontaminated) replication in the two-group design.
    pub replication_residual_sd: f64,
    pub batch_label_corr: f64,
    pub n_experiments: usize,
    pub n_contaminated: usize,
    pub heterogeneity_target: Option<f64>,
}

impl BatchSimConfig {
    pub fn two_group() -> Self {
        Self {
            design: Design::TwoGroup,
            n_per_group: 200,
            true_effect: 0.5,
            eta: 0.0,
            residual_sd: 1.0,
            replication_residual_sd: 1.0,
            batch_label_corr: 0.7,
            n_experiments: 2,
            n_contaminated: 1,
            heterogeneity_target: None,
        }
    }

    pub fn exchangeable() -> Self {
        Self {
            design: Design::Exchangeable,
            n_experiments: 5,
            n_contaminated: 2,
            heterogeneity_target: Some(0.96),
            ..Self::two_group()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n_per_group < 4 {
            return bad(format!(
                "n_per_group must be at least 4, got {}",
                self.n_per_group
            ));
        }
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return bad(format!("eta must be non-negative, got {}", self.eta));
        }
        if !(self.residual_sd > 0.0 && self.replication_residual_sd > 0.0) {
            return bad("residual standard deviations must be positive".into());
        }
        if !(0.0..1.0).contains(&self.batch_label_corr) {
            return bad(format!(
                "batch_label_corr must lie in [0, 1), got {}",
                self.batch_label_corr
            ));
        }
        if self.n_contaminated > self.n_experiments {
            return bad("n_contaminated exceeds n_experiments".into());
        }
        match self.design {
            Design::TwoGroup if self.n_experiments != 2 => {
                return bad("the two-group design has exactly two experiments".into())
            }
            Design::Exchangeable if self.n_experiments < 2 => {
                return bad("need at least two experiments".into())
            }
            _ => {}
        }
        if let Some(t) = self.heterogeneity_target {
            gamma_for_prob(t).map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }

    /// Label flip probability giving the configured case/batch correlation.
    pub fn flip_probability(&self) -> f64 {
        (1.0 - self.batch_label_corr) / 2.0
    }
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Batch labels: case labels flipped independently with probability `flip`.
pub fn batch_labels<R: Rng + ?Sized>(cases: &[bool], flip: f64, rng: &mut R) -> Vec<bool> {
    cases
        .iter()
        .map(|&c| c ^ (rng.random::<f64>() < flip))
        .collect()
}

fn balanced_cases(n: usize) -> Vec<bool> {
    (0..n).map(|i| i < n / 2).collect()
}

/// One experiment: regress `effect·case + batch_effect·batch + ε` on case status.
fn batch_experiment<R: Rng + ?Sized>(
    id: String,
    cfg: &BatchSimConfig,
    effect: f64,
    batch_effect: f64,
    residual_sd: f64,
    rng: &mut R,
) -> Result<StudySummary> {
    let cases = balanced_cases(cfg.n_per_group);
    let batch = batch_labels(&cases, cfg.flip_probability(), rng);
    let y: Vec<f64> = cases
        .iter()
        .zip(&batch)
        .map(|(&c, &b)| {
            effect * f64::from(u8::from(c))
                + batch_effect * f64::from(u8::from(b))
                + residual_sd * normal(rng)
        })
        .collect();
    let (beta_hat, se) = binary_ols(&cases, &y)?;
    StudySummary::new(id, beta_hat, se)
}

/// Heterogeneity variance `φ²` implied by a sign-consistency target at grand-effect scale `ω²`.
pub fn heterogeneity_variance(target: Option<f64>, omega_sq: f64) -> Result<f64> {
    match target {
        None => Ok(0.0),
        Some(t) => {
            let gamma = gamma_for_prob(t)?;
            Ok(omega_sq * gamma / (1.0 - gamma))
        }
    }
}

pub fn simulate_batch_dataset<R: Rng + ?Sized>(
    cfg: &BatchSimConfig,
    rng: &mut R,
) -> Result<SimDataset> {
    cfg.validate()?;
    match cfg.design {
        Design::TwoGroup => {
            let batch_effect = cfg.eta * normal(rng);
            let (orig_effect, orig_batch) = if cfg.n_contaminated > 0 {
                (cfg.true_effect, batch_effect)
            } else {
                (cfg.true_effect, 0.0)
            };
            let original = batch_experiment(
                "orig".into(),
                cfg,
                orig_effect,
                orig_batch,
                cfg.residual_sd,
                rng,
            )?;
            let contaminated_rep = cfg.n_contaminated > 1;
            let rep_batch = if contaminated_rep {
                cfg.eta * normal(rng)
            } else {
                0.0
            };
            let replication = batch_experiment(
                "rep".into(),
                cfg,
                cfg.true_effect,
                rep_batch,
                cfg.replication_residual_sd,
                rng,
            )?;
            Ok(SimDataset::TwoGroup(ReplicationPair::new(
                original,
                replication,
            )))
        }
        Design::Exchangeable => {
            // grand effect redrawn per dataset at the scale of the true effect
            let omega_sq = cfg.true_effect * cfg.true_effect;
            let phi = heterogeneity_variance(cfg.heterogeneity_target, omega_sq)?.sqrt();
            let grand = cfg.true_effect.abs() * normal(rng);
            (0..cfg.n_experiments)
                .map(|i| {
                    let effect = grand + phi * normal(rng);
                    let batch_effect = if i < cfg.n_contaminated {
                        cfg.eta * normal(rng)
                    } else {
                        0.0
                    };
                    batch_experiment(
                        format!("exp{}", i + 1),
                        cfg,
                        effect,
                        batch_effect,
                        cfg.residual_sd,
                        rng,
                    )
                })
                .collect::<Result<Vec<_>>>()
                .map(SimDataset::Exchangeable)
        }
    }
}

/// Binary-outcome experiments analysed by logistic regression, with selective retention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PubBiasSimConfig {
    pub design: Design,
    pub odds_ratio: f64,
    pub sample_sizes: Vec<usize>,
    /// Hard censoring of the original: keep only if its Wald p-value is below this.
    pub p_threshold: Option<f64>,
    /// Soft censoring: keep each experiment with probability `exp(−c·p^{3/2})`.
    pub censor_strength_c: Option<f64>,
    pub heterogeneity_target: Option<f64>,
    pub max_attempts: u64,
}

impl PubBiasSimConfig {
    pub fn two_group() -> Self {
        Self {
            design: Design::TwoGroup,
            odds_ratio: 2.0 / 3.0,
            sample_sizes: vec![200, 200],
            p_threshold: Some(0.05),
            censor_strength_c: None,
            heterogeneity_target: None,
            max_attempts: 1_000_000,
        }
    }

    pub fn exchangeable() -> Self {
        let mut sizes = vec![200; 5];
        sizes.extend([500; 3]);
        sizes.extend([1000; 2]);
        Self {
            design: Design::Exchangeable,
            odds_ratio: 2.0 / 3.0,
            sample_sizes: sizes,
            p_threshold: None,
            censor_strength_c: Some(0.0),
            heterogeneity_target: Some(0.96),
            max_attempts: 1_000_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.into()));
        if !(self.odds_ratio.is_finite() && self.odds_ratio > 0.0) {
            return bad("odds_ratio must be positive");
        }
        if self.sample_sizes.iter().any(|&n| n < 4) {
            return bad("every sample size must be at least 4");
        }
        if self.max_attempts == 0 {
            return bad("max_attempts must be positive");
        }
        match (self.design, self.p_threshold, self.censor_strength_c) {
            (Design::TwoGroup, Some(pt), None) => {
                if self.sample_sizes.len() != 2 {
                    return bad("the two-group design needs exactly two sample sizes");
                }
                if !(pt > 0.0 && pt <= 1.0) {
                    return bad("p_threshold must lie in (0, 1]");
                }
            }
            (Design::Exchangeable, None, Some(c)) => {
                if self.sample_sizes.len() < 2 {
                    return bad("need at least two experiments");
                }
                if !(c.is_finite() && c >= 0.0) {
                    return bad("censor_strength_c must be non-negative");
                }
            }
            (Design::TwoGroup, _, _) => return bad("two-group censoring needs p_threshold only"),
            (Design::Exchangeable, _, _) => {
                return bad("exchangeable censoring needs censor_strength_c only")
            }
        }
        if let Some(t) = self.heterogeneity_target {
            gamma_for_prob(t).map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }
}

/// Soft-censoring retention probability `exp(−c·p^{3/2})`.
pub fn retention_probability(p: f64, c: f64) -> f64 {
    (-c * p.powf(1.5)).exp()
}

/// One logistic experiment; returns the summary and the two-sided Wald p-value,
/// or `None` when the fit fails (separation).
fn logistic_experiment<R: Rng + ?Sized>(
    id: &str,
    n: usize,
    log_or: f64,
    rng: &mut R,
) -> Option<(StudySummary, f64)> {
    let exposed = balanced_cases(n);
    let x: Vec<f64> = exposed.iter().map(|&e| f64::from(u8::from(e))).collect();
    let p1 = 1.0 / (1.0 + (-log_or).exp());
    let y: Vec<bool> = exposed
        .iter()
        .map(|&e| rng.random::<f64>() < if e { p1 } else { 0.5 })
        .collect();
    let fit = logistic_fit(&x, &y).ok()?;
    let p = 2.0 * normal_sf(fit.wald_z().abs());
    let study = StudySummary::new(id, fit.slope, fit.slope_se).ok()?;
    Some((study, p))
}

/// Regenerates until `accept(p)` holds; errors after `max_attempts` tries.
fn censored_experiment<R: Rng + ?Sized>(
    id: &str,
    n: usize,
    log_or: f64,
    max_attempts: u64,
    rng: &mut R,
    mut accept: impl FnMut(f64, &mut R) -> bool,
) -> Result<StudySummary> {
    for _ in 0..max_attempts {
        if let Some((study, p)) = logistic_experiment(id, n, log_or, rng) {
            if accept(p, rng) {
                return Ok(study);
            }
        }
    }
    Err(Error::InfeasibleCensoring {
        attempts: max_attempts,
    })
}

pub fn simulate_pubbias_dataset<R: Rng + ?Sized>(
    cfg: &PubBiasSimConfig,
    rng: &mut R,
) -> Result<SimDataset> {
    cfg.validate()?;
    let log_or = cfg.odds_ratio.ln();
    match cfg.design {
        Design::TwoGroup => {
            let pt = cfg.p_threshold.unwrap_or(1.0);
            let original = censored_experiment(
                "orig",
                cfg.sample_sizes[0],
                log_or,
                cfg.max_attempts,
                rng,
                |p, _| pt >= 1.0 || p < pt,
            )?;
            let replication = censored_experiment(
                "rep",
                cfg.sample_sizes[1],
                log_or,
                cfg.max_attempts,
                rng,
                |_, _| true,
            )?;
            Ok(SimDataset::TwoGroup(ReplicationPair::new(
                original,
                replication,
            )))
        }
        Design::Exchangeable => {
            let c = cfg.censor_strength_c.unwrap_or(0.0);
            let phi = heterogeneity_variance(cfg.heterogeneity_target, log_or * log_or)?.sqrt();
            cfg.sample_sizes
                .iter()
                .enumerate()
                .map(|(i, &n)| {
                    let effect = log_or + phi * normal(rng);
                    censored_experiment(
                        &format!("exp{}", i + 1),
                        n,
                        effect,
                        cfg.max_attempts,
                        rng,
                        |p, rng| c == 0.0 || rng.random::<f64>() < retention_probability(p, c),
                    )
                })
                .collect::<Result<Vec<_>>>()
                .map(SimDataset::Exchangeable)
        }
    }
}

/// Draws an original/replication pair from the reference model itself.
pub fn simulate_pair_from_model<R: Rng + ?Sized>(
    model: &ReferenceModel,
    se_orig: f64,
    se_rep: f64,
    rng: &mut R,
) -> Result<ReplicationPair> {
    let studies = simulate_studies_from_model(model, &[se_orig, se_rep], rng)?;
    let mut it = studies.into_iter();
    let (Some(mut original), Some(mut replication)) = (it.next(), it.next()) else {
        unreachable!("two standard errors give two studies");
    };
    original.id = "orig".into();
    replication.id = "rep".into();
    Ok(ReplicationPair::new(original, replication))
}

/// Draws studies with the given standard errors from the reference model.
pub fn simulate_studies_from_model<R: Rng + ?Sized>(
    model: &ReferenceModel,
    ses: &[f64],
    rng: &mut R,
) -> Result<Vec<StudySummary>> {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let comps = model.components();
    let comp = comps
        .iter()
        .find(|c| {
            acc += c.weight;
            u < acc
        })
        .unwrap_or(&comps[comps.len() - 1]);
    let grand = comp.omega_sq.sqrt() * normal(rng);
    ses.iter()
        .enumerate()
        .map(|(i, &se)| {
            let beta = grand + comp.phi_sq.sqrt() * normal(rng);
            StudySummary::new(format!("s{}", i + 1), beta + se * normal(rng), se)
        })
        .collect()
}

/// Which batch parameter a two-group sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchParameter {
    Eta,
    ReplicationResidualSd,
}

/// A simulation scenario and the engine(s) its datasets are assessed with.
#[derive(Debug, Clone)]
pub enum Scenario {
    /// Two-sided prior-PRP on batch-contaminated originals.
    BatchTwoGroup {
        config: BatchSimConfig,
        vary: BatchParameter,
    },
    /// Posterior-PRP (Q) and Cochran's Q; magnitude is `η`.
    BatchExchangeable {
        config: BatchSimConfig,
        draws: usize,
    },
    /// Two-sided and publication-bias prior-PRPs; magnitude is `p_t`.
    PubBiasTwoGroup { config: PubBiasSimConfig },
    /// Posterior-PRPs (Q, Egger) plus classic tests; magnitude is `c`.
    PubBiasExchangeable {
        config: PubBiasSimConfig,
        draws: usize,
    },
}

/// One p-value from one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub magnitude: f64,
    pub p_value: f64,
    pub method: String,
}

/// Fraction of replicates flagged at `alpha` for one (magnitude, method).
/// `n_reps` counts the replicates where the method's statistic is defined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub magnitude: f64,
    pub method: String,
    pub n_reps: usize,
    pub flag_rate: f64,
    pub mean_p: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepOutput {
    pub records: Vec<ReplicateRecord>,
    pub summary: Vec<SweepRow>,
}

impl SweepOutput {
    pub fn row(&self, magnitude: f64, method: &str) -> Option<&SweepRow> {
        self.summary
            .iter()
            .find(|r| r.magnitude == magnitude && r.method == method)
    }
}

pub const METHOD_PRIOR_TWO_SIDED: &str = "prior_prp_two_sided";
pub const METHOD_PRIOR_PUB_BIAS: &str = "prior_prp_pub_bias";
pub const METHOD_POSTERIOR_Q: &str = "posterior_prp_q";
pub const METHOD_POSTERIOR_EGGER: &str = "posterior_prp_egger";
pub const METHOD_COCHRAN: &str = "cochran_q";
pub const METHOD_EGGER: &str = "egger";

fn replicate_seed(seed: u64, rep: usize) -> u64 {
    seed ^ (rep as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

impl Scenario {
    fn methods(&self) -> &'static [&'static str] {
        match self {
            Scenario::BatchTwoGroup { .. } => &[METHOD_PRIOR_TWO_SIDED],
            Scenario::BatchExchangeable { .. } => &[METHOD_POSTERIOR_Q, METHOD_COCHRAN],
            Scenario::PubBiasTwoGroup { .. } => &[METHOD_PRIOR_TWO_SIDED, METHOD_PRIOR_PUB_BIAS],
            Scenario::PubBiasExchangeable { .. } => &[
                METHOD_POSTERIOR_Q,
                METHOD_POSTERIOR_EGGER,
                METHOD_COCHRAN,
                METHOD_EGGER,
            ],
        }
    }

    /// Validated copy of the scenario with `magnitude` applied.
    fn at_magnitude(&self, magnitude: f64) -> Result<Scenario> {
        let mut s = self.clone();
        match &mut s {
            Scenario::BatchTwoGroup { config, vary } => {
                match vary {
                    BatchParameter::Eta => config.eta = magnitude,
                    BatchParameter::ReplicationResidualSd => {
                        config.replication_residual_sd = magnitude
                    }
                }
                config.validate()?;
            }
            Scenario::BatchExchangeable { config, draws } => {
                config.eta = magnitude;
                config.validate()?;
                check_draws(*draws)?;
            }
            Scenario::PubBiasTwoGroup { config } => {
                config.p_threshold = Some(magnitude);
                config.validate()?;
            }
            Scenario::PubBiasExchangeable { config, draws } => {
                config.censor_strength_c = Some(magnitude);
                config.validate()?;
                check_draws(*draws)?;
            }
        }
        Ok(s)
    }

    /// Simulates one dataset and returns one p-value per method, in [`Self::methods`] order.
    /// A method is `None` when its statistic is undefined for the dataset.
    fn run_replicate(&self, rng: &mut ChaCha8Rng, posterior_seed: u64) -> Result<Vec<Option<f64>>> {
        match self {
            Scenario::BatchTwoGroup { config, .. } => {
                let pair = expect_pair(simulate_batch_dataset(config, rng)?);
                let model = default_reference_model(ScenarioInput::TwoGroup(&pair))?;
                Ok(vec![Some(
                    prior_prp(&pair, &model, Sidedness::TwoSided)?.p_value,
                )])
            }
            Scenario::BatchExchangeable { config, draws } => {
                let studies = expect_studies(simulate_batch_dataset(config, rng)?);
                let model = default_reference_model(ScenarioInput::Exchangeable(&studies))?;
                let cfg = PosteriorPrpConfig {
                    draws: *draws,
                    seed: posterior_seed,
                    smoothed: false,
                };
                Ok(vec![
                    Some(posterior_prp(&studies, &model, &Quantity::Q, &cfg)?.p_value),
                    Some(cochran_q(&studies)?.p_value),
                ])
            }
            Scenario::PubBiasTwoGroup { config } => {
                let pair = expect_pair(simulate_pubbias_dataset(config, rng)?);
                let model = default_reference_model(ScenarioInput::TwoGroup(&pair))?;
                Ok(vec![
                    Some(prior_prp(&pair, &model, Sidedness::TwoSided)?.p_value),
                    defined(prior_prp_pub_bias(&pair, &model).map(|r| r.p_value))?,
                ])
            }
            Scenario::PubBiasExchangeable { config, draws } => {
                let studies = expect_studies(simulate_pubbias_dataset(config, rng)?);
                let model = default_reference_model(ScenarioInput::Exchangeable(&studies))?;
                let cfg = PosteriorPrpConfig {
                    draws: *draws,
                    seed: posterior_seed,
                    smoothed: false,
                };
                Ok(vec![
                    Some(posterior_prp(&studies, &model, &Quantity::Q, &cfg)?.p_value),
                    defined(
                        posterior_prp(&studies, &model, &Quantity::Egger, &cfg).map(|r| r.p_value),
                    )?,
                    Some(cochran_q(&studies)?.p_value),
                    defined(egger_test(&studies).map(|r| r.p_value))?,
                ])
            }
        }
    }
}

/// Maps statistics that are undefined for this particular dataset to `None`.
fn defined(r: Result<f64>) -> Result<Option<f64>> {
    match r {
        Ok(p) => Ok(Some(p)),
        Err(Error::UndefinedRatio | Error::DegenerateRegressor) => Ok(None),
        Err(e) => Err(e),
    }
}

fn check_draws(draws: usize) -> Result<()> {
    if draws == 0 {
        Err(Error::Config("posterior draws must be positive".into()))
    } else {
        Ok(())
    }
}

fn expect_pair(d: SimDataset) -> ReplicationPair {
    match d {
        SimDataset::TwoGroup(p) => p,
        SimDataset::Exchangeable(_) => unreachable!("validated two-group design"),
    }
}

fn expect_studies(d: SimDataset) -> Vec<StudySummary> {
    match d {
        SimDataset::Exchangeable(s) => s,
        SimDataset::TwoGroup(_) => unreachable!("validated exchangeable design"),
    }
}

/// Runs `n_reps` datasets per magnitude and reports flag rates at `alpha`.
///
/// Replicate `r` uses random stream `r` of the master seed at every magnitude,
/// so magnitudes are compared on common random numbers. Output is identical
/// for any thread count.
pub fn sensitivity_sweep(
    scenario: &Scenario,
    magnitudes: &[f64],
    n_reps: usize,
    alpha: f64,
    seed: u64,
) -> Result<SweepOutput> {
    if n_reps == 0 {
        return Err(Error::Config("reps must be positive".into()));
    }
    if magnitudes.is_empty() {
        return Err(Error::Config("need at least one magnitude".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let methods = scenario.methods();
    let mut out = SweepOutput::default();
    for &magnitude in magnitudes {
        let at = scenario.at_magnitude(magnitude)?;
        let per_rep: Vec<Vec<Option<f64>>> = (0..n_reps)
            .into_par_iter()
            .map(|rep| {
                let mut rng = chunk_rng(seed, rep as u64);
                at.run_replicate(&mut rng, replicate_seed(seed, rep))
            })
            .collect::<Result<_>>()?;
        for (mi, method) in methods.iter().enumerate() {
            let ps: Vec<f64> = per_rep.iter().filter_map(|r| r[mi]).collect();
            let n = ps.len();
            let flagged = ps.iter().filter(|&&p| p < alpha).count();
            out.summary.push(SweepRow {
                magnitude,
                method: method.to_string(),
                n_reps: n,
                flag_rate: flagged as f64 / n as f64,
                mean_p: ps.iter().sum::<f64>() / n as f64,
            });
        }
        for (rep, ps) in per_rep.into_iter().enumerate() {
            for (p, method) in ps.into_iter().zip(methods) {
                let Some(p) = p else { continue };
                out.records.push(ReplicateRecord {
                    replicate: rep,
                    magnitude,
                    p_value: p,
                    method: method.to_string(),
                });
            }
        }
    }
    Ok(out)
}

/// Deterministic generator for a single replicate outside a sweep.
pub fn replicate_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    chunk_rng(seed, rep)
}

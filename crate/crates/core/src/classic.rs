//! Frequentist comparators: Cochran's Q heterogeneity test and Egger's regression test.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::fixed_effect_estimate;
use crate::model::StudySummary;
use crate::regress::weighted_line;
use crate::special::{chi2_sf, student_t_two_sided};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicTestResult {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    pub method: String,
}

/// Cochran's Q under the fixed-effect model, referred to `χ²_{m−1}`.
pub fn cochran_q(studies: &[StudySummary]) -> Result<ClassicTestResult> {
    if studies.len() < 2 {
        return Err(Error::TooFewStudies {
            required: 2,
            got: studies.len(),
        });
    }
    let (pooled, _) = fixed_effect_estimate(studies);
    let q: f64 = studies
        .iter()
        .map(|s| (s.beta_hat - pooled).powi(2) / s.variance())
        .sum();
    let df = studies.len() - 1;
    Ok(ClassicTestResult {
        statistic: q,
        df,
        p_value: chi2_sf(q, df as f64),
        method: "cochran_q".into(),
    })
}

/// Egger's test: weighted regression of `β̂ᵢ` on `σᵢ` (weights `1/σᵢ²`), two-sided
/// t-test of the slope on `m − 2` df.
pub fn egger_test(studies: &[StudySummary]) -> Result<ClassicTestResult> {
    if studies.len() < 3 {
        return Err(Error::TooFewStudies {
            required: 3,
            got: studies.len(),
        });
    }
    let x: Vec<f64> = studies.iter().map(|s| s.se).collect();
    let y: Vec<f64> = studies.iter().map(|s| s.beta_hat).collect();
    let w: Vec<f64> = studies.iter().map(|s| 1.0 / s.variance()).collect();
    let fit = weighted_line(&x, &y, &w)?;
    Ok(ClassicTestResult {
        statistic: fit.t,
        df: fit.df,
        p_value: student_t_two_sided(fit.t, fit.df as f64),
        method: "egger".into(),
    })
}

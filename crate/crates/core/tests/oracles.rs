mod common;

use prp_core::dc::{gamma_for_prob, sign_consistency_prob};
use prp_core::grid::{chi2_1_quartiles, default_reference_model, ScenarioInput};
use prp_core::model::make_reference_model;
use prp_core::posterior::{
    chunk_rng, component_posterior, marginal_loglik, posterior_prp, PosteriorPrpConfig, Quantity,
};
use prp_core::prior::prior_prp;
use prp_core::special::{beta_inc, chi2_quantile, chi2_sf, normal_quantile, student_t_two_sided};
use prp_core::{ReferenceModel, ReplicationPair, Sidedness, StudySummary};
use rand::Rng;
use rand_distr::StandardNormal;

use common::*;

fn study(b: f64, s: f64) -> StudySummary {
    StudySummary::new("s", b, s).unwrap()
}

#[test]
fn sign_consistency_matches_quadrature_near_endpoints() {
    for &gamma in &[1e-6, 1e-4, 1e-3, 0.02, 0.5, 0.98, 0.9999, 1.0] {
        let q = sign_consistency_quadrature(gamma);
        let c = sign_consistency_prob(gamma).unwrap();
        assert!((q - c).abs() < 1e-8, "gamma={gamma}: {q} vs {c}");
    }
}

#[test]
fn inverse_sign_consistency_examples() {
    assert!((gamma_for_prob(0.95).unwrap() - 0.02447).abs() < 1e-5);
    assert_eq!(gamma_for_prob(1.0).unwrap(), 0.0);
    // cos²(π(t − ½)) is the closed-form inverse
    for &t in &[0.6, 0.75, 0.9, 0.975, 0.99] {
        let closed = (std::f64::consts::PI * (t - 0.5)).cos().powi(2);
        assert!((gamma_for_prob(t).unwrap() - closed).abs() < 1e-10);
    }
}

#[test]
fn chi2_one_quartiles_via_normal() {
    let q = chi2_1_quartiles();
    for (qi, p) in q.iter().zip([0.25, 0.5, 0.75]) {
        let oracle = normal_quantile((1.0 + p) / 2.0).powi(2);
        assert!((qi - oracle).abs() < 1e-9, "{qi} vs {oracle}");
    }
    assert!((q[0] - 0.1015).abs() < 1e-4);
    assert!((q[1] - 0.4549).abs() < 1e-4);
    assert!((q[2] - 1.3233).abs() < 1e-4);
}

#[test]
fn tails_against_series_at_larger_df() {
    for k in [15u32, 20, 29, 30, 51] {
        for &x in &[1.0, 10.0, 25.0, 60.0] {
            let d = (chi2_sf(x, k as f64) - chi2_sf_series(x, k)).abs();
            assert!(d < 1e-10, "chi2 k={k} x={x}: {d}");
        }
        for &t in &[0.3, 1.5, 2.2, 5.0] {
            let d = (student_t_two_sided(t, k as f64) - t_two_sided_series(t, k)).abs();
            assert!(d < 1e-10, "t k={k} t={t}: {d}");
        }
    }
}

#[test]
fn chi2_quantile_inverts_series() {
    for k in 1..=8u32 {
        for &p in &[0.05, 0.5, 0.95] {
            let x = chi2_quantile(p, k as f64);
            assert!((1.0 - chi2_sf_series(x, k) - p).abs() < 1e-9);
        }
    }
}

#[test]
fn incomplete_beta_reflection() {
    for &(a, b, x) in &[
        (0.5, 0.5, 0.3),
        (2.0, 5.0, 0.1),
        (10.0, 3.0, 0.8),
        (1.0, 1.0, 0.42),
    ] {
        let lhs = beta_inc(a, b, x);
        let rhs = 1.0 - beta_inc(b, a, 1.0 - x);
        assert!((lhs - rhs).abs() < 1e-12);
    }
    // I_x(1, 1) = x
    assert!((beta_inc(1.0, 1.0, 0.42) - 0.42).abs() < 1e-14);
}

#[test]
fn marginal_loglik_matches_dense_for_all_sizes() {
    let mut rng = chunk_rng(7, 0);
    for m in 1..=6 {
        for _ in 0..20 {
            let studies: Vec<StudySummary> = (0..m)
                .map(|_| study(rng.random_range(-3.0..3.0), rng.random_range(0.02..2.0)))
                .collect();
            let model = make_reference_model(&[
                (rng.random_range(0.0..5.0), rng.random_range(0.0..0.95)),
                (0.0, 0.0),
            ])
            .unwrap();
            for c in model.components() {
                let x: Vec<f64> = studies.iter().map(|s| s.beta_hat).collect();
                let v: Vec<f64> = studies.iter().map(|s| s.variance()).collect();
                let dense = dense_mvn_logpdf(&x, &v, c.omega_sq, c.phi_sq);
                assert!((marginal_loglik(&studies, c) - dense).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn prior_predictive_matches_brute_force() {
    let orig = study(0.8, 0.3);
    let pair = ReplicationPair::new(orig.clone(), study(0.1, 0.4));
    let model = default_reference_model(ScenarioInput::TwoGroup(&pair)).unwrap();
    for &x in &[-0.5, 0.1, 0.9, 2.0] {
        let pair = ReplicationPair::new(orig.clone(), study(x, 0.4));
        let analytic = prior_prp(&pair, &model, Sidedness::OneSidedLow)
            .unwrap()
            .p_value;
        let (mc, se) = brute_force_predictive_cdf(&model, &orig, 0.4, x, 400_000, 99);
        assert!(
            (analytic - mc).abs() < 4.0 * se,
            "x={x}: {analytic} vs {mc} ± {se}"
        );
    }
}

/// Independent posterior-predictive sampler written from the hierarchy directly.
fn naive_posterior_prp_q(studies: &[StudySummary], model: &ReferenceModel, draws: usize) -> f64 {
    let x: Vec<f64> = studies.iter().map(|s| s.beta_hat).collect();
    let v: Vec<f64> = studies.iter().map(|s| s.variance()).collect();
    let logs: Vec<f64> = model
        .components()
        .iter()
        .map(|c| c.weight.ln() + dense_mvn_logpdf(&x, &v, c.omega_sq, c.phi_sq))
        .collect();
    let mx = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|l| (l - mx).exp()).collect();
    let sw: f64 = w.iter().sum();
    let mut rng = chunk_rng(555, 3);
    let mut hits = 0usize;
    for _ in 0..draws {
        let u: f64 = rng.random::<f64>() * sw;
        let mut acc = 0.0;
        let mut k = w.len() - 1;
        for (i, wi) in w.iter().enumerate() {
            acc += wi;
            if u < acc {
                k = i;
                break;
            }
        }
        let c = &model.components()[k];
        let mut z = || -> f64 { rng.sample(StandardNormal) };
        let grand = if c.omega_sq == 0.0 {
            0.0
        } else {
            let prec = 1.0 / c.omega_sq + v.iter().map(|vi| 1.0 / (vi + c.phi_sq)).sum::<f64>();
            let mean = x
                .iter()
                .zip(&v)
                .map(|(xi, vi)| xi / (vi + c.phi_sq))
                .sum::<f64>()
                / prec;
            mean + z() / prec.sqrt()
        };
        let mut t_obs = 0.0;
        let mut t_rep = 0.0;
        for i in 0..x.len() {
            let beta = if c.phi_sq == 0.0 {
                grand
            } else {
                let prec = 1.0 / c.phi_sq + 1.0 / v[i];
                (grand / c.phi_sq + x[i] / v[i]) / prec + z() / prec.sqrt()
            };
            let rep = beta + v[i].sqrt() * z();
            let d = v[i] + c.phi_sq;
            t_obs += (x[i] - grand).powi(2) / d;
            t_rep += (rep - grand).powi(2) / d;
        }
        if t_rep >= t_obs {
            hits += 1;
        }
    }
    hits as f64 / draws as f64
}

#[test]
fn posterior_prp_matches_naive_sampler() {
    let studies: Vec<StudySummary> = [
        (0.2, 0.1),
        (0.6, 0.2),
        (-0.1, 0.15),
        (0.9, 0.3),
        (0.35, 0.12),
    ]
    .iter()
    .map(|&(b, s)| study(b, s))
    .collect();
    let model = default_reference_model(ScenarioInput::Exchangeable(&studies)).unwrap();
    let draws = 200_000;
    let naive = naive_posterior_prp_q(&studies, &model, draws);
    let cfg = PosteriorPrpConfig {
        draws,
        seed: 8,
        smoothed: false,
    };
    let fast = posterior_prp(&studies, &model, &Quantity::Q, &cfg)
        .unwrap()
        .p_value;
    let se = (2.0 * naive * (1.0 - naive) / draws as f64).sqrt();
    assert!((naive - fast).abs() < 4.0 * se, "{naive} vs {fast} ± {se}");

    // component posteriors agree with the dense computation
    let x: Vec<f64> = studies.iter().map(|s| s.beta_hat).collect();
    let v: Vec<f64> = studies.iter().map(|s| s.variance()).collect();
    let dense: Vec<f64> = model
        .components()
        .iter()
        .map(|c| c.weight * dense_mvn_logpdf(&x, &v, c.omega_sq, c.phi_sq).exp())
        .collect();
    let total: f64 = dense.iter().sum();
    for (p, d) in component_posterior(&studies, &model)
        .unwrap()
        .iter()
        .zip(&dense)
    {
        assert!((p - d / total).abs() < 1e-12);
    }
}

//! Independent oracles shared by the integration tests. Nothing here calls the
//! production numerics it is used to check.

#![allow(dead_code, clippy::needless_range_loop)]

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use prp_core::{ReferenceModel, StudySummary};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn phi(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

pub fn phi_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// Gauss–Legendre nodes and weights on [-1, 1], by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (1..=n)
        .map(|i| {
            let mut x = (PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let k = k as f64;
                    let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// Composite Gauss–Legendre over `[a, b]` with `panels` equal panels.
pub fn integrate(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    panels: usize,
    rule: &[(f64, f64)],
) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|p| {
            let lo = a + h * p as f64;
            rule.iter()
                .map(|&(x, w)| w * f(lo + 0.5 * h * (x + 1.0)))
                .sum::<f64>()
                * 0.5
                * h
        })
        .sum()
}

/// Sign-consistency probability from its integral definition, truncated at ξ = 8.
///
/// Near γ = 0 the integrand has a step of width ~√γ at the origin, so panels
/// are refined to resolve it.
pub fn sign_consistency_quadrature(gamma: f64) -> f64 {
    assert!(gamma > 0.0 && gamma <= 1.0);
    let k = ((1.0 - gamma) / gamma).sqrt();
    let f = |xi: f64| phi(k * xi) * (-0.5 * xi * xi).exp();
    let rule = gauss_legendre(20);
    // resolve the transition region [0, 10/k] finely, then the smooth tail
    let edge = (10.0 / k.max(1e-300)).min(8.0);
    let near = integrate(f, 0.0, edge, 200, &rule);
    let far = if edge < 8.0 {
        integrate(f, edge, 8.0, 200, &rule)
    } else {
        0.0
    };
    (2.0 / PI).sqrt() * (near + far)
}

/// Dense multivariate normal log-density via Cholesky for the exchangeable
/// covariance `diag(σᵢ² + φ²) + ω² 11ᵀ`.
pub fn dense_mvn_logpdf(x: &[f64], variances: &[f64], omega_sq: f64, phi_sq: f64) -> f64 {
    let m = x.len();
    let mut a = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..m {
            a[i][j] = omega_sq + if i == j { variances[i] + phi_sq } else { 0.0 };
        }
    }
    // in-place Cholesky, lower triangle
    for j in 0..m {
        let mut d = a[j][j];
        for k in 0..j {
            d -= a[j][k] * a[j][k];
        }
        assert!(d > 0.0, "not positive definite");
        let d = d.sqrt();
        a[j][j] = d;
        for i in j + 1..m {
            let mut s = a[i][j];
            for k in 0..j {
                s -= a[i][k] * a[j][k];
            }
            a[i][j] = s / d;
        }
    }
    // solve L z = x
    let mut z = vec![0.0; m];
    for i in 0..m {
        let mut s = x[i];
        for k in 0..i {
            s -= a[i][k] * z[k];
        }
        z[i] = s / a[i][i];
    }
    let log_det: f64 = (0..m).map(|i| 2.0 * a[i][i].ln()).sum();
    let quad: f64 = z.iter().map(|v| v * v).sum();
    -0.5 * (m as f64 * (2.0 * PI).ln() + log_det + quad)
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Upper χ² tail for integer df via the finite Poisson / error-function series.
pub fn chi2_sf_series(x: f64, k: u32) -> f64 {
    assert!(k >= 1);
    let h = x / 2.0;
    if k.is_multiple_of(2) {
        (0..k / 2)
            .map(|j| h.powi(j as i32) / factorial(j))
            .sum::<f64>()
            * (-h).exp()
    } else {
        let mut sum = 0.0;
        let mut term = (x / PI * 2.0).sqrt(); // √(2x/π)
        for j in 0..(k - 1) / 2 {
            if j > 0 {
                term *= x / (2.0 * j as f64 + 1.0);
            }
            sum += term;
        }
        libm::erfc(h.sqrt()) + (-h).exp() * sum
    }
}

/// Two-sided Student-t tail `P(|T_ν| ≥ |t|)` for integer ν via the finite
/// trigonometric series.
pub fn t_two_sided_series(t: f64, nu: u32) -> f64 {
    assert!(nu >= 1);
    let theta = (t.abs() / (nu as f64).sqrt()).atan();
    let (s, c) = theta.sin_cos();
    let c2 = c * c;
    let a = if nu % 2 == 1 {
        // 2/π [θ + sinθ (cosθ + (2/3)cos³θ + … )]
        let mut sum = 0.0;
        if nu > 1 {
            let mut term = c;
            sum = term;
            for j in 1..(nu - 1) / 2 {
                term *= c2 * (2.0 * j as f64) / (2.0 * j as f64 + 1.0);
                sum += term;
            }
        }
        2.0 / PI * (theta + s * sum)
    } else {
        // sinθ [1 + ½cos²θ + (1·3)/(2·4)cos⁴θ + … ]
        let mut term = 1.0;
        let mut sum = 1.0;
        for j in 1..nu / 2 {
            term *= c2 * (2.0 * j as f64 - 1.0) / (2.0 * j as f64);
            sum += term;
        }
        s * sum
    };
    1.0 - a
}

/// Self-normalised importance-sampling estimate of `P(β̂_rep ≤ x | β̂_orig)`.
///
/// Draws the full hierarchy from the prior and weights by the original's
/// likelihood, with no use of conjugacy. Returns the estimate and its delta-method
/// standard error.
pub fn brute_force_predictive_cdf(
    model: &ReferenceModel,
    orig: &StudySummary,
    sigma_rep: f64,
    x: f64,
    draws: usize,
    seed: u64,
) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let comps = model.components();
    let mut weights = Vec::with_capacity(draws);
    let mut hits = Vec::with_capacity(draws);
    for _ in 0..draws {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut k = comps.len() - 1;
        for (i, c) in comps.iter().enumerate() {
            acc += c.weight;
            if u < acc {
                k = i;
                break;
            }
        }
        let c = &comps[k];
        let z: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let grand = c.omega_sq.sqrt() * z[0];
        let beta_o = grand + c.phi_sq.sqrt() * z[1];
        let beta_r = grand + c.phi_sq.sqrt() * z[2];
        let rep = beta_r + sigma_rep * z[3];
        let r = (orig.beta_hat - beta_o) / orig.se;
        weights.push((-0.5 * r * r).exp());
        hits.push(if rep <= x { 1.0 } else { 0.0 });
    }
    let sw: f64 = weights.iter().sum();
    let p: f64 = weights.iter().zip(&hits).map(|(w, h)| w * h).sum::<f64>() / sw;
    let var: f64 = weights
        .iter()
        .zip(&hits)
        .map(|(w, h)| (w * (h - p)).powi(2))
        .sum::<f64>()
        / (sw * sw);
    (p, var.sqrt())
}

/// Average ranks (ties share the mean rank).
pub fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    pearson(&ranks(x), &ranks(y))
}

/// Kolmogorov distance between the empirical CDF of `values` and Uniform[0, 1].
pub fn ks_uniform(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let x = x.clamp(0.0, 1.0);
            (x - i as f64 / n).abs().max(((i + 1) as f64 / n - x).abs())
        })
        .fold(0.0, f64::max)
}

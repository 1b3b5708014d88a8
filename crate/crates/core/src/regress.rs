//! Small regression fits: weighted straight-line least squares and
//! two-parameter logistic regression by Newton–Raphson.

use crate::error::{Error, Result};

/// Weighted least-squares fit of `y = a + b·x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    /// Standard error of the slope with the residual variance estimated on `n − 2` df.
    pub slope_se: f64,
    pub df: usize,
    /// `slope / slope_se`; zero for an exact flat fit, ±∞ for an exact sloped fit.
    pub t: f64,
}

/// Fits `y` on `x` with weights `w` (all positive). Needs `n ≥ 3` and a non-constant `x`.
pub fn weighted_line(x: &[f64], y: &[f64], w: &[f64]) -> Result<LineFit> {
    let n = x.len();
    debug_assert!(y.len() == n && w.len() == n);
    if n < 3 {
        return Err(Error::TooFewStudies {
            required: 3,
            got: n,
        });
    }
    let sw: f64 = w.iter().sum();
    let xbar = x.iter().zip(w).map(|(x, w)| w * x).sum::<f64>() / sw;
    let ybar = y.iter().zip(w).map(|(y, w)| w * y).sum::<f64>() / sw;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let dx = x[i] - xbar;
        let dy = y[i] - ybar;
        sxx += w[i] * dx * dx;
        sxy += w[i] * dx * dy;
        syy += w[i] * dy * dy;
    }
    let x_scale: f64 = x.iter().zip(w).map(|(x, w)| w * x * x).sum();
    // relative spread below ~1e-12 is indistinguishable from a constant regressor
    if sxx.is_nan() || sxx <= 1e-24 * x_scale {
        return Err(Error::DegenerateRegressor);
    }
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let rss: f64 = (0..n)
        .map(|i| {
            let r = y[i] - intercept - slope * x[i];
            w[i] * r * r
        })
        .sum();
    let df = n - 2;
    let slope_se = (rss / df as f64 / sxx).sqrt();
    let y_scale: f64 = y
        .iter()
        .zip(w)
        .map(|(y, w)| w * y * y)
        .sum::<f64>()
        .max(f64::MIN_POSITIVE);
    let t = if rss > 1e-26 * y_scale {
        slope / slope_se
    } else if syy <= 1e-26 * y_scale {
        // no variation in y at all
        0.0
    } else {
        slope.signum() * f64::INFINITY
    };
    Ok(LineFit {
        intercept,
        slope,
        slope_se,
        df,
        t,
    })
}

/// Logistic fit of a binary outcome on one covariate plus intercept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticFit {
    pub intercept: f64,
    pub slope: f64,
    pub slope_se: f64,
    pub iterations: usize,
}

impl LogisticFit {
    pub fn wald_z(&self) -> f64 {
        self.slope / self.slope_se
    }
}

/// Newton–Raphson on the log-likelihood; at most 50 iterations, converged when the
/// gradient's ∞-norm drops below 1e-10. Separated data (fitted probabilities
/// numerically 0 or 1, or no convergence) is reported as a numeric error.
pub fn logistic_fit(x: &[f64], y: &[bool]) -> Result<LogisticFit> {
    let n = x.len();
    let (mut b0, mut b1) = (0.0_f64, 0.0_f64);
    for iter in 0..=50 {
        let (mut g0, mut g1) = (0.0, 0.0);
        let (mut h00, mut h01, mut h11) = (0.0, 0.0, 0.0);
        let mut min_v = f64::INFINITY;
        for i in 0..n {
            let eta = b0 + b1 * x[i];
            let p = 1.0 / (1.0 + (-eta).exp());
            let r = f64::from(u8::from(y[i])) - p;
            g0 += r;
            g1 += r * x[i];
            let v = p * (1.0 - p);
            min_v = min_v.min(v);
            h00 += v;
            h01 += v * x[i];
            h11 += v * x[i] * x[i];
        }
        let det = h00 * h11 - h01 * h01;
        if !(det > 0.0 && det.is_finite()) {
            return Err(Error::Numeric(
                "singular logistic information matrix".into(),
            ));
        }
        if g0.abs().max(g1.abs()) < 1e-10 {
            // the gradient also vanishes as separated data drives fitted values to 0 or 1
            if min_v < 1e-10 {
                break;
            }
            return Ok(LogisticFit {
                intercept: b0,
                slope: b1,
                slope_se: (h00 / det).sqrt(),
                iterations: iter,
            });
        }
        b0 += (h11 * g0 - h01 * g1) / det;
        b1 += (h00 * g1 - h01 * g0) / det;
    }
    Err(Error::Numeric(
        "logistic regression did not converge (separation?)".into(),
    ))
}

/// OLS of `y` on a binary indicator: difference in means with the pooled residual variance.
pub fn binary_ols(group: &[bool], y: &[f64]) -> Result<(f64, f64)> {
    let (mut n1, mut n0, mut s1, mut s0) = (0usize, 0usize, 0.0, 0.0);
    for (g, v) in group.iter().zip(y) {
        if *g {
            n1 += 1;
            s1 += v;
        } else {
            n0 += 1;
            s0 += v;
        }
    }
    if n1 == 0 || n0 == 0 || n1 + n0 < 3 {
        return Err(Error::Numeric("binary regressor needs both levels".into()));
    }
    let (m1, m0) = (s1 / n1 as f64, s0 / n0 as f64);
    let rss: f64 = group
        .iter()
        .zip(y)
        .map(|(g, v)| {
            let r = v - if *g { m1 } else { m0 };
            r * r
        })
        .sum();
    let sigma2 = rss / (n1 + n0 - 2) as f64;
    let se = (sigma2 * (1.0 / n1 as f64 + 1.0 / n0 as f64)).sqrt();
    Ok((m1 - m0, se))
}

#[cfg(test)]
mod tests {
    use super::*;

    // Dense normal-equations oracle: (XᵀWX)⁻¹XᵀWy and its inverse diagonal.
    fn dense_wls(x: &[f64], y: &[f64], w: &[f64]) -> (f64, f64, f64) {
        let mut a = [[0.0; 2]; 2];
        let mut b = [0.0; 2];
        for i in 0..x.len() {
            let row = [1.0, x[i]];
            for r in 0..2 {
                b[r] += w[i] * row[r] * y[i];
                for c in 0..2 {
                    a[r][c] += w[i] * row[r] * row[c];
                }
            }
        }
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        let inv11 = a[0][0] / det;
        let beta0 = (a[1][1] * b[0] - a[0][1] * b[1]) / det;
        let beta1 = (a[0][0] * b[1] - a[1][0] * b[0]) / det;
        let rss: f64 = (0..x.len())
            .map(|i| w[i] * (y[i] - beta0 - beta1 * x[i]).powi(2))
            .sum();
        let se = (rss / (x.len() - 2) as f64 * inv11).sqrt();
        (beta0, beta1, se)
    }

    #[test]
    fn matches_normal_equations() {
        let x = [0.12, 0.31, 0.25, 0.6, 0.44, 0.2];
        let y = [0.5, 0.1, -0.3, 0.9, 0.35, 0.05];
        let w: Vec<f64> = x.iter().map(|v| 1.0 / (v * v)).collect();
        let fit = weighted_line(&x, &y, &w).unwrap();
        let (a, b, se) = dense_wls(&x, &y, &w);
        assert!((fit.intercept - a).abs() < 1e-10);
        assert!((fit.slope - b).abs() < 1e-10);
        assert!((fit.slope_se - se).abs() < 1e-10);
    }

    #[test]
    fn exact_fits() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let w = [1.0; 4];
        assert_eq!(weighted_line(&x, &[2.0; 4], &w).unwrap().t, 0.0);
        let y: Vec<f64> = x.iter().map(|v| 1.0 + 0.5 * v).collect();
        assert_eq!(weighted_line(&x, &y, &w).unwrap().t, f64::INFINITY);
        assert_eq!(
            weighted_line(&[2.0; 4], &y, &w),
            Err(Error::DegenerateRegressor)
        );
    }

    #[test]
    fn logistic_matches_two_by_two_table() {
        // counts: exposed (x=1) 30 events of 100, unexposed 45 of 100
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (xv, events) in [(1.0, 30), (0.0, 45)] {
            for i in 0..100 {
                x.push(xv);
                y.push(i < events);
            }
        }
        let fit = logistic_fit(&x, &y).unwrap();
        let log_or = ((30.0 * 55.0) / (70.0 * 45.0f64)).ln();
        let se = (1.0 / 30.0 + 1.0 / 70.0 + 1.0 / 45.0 + 1.0 / 55.0f64).sqrt();
        assert!((fit.slope - log_or).abs() < 1e-8);
        assert!((fit.slope_se - se).abs() < 1e-8);
        assert!((fit.intercept - (45.0 / 55.0f64).ln()).abs() < 1e-8);
    }

    #[test]
    fn logistic_separation_errors() {
        let x = [0.0, 0.0, 1.0, 1.0];
        let y = [false, false, true, true];
        assert!(logistic_fit(&x, &y).is_err());
    }

    #[test]
    fn binary_ols_matches_normal_equations() {
        let g = [true, false, true, false, true, false, false];
        let y = [1.2, 0.1, 0.9, -0.4, 1.5, 0.3, 0.0];
        let (b, se) = binary_ols(&g, &y).unwrap();
        let x: Vec<f64> = g.iter().map(|&v| f64::from(u8::from(v))).collect();
        let (_, b_dense, se_dense) = dense_wls(&x, &y, &[1.0; 7]);
        assert!((b - b_dense).abs() < 1e-12);
        assert!((se - se_dense).abs() < 1e-12);
    }
}

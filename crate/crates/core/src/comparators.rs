//! Comparator regions: the asymptotic chi-squared ellipsoid and the
//! F-distribution ellipsoid (exact under i.i.d. Gaussian noise), plus the
//! quantile functions they need.

use serde::{Deserialize, Serialize};

use crate::ellipsoid::Ellipsoid;
use crate::error::{Result, SpsError};
use crate::regression::RegressionSummary;
use crate::special;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Family {
    ChiSquared(u32),
    FisherF(u32, u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileSpec {
    pub family: Family,
    pub level: f64,
}

impl QuantileSpec {
    pub fn chi_squared(dof: u32, level: f64) -> Result<Self> {
        Self::new(Family::ChiSquared(dof), level)
    }

    pub fn fisher_f(d1: u32, d2: u32, level: f64) -> Result<Self> {
        Self::new(Family::FisherF(d1, d2), level)
    }

    pub fn new(family: Family, level: f64) -> Result<Self> {
        if !(level > 0.0 && level < 1.0) {
            return Err(SpsError::config(format!("level {level} must lie in (0, 1)")));
        }
        let ok = match family {
            Family::ChiSquared(k) => k >= 1,
            Family::FisherF(a, b) => a >= 1 && b >= 1,
        };
        if !ok {
            return Err(SpsError::config("degrees of freedom must be at least 1"));
        }
        Ok(QuantileSpec { family, level })
    }

    pub fn cdf(&self, x: f64) -> f64 {
        cdf(self.family, x)
    }
}

pub fn cdf(family: Family, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    match family {
        Family::ChiSquared(k) => special::gamma_p(0.5 * f64::from(k), 0.5 * x),
        Family::FisherF(d1, d2) => {
            let (d1, d2) = (f64::from(d1), f64::from(d2));
            special::beta_inc(0.5 * d1, 0.5 * d2, d1 * x / (d1 * x + d2))
        }
    }
}

/// Inverse CDF by bracketed bisection, run until the bracket collapses to
/// adjacent floating-point values.
pub fn quantile(spec: &QuantileSpec) -> f64 {
    let target = spec.level;
    let f = |x: f64| cdf(spec.family, x);
    let mut lo = 0.0;
    let mut hi = 1.0;
    while f(hi) < target {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // both ends are within one ulp; report the one whose CDF is closer
    if (f(lo) - target).abs() < (f(hi) - target).abs() {
        lo
    } else {
        hi
    }
}

fn check_sample(summary: &RegressionSummary, n: usize) -> Result<f64> {
    let d = summary.dim();
    if n <= d {
        return Err(SpsError::DegenerateSample { n, d });
    }
    summary.sigma2()
}

/// `{theta : (theta - theta_hat)^T R_n (theta - theta_hat) <= mu sigma2_hat / n}`
/// with `mu` the chi-squared(d) quantile at `level`.
pub fn asymptotic_ellipsoid(summary: &RegressionSummary, n: usize, level: f64) -> Result<Ellipsoid> {
    let sigma2 = check_sample(summary, n)?;
    let mu = quantile(&QuantileSpec::chi_squared(summary.dim() as u32, level)?);
    Ellipsoid::new(summary.theta_hat.clone(), summary.r_n.clone(), mu * sigma2 / n as f64)
}

/// Radius `mu d sigma2_hat / n` with `mu` the F(d, n - d) quantile.
pub fn f_ellipsoid(summary: &RegressionSummary, n: usize, level: f64) -> Result<Ellipsoid> {
    let sigma2 = check_sample(summary, n)?;
    let d = summary.dim();
    let mu = quantile(&QuantileSpec::fisher_f(d as u32, (n - d) as u32, level)?);
    Ellipsoid::new(summary.theta_hat.clone(), summary.r_n.clone(), mu * d as f64 * sigma2 / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    fn summary(sigma2: f64, n: usize) -> RegressionSummary {
        RegressionSummary {
            r_n: DMatrix::identity(2, 2),
            r_n_half: DMatrix::identity(2, 2),
            theta_hat: DVector::from_vec(vec![0.7, 0.3]),
            sigma2_hat: Some(sigma2),
            n,
        }
    }

    #[test]
    fn chi2_two_dof_closed_form() {
        let q = quantile(&QuantileSpec::chi_squared(2, 0.95).unwrap());
        assert!((q - (-2.0 * 0.05f64.ln())).abs() < 1e-9);
        assert!((q - 5.99146).abs() < 1e-5);
    }

    #[test]
    fn chi2_one_dof_median() {
        let q = quantile(&QuantileSpec::chi_squared(1, 0.5).unwrap());
        assert!((q - 0.45494).abs() < 1e-5, "{q}");
    }

    #[test]
    fn f_quantile_satisfies_beta_identity() {
        let v = quantile(&QuantileSpec::fisher_f(2, 23, 0.95).unwrap());
        // I_{2v/(2v+23)}(1, 11.5) = 1 - (1 - x)^11.5
        let x = 2.0 * v / (2.0 * v + 23.0);
        assert!((1.0 - (1.0 - x).powf(11.5) - 0.95).abs() < 1e-12);
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(QuantileSpec::chi_squared(0, 0.5).is_err());
        assert!(QuantileSpec::chi_squared(2, 1.0).is_err());
        assert!(QuantileSpec::fisher_f(2, 0, 0.5).is_err());
    }

    #[test]
    fn asymptotic_radius_plugin() {
        assert_eq!(asymptotic_ellipsoid(&summary(0.0, 25), 25, 0.95).unwrap().radius, 0.0);
        let e = asymptotic_ellipsoid(&summary(0.1, 25), 25, 0.95).unwrap();
        assert!((e.radius - 5.991_464_547 * 0.1 / 25.0).abs() < 1e-10);
        assert!((e.radius - 0.02397).abs() < 1e-5);
        assert!(matches!(
            asymptotic_ellipsoid(&summary(0.1, 2), 2, 0.95),
            Err(SpsError::DegenerateSample { .. })
        ));
    }

    #[test]
    fn f_radius_converges_to_chi2() {
        let n = 100_000;
        let f = f_ellipsoid(&summary(0.1, n), n, 0.95).unwrap();
        let c = asymptotic_ellipsoid(&summary(0.1, n), n, 0.95).unwrap();
        assert!((f.radius / c.radius - 1.0).abs() < 0.01);
        assert!(f.radius > c.radius);
    }

    #[test]
    fn radius_increases_with_level() {
        let s = summary(0.1, 25);
        let mut prev = 0.0;
        for level in [0.5, 0.8, 0.9, 0.95, 0.99, 0.999] {
            let r = f_ellipsoid(&s, 25, level).unwrap().radius;
            assert!(r > prev);
            prev = r;
        }
    }
}

//! Least-squares machinery shared by every other module: the outer-product
//! matrix `R_n`, its Cholesky factor, the LS estimate and the residual
//! variance.

use nalgebra::{DMatrix, DVector};

use crate::data::Dataset;
use crate::error::{Result, SpsError};
use crate::linalg;

/// `R_n = (1/n) sum_t phi_t phi_t^T`, symmetric by construction.
pub fn outer_product_matrix(data: &Dataset) -> DMatrix<f64> {
    let phi = data.regressors();
    let (n, d) = phi.shape();
    let mut r = DMatrix::<f64>::zeros(d, d);
    for t in 0..n {
        for i in 0..d {
            let pi = phi[(t, i)];
            for j in 0..=i {
                r[(i, j)] += pi * phi[(t, j)];
            }
        }
    }
    let inv_n = 1.0 / n as f64;
    for i in 0..d {
        for j in 0..=i {
            let v = r[(i, j)] * inv_n;
            r[(i, j)] = v;
            r[(j, i)] = v;
        }
    }
    r
}

/// Lower Cholesky factor of `R_n`; `SingularDesign` signals an
/// outer-product matrix that is not invertible.
pub fn factor_rn(r_n: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    linalg::cholesky_lower(r_n)
}

/// `(1/n) sum_t phi_t y_t`.
pub(crate) fn cross_moment(data: &Dataset) -> DVector<f64> {
    let n = data.n() as f64;
    data.regressors().transpose() * data.outputs() / n
}

/// Least-squares estimate, solving the normal equation through the
/// Cholesky factor of `R_n`.
pub fn least_squares(data: &Dataset) -> Result<DVector<f64>> {
    let l = factor_rn(&outer_product_matrix(data))?;
    Ok(linalg::cholesky_solve(&l, &cross_moment(data)))
}

/// Prediction errors `y_t - phi_t^T theta`.
pub fn residuals(data: &Dataset, theta: &DVector<f64>) -> DVector<f64> {
    data.outputs() - data.regressors() * theta
}

/// Unbiased residual variance `(1/(n-d)) sum_t eps_t(theta)^2`.
pub fn noise_variance_estimate(data: &Dataset, theta_hat: &DVector<f64>) -> Result<f64> {
    let (n, d) = (data.n(), data.dim());
    if n <= d {
        return Err(SpsError::DegenerateSample { n, d });
    }
    Ok(residuals(data, theta_hat).norm_squared() / (n - d) as f64)
}

/// Everything the SPS construction and the comparator ellipsoids need
/// from a dataset, computed once.
#[derive(Debug, Clone)]
pub struct RegressionSummary {
    pub r_n: DMatrix<f64>,
    /// Lower Cholesky factor, `r_n_half * r_n_half^T = r_n`.
    pub r_n_half: DMatrix<f64>,
    pub theta_hat: DVector<f64>,
    /// `None` when `n == d` (no degrees of freedom left).
    pub sigma2_hat: Option<f64>,
    pub n: usize,
}

impl RegressionSummary {
    pub fn compute(data: &Dataset) -> Result<Self> {
        let r_n = outer_product_matrix(data);
        let r_n_half = factor_rn(&r_n)?;
        let theta_hat = linalg::cholesky_solve(&r_n_half, &cross_moment(data));
        let sigma2_hat = noise_variance_estimate(data, &theta_hat).ok();
        Ok(RegressionSummary { r_n, r_n_half, theta_hat, sigma2_hat, n: data.n() })
    }

    pub fn dim(&self) -> usize {
        self.theta_hat.len()
    }

    pub fn sigma2(&self) -> Result<f64> {
        self.sigma2_hat
            .ok_or(SpsError::DegenerateSample { n: self.n, d: self.dim() })
    }
}

//! Ellipsoidal outer approximation of the SPS region.
//!
//! For each perturbed sum the set `{||S_0||^2 <= ||S_i||^2}` is written in
//! the whitened coordinate `z = L^T (theta - theta_hat)` as the quadratic
//! constraint `z^T A z + 2 z^T b + c <= 0`. The largest `||z||^2` over that
//! set is obtained from the dual program
//!
//! ```text
//! minimize gamma  s.t.  lambda >= 0,  [ -I + lambda A   lambda b        ]
//!                                     [ lambda b^T      lambda c + gamma ] >= 0
//! ```
//!
//! which, after diagonalizing `A = V diag(a) V^T` and `b~ = V^T b`, reduces
//! to minimizing the convex scalar function
//! `gamma(lambda) = sum_j lambda^2 b~_j^2 / (lambda a_j - 1) - lambda c`
//! over `lambda > 1 / min_j a_j`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::data::Dataset;
use crate::ellipsoid::Ellipsoid;
use crate::error::{Result, SpsError};
use crate::linalg;
use crate::regression::RegressionSummary;
use crate::sps::{Norm, SpsSetup};

/// Default relative tolerance on the dual value.
pub const DEFAULT_DUAL_TOL: f64 = 1e-9;

const GOLDEN_MAX_ITERS: usize = 2000;

/// Quadratic data of one perturbed sum.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationQuadratic {
    /// `Q_i = (1/n) sum_t alpha_{i,t} phi_t phi_t^T`
    pub q_mat: DMatrix<f64>,
    /// `psi_i = (1/n) sum_t alpha_{i,t} phi_t y_t`
    pub psi: DVector<f64>,
    pub a_mat: DMatrix<f64>,
    pub b_vec: DVector<f64>,
    pub c_scalar: f64,
}

impl PerturbationQuadratic {
    pub fn dim(&self) -> usize {
        self.b_vec.len()
    }

    /// `z^T A z + 2 z^T b + c`; nonpositive on the feasible set.
    pub fn constraint(&self, z: &DVector<f64>) -> f64 {
        z.dot(&(&self.a_mat * z)) + 2.0 * z.dot(&self.b_vec) + self.c_scalar
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.a_mat.clone()).eigenvalues.min()
    }
}

/// Builds `Q_i, psi_i, A_i, b_i, c_i` for perturbed sum `i` in `1..m`.
///
/// With `L = R_n^{1/2}`, `P = L^{-1} Q_i L^{-T}` and `w = L^{-1}(psi_i - Q_i theta_hat)`
/// (which is `S_i(theta_hat)`), the constraint data are `A = I - P^2`,
/// `b = P w` and `c = -||w||^2`; all inverses are triangular solves.
pub fn build_quadratic(
    setup: &SpsSetup,
    summary: &RegressionSummary,
    data: &Dataset,
    i: usize,
) -> Result<PerturbationQuadratic> {
    if i == 0 || i >= setup.m() {
        return Err(SpsError::config(format!("perturbation index {i} out of range 1..{}", setup.m())));
    }
    if data.n() != setup.n() {
        return Err(SpsError::DimensionMismatch { expected: setup.n(), got: data.n() });
    }
    let (n, d) = (data.n(), data.dim());
    let phi = data.regressors();
    let y = data.outputs();
    let mut q_mat = DMatrix::<f64>::zeros(d, d);
    let mut psi = DVector::<f64>::zeros(d);
    for t in 0..n {
        let a = setup.sign(i, t);
        for r in 0..d {
            let ar = a * phi[(t, r)];
            psi[r] += ar * y[t];
            for c in 0..=r {
                q_mat[(r, c)] += ar * phi[(t, c)];
            }
        }
    }
    for r in 0..d {
        for c in 0..r {
            q_mat[(c, r)] = q_mat[(r, c)];
        }
    }
    q_mat /= n as f64;
    psi /= n as f64;

    let l = &summary.r_n_half;
    // P = L^{-1} Q L^{-T} = (L^{-1} (L^{-1} Q)^T)^T, symmetric
    let x = linalg::solve_lower_matrix(l, &q_mat);
    let mut p = linalg::solve_lower_matrix(l, &x.transpose()).transpose();
    linalg::symmetrize(&mut p);
    let w = linalg::solve_lower(l, &(&psi - &q_mat * &summary.theta_hat));

    let mut a_mat = DMatrix::<f64>::identity(d, d) - &p * &p;
    linalg::symmetrize(&mut a_mat);
    let b_vec = &p * &w;
    let c_scalar = -w.norm_squared();
    Ok(PerturbationQuadratic { q_mat, psi, a_mat, b_vec, c_scalar })
}

/// Optimal value of the dual program: the largest `||z||^2` subject to
/// `z^T A z + 2 z^T b + c <= 0`.
///
/// Returns `+inf` when `A` has an eigenvalue at or below
/// `1e-9 * max(1, lambda_max)`, since the feasible set then extends
/// without bound.
pub fn solve_dual(pq: &PerturbationQuadratic, tol: f64) -> Result<f64> {
    let eig = SymmetricEigen::new(pq.a_mat.clone());
    let a = eig.eigenvalues;
    let a_min = a.min();
    let tol_eig = 1e-9 * a.max().max(1.0);
    if a_min <= tol_eig {
        return Ok(f64::INFINITY);
    }
    let bt = eig.eigenvectors.transpose() * &pq.b_vec;
    let c = pq.c_scalar;

    // gamma(lambda) = lambda * slope + sum b~^2/a^2 + sum b~^2 / (a^2 (lambda a - 1))
    let bta: f64 = bt.iter().zip(a.iter()).map(|(b, a)| b * b / a).sum();
    let slope = bta - c;
    let scale = bta + c.abs();
    if slope <= 1e-13 * scale {
        if slope < -1e-9 * scale {
            return Err(SpsError::NumericalFailure(
                "quadratic constraint has an empty feasible set".into(),
            ));
        }
        // feasible set is the single point z = -A^{-1} b
        return Ok(bt.iter().zip(a.iter()).map(|(b, a)| (b / a).powi(2)).sum());
    }

    let gamma = |lambda: f64| -> f64 {
        let mut g = -lambda * c;
        for (bj, aj) in bt.iter().zip(a.iter()) {
            if *bj != 0.0 {
                g += lambda * lambda * bj * bj / (lambda * aj - 1.0);
            }
        }
        g
    };

    let lo = 1.0 / a_min;
    // gamma'(lambda) = slope - sum b~^2 / (a (lambda a - 1)^2) is nonnegative here
    let hi = (1.0 + (bt.norm_squared() / (a_min * slope)).sqrt()) / a_min;
    if !(hi > lo) {
        return Ok(gamma(lo));
    }

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut left, mut right) = (lo, hi);
    let mut x1 = right - inv_phi * (right - left);
    let mut x2 = left + inv_phi * (right - left);
    let (mut f1, mut f2) = (gamma(x1), gamma(x2));
    let width_tol = (tol * 1e-3).max(4.0 * f64::EPSILON);
    let mut converged = false;
    for _ in 0..GOLDEN_MAX_ITERS {
        if f1.is_nan() || f2.is_nan() {
            break;
        }
        if right - left <= width_tol * right {
            converged = true;
            break;
        }
        if f1 < f2 {
            right = x2;
            x2 = x1;
            f2 = f1;
            x1 = right - inv_phi * (right - left);
            f1 = gamma(x1);
        } else {
            left = x1;
            x1 = x2;
            f1 = f2;
            x2 = left + inv_phi * (right - left);
            f2 = gamma(x2);
        }
    }
    let best = f1.min(f2);
    if !converged || !best.is_finite() {
        return Err(SpsError::NumericalFailure(format!(
            "golden-section search did not converge (bracket [{left:e}, {right:e}])"
        )));
    }
    Ok(best)
}

/// Dual values `gamma*_i` for `i = 1..m`, in index order.
pub fn dual_values(setup: &SpsSetup, summary: &RegressionSummary, data: &Dataset) -> Result<Vec<f64>> {
    (1..setup.m())
        .map(|i| solve_dual(&build_quadratic(setup, summary, data, i)?, DEFAULT_DUAL_TOL))
        .collect()
}

/// `q`-th largest entry, counting `+inf` as largest.
pub fn qth_largest(values: &[f64], q: usize) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    sorted[q - 1]
}

/// Ellipsoid `{(theta - theta_hat)^T R_n (theta - theta_hat) <= r}` containing
/// the SPS region, with `r` the `q`-th largest dual value.
pub fn outer_approximation(setup: &SpsSetup, summary: &RegressionSummary, data: &Dataset) -> Result<Ellipsoid> {
    if setup.norm() != Norm::L2 {
        return Err(SpsError::NormUnsupported(setup.norm()));
    }
    let values = dual_values(setup, summary, data)?;
    let radius = qth_largest(&values, setup.q());
    Ellipsoid::new(summary.theta_hat.clone(), summary.r_n.clone(), radius)
}

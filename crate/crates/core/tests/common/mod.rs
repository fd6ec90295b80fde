//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sps_core::{Dataset, RegressionSummary};

/// Largest `||z||^2` over `{z : z^T A z + 2 b^T z + c <= 0}` for `A > 0`,
/// found in the primal by sampling the boundary ellipsoid densely and
/// polishing the best samples with a monotone ascent.
///
/// The feasible set is `(z - z_c)^T A (z - z_c) <= rho` with `z_c = -A^{-1} b`
/// and `rho = b^T A^{-1} b - c`; its boundary is `z_c + M u`, `|u| = 1`,
/// `M = sqrt(rho) C^{-T}` where `A = C C^T`. Since `f(u) = |z_c + M u|^2` is
/// convex, maximising its linearisation over the sphere never decreases it:
/// `u <- normalize(M^T (z_c + M u))`.
pub fn primal_max_oracle(a: &DMatrix<f64>, b: &DVector<f64>, c: f64) -> f64 {
    let d = a.nrows();
    let chol = a.clone().cholesky().expect("oracle needs A positive definite");
    let z_c = -chol.solve(b);
    let rho = b.dot(&chol.solve(b)) - c;
    assert!(rho >= 0.0, "empty feasible set");
    let c_lower = chol.l();
    let c_inv_t = c_lower.transpose().try_inverse().expect("invertible factor");
    let m = c_inv_t * rho.sqrt();
    let f = |u: &DVector<f64>| (&z_c + &m * u).norm_squared();

    let starts = sphere_samples(d);
    let mut scored: Vec<(f64, DVector<f64>)> = starts.into_iter().map(|u| (f(&u), u)).collect();
    scored.sort_by(|x, y| y.0.total_cmp(&x.0));
    let mut best = scored[0].0;
    for (_, u0) in scored.into_iter().take(8) {
        let mut u = u0;
        let mut value = f(&u);
        for _ in 0..200_000 {
            let g = m.transpose() * (&z_c + &m * &u);
            let norm = g.norm();
            if norm == 0.0 {
                break;
            }
            let next = g / norm;
            let next_value = f(&next);
            let step = (&next - &u).norm();
            u = next;
            if next_value < value || step < 1e-15 {
                value = value.max(next_value);
                break;
            }
            value = next_value;
        }
        best = best.max(value);
    }
    best
}

/// Dense unit vectors: both signs for `d = 1`, an angle grid for `d = 2`,
/// a Fibonacci lattice for `d = 3`, Gaussian directions otherwise.
fn sphere_samples(d: usize) -> Vec<DVector<f64>> {
    match d {
        1 => vec![DVector::from_element(1, 1.0), DVector::from_element(1, -1.0)],
        2 => (0..7200)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / 7200.0;
                DVector::from_vec(vec![a.cos(), a.sin()])
            })
            .collect(),
        3 => {
            let count = 20_000;
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|k| {
                    let y = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                    let r = (1.0 - y * y).sqrt();
                    let phi = golden * k as f64;
                    DVector::from_vec(vec![r * phi.cos(), y, r * phi.sin()])
                })
                .collect()
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(d as u64);
            (0..50_000)
                .map(|_| {
                    let v: DVector<f64> = DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
                    let n = v.norm();
                    v / n
                })
                .collect()
        }
    }
}

/// Gaussian regressors, `y = phi^T theta + 0.3 e`.
pub fn random_problem(seed: u64, n: usize, d: usize) -> (Dataset, RegressionSummary) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| StandardNormal.sample(&mut rng)).collect()).collect();
    let y = rows
        .iter()
        .map(|r| {
            let e: f64 = StandardNormal.sample(&mut rng);
            r.iter().enumerate().map(|(k, v)| v / (k as f64 + 1.0)).sum::<f64>() + 0.3 * e
        })
        .collect();
    let data = Dataset::from_rows(&rows, y).unwrap();
    let summary = RegressionSummary::compute(&data).unwrap();
    (data, summary)
}

pub fn theta_hat(summary: &RegressionSummary) -> Vec<f64> {
    summary.theta_hat.iter().copied().collect()
}


//! Data-generating systems: AR(1)-driven inputs filtered through FIR or
//! Laguerre bases, plus additive noise.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Result, SpsError};
use crate::linalg;

pub const DEFAULT_BURN_IN: usize = 100;

fn default_burn_in() -> usize {
    DEFAULT_BURN_IN
}

/// Additive noise process `N_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    Gaussian { variance: f64 },
    Laplacian { variance: f64 },
    Uniform { variance: f64 },
    /// `N_t = a N_{t-1} + sqrt(1 - a^2) W_t` with Gaussian `W_t`, so the
    /// stationary variance equals the innovation variance.
    Ar1 { coeff: f64, innovation_variance: f64 },
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        let var = match *self {
            NoiseModel::Gaussian { variance }
            | NoiseModel::Laplacian { variance }
            | NoiseModel::Uniform { variance } => variance,
            NoiseModel::Ar1 { coeff, innovation_variance } => {
                if !(coeff.abs() < 1.0) {
                    return Err(SpsError::config(format!("noise AR coefficient {coeff} must lie in (-1, 1)")));
                }
                innovation_variance
            }
        };
        // zero is allowed: it gives noiseless data
        if !(var >= 0.0 && var.is_finite()) {
            return Err(SpsError::config(format!("noise variance {var} must be finite and nonnegative")));
        }
        Ok(())
    }

    /// Stationary variance of `N_t`.
    pub fn variance(&self) -> f64 {
        match *self {
            NoiseModel::Gaussian { variance }
            | NoiseModel::Laplacian { variance }
            | NoiseModel::Uniform { variance } => variance,
            NoiseModel::Ar1 { innovation_variance, .. } => innovation_variance,
        }
    }

    /// Draws `len` consecutive samples; the AR variant starts from zero.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, len: usize) -> Vec<f64> {
        match *self {
            NoiseModel::Gaussian { variance } => {
                let sd = variance.sqrt();
                (0..len).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect()
            }
            NoiseModel::Laplacian { variance } => {
                let scale = (variance / 2.0).sqrt();
                (0..len).map(|_| scale * standard_laplace(rng)).collect()
            }
            NoiseModel::Uniform { variance } => {
                let half_width = (3.0 * variance).sqrt();
                (0..len).map(|_| half_width * (2.0 * rng.gen::<f64>() - 1.0)).collect()
            }
            NoiseModel::Ar1 { coeff, innovation_variance } => {
                let gain = (1.0 - coeff * coeff).sqrt() * innovation_variance.sqrt();
                let mut prev = 0.0;
                (0..len)
                    .map(|_| {
                        prev = coeff * prev + gain * rng.sample::<f64, _>(StandardNormal);
                        prev
                    })
                    .collect()
            }
        }
    }
}

/// Unit-scale Laplace variate by inverting the CDF.
fn standard_laplace<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.gen::<f64>() - 0.5;
        let tail = 1.0 - 2.0 * u.abs();
        if tail > 0.0 {
            return -u.signum() * tail.ln();
        }
    }
}

/// How regressors are formed from the input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegressorBasis {
    /// `phi_t = [U_{t-1}, ..., U_{t-d}]`.
    Fir { order: usize },
    /// Input filtered through `1/(z - a) * ((1 - a z)/(z - a))^(k-1)`,
    /// `k = 1..order`. `alpha = 0` recovers the FIR basis.
    Laguerre { order: usize, alpha: f64 },
}

impl RegressorBasis {
    pub fn order(&self) -> usize {
        match *self {
            RegressorBasis::Fir { order } | RegressorBasis::Laguerre { order, .. } => order,
        }
    }

    fn with_order(self, order: usize) -> Self {
        match self {
            RegressorBasis::Fir { .. } => RegressorBasis::Fir { order },
            RegressorBasis::Laguerre { alpha, .. } => RegressorBasis::Laguerre { order, alpha },
        }
    }

    /// Filter bank output, `len x count`, from zero initial conditions.
    /// Column `k` at time `s` depends on inputs up to `s - 1`.
    fn filter(&self, input: &[f64], count: usize) -> DMatrix<f64> {
        let len = input.len();
        let mut x = DMatrix::<f64>::zeros(len, count);
        let alpha = match *self {
            RegressorBasis::Fir { .. } => 0.0,
            RegressorBasis::Laguerre { alpha, .. } => alpha,
        };
        for s in 1..len {
            x[(s, 0)] = alpha * x[(s - 1, 0)] + input[s - 1];
            for k in 1..count {
                x[(s, k)] = alpha * x[(s - 1, k)] + x[(s - 1, k - 1)] - alpha * x[(s, k - 1)];
            }
        }
        x
    }
}

/// A complete data-generating system.
///
/// `true_params` may be longer than the basis order, in which case the model
/// is under-parameterised and the coverage target is the asymptotic
/// least-squares limit ([`SystemSpec::target_parameter`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub true_params: Vec<f64>,
    pub input_ar_coeff: f64,
    pub input_noise_variance: f64,
    pub noise: NoiseModel,
    pub basis: RegressorBasis,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
}

impl SystemSpec {
    /// FIR system driven by `U_t = 0.75 U_{t-1} + V_t`, `V_t ~ N(0, 1)`,
    /// with a model order equal to the true order.
    pub fn fir(true_params: Vec<f64>, noise: NoiseModel) -> Self {
        let order = true_params.len();
        SystemSpec {
            true_params,
            input_ar_coeff: 0.75,
            input_noise_variance: 1.0,
            noise,
            basis: RegressorBasis::Fir { order },
            burn_in: DEFAULT_BURN_IN,
        }
    }

    /// Same system, different model order.
    pub fn with_model_order(mut self, order: usize) -> Self {
        self.basis = self.basis.with_order(order);
        self
    }

    pub fn with_basis(mut self, basis: RegressorBasis) -> Self {
        self.basis = basis;
        self
    }

    pub fn with_noise(mut self, noise: NoiseModel) -> Self {
        self.noise = noise;
        self
    }

    pub fn model_order(&self) -> usize {
        self.basis.order()
    }

    pub fn validate(&self) -> Result<()> {
        if self.true_params.is_empty() || self.true_params.iter().any(|v| !v.is_finite()) {
            return Err(SpsError::config("true_params must be a nonempty finite vector"));
        }
        if self.model_order() == 0 {
            return Err(SpsError::config("model order must be at least 1"));
        }
        if !(self.input_ar_coeff.abs() < 1.0) {
            return Err(SpsError::config(format!(
                "input AR coefficient {} must lie in (-1, 1)",
                self.input_ar_coeff
            )));
        }
        if !(self.input_noise_variance > 0.0 && self.input_noise_variance.is_finite()) {
            return Err(SpsError::config("input_noise_variance must be positive"));
        }
        if let RegressorBasis::Laguerre { alpha, .. } = self.basis {
            if !(alpha.abs() < 1.0) {
                return Err(SpsError::config(format!("Laguerre pole {alpha} must lie in (-1, 1)")));
            }
        }
        self.noise.validate()
    }

    /// The parameter the model should cover: the true parameters when the
    /// model order is sufficient (zero-padded), otherwise the limit of the
    /// least-squares estimate, `R_dd^{-1} R_{d,d*} theta*`, computed from the
    /// stationary autocovariance of the AR(1) input.
    pub fn target_parameter(&self) -> Result<DVector<f64>> {
        self.validate()?;
        let d = self.model_order();
        let d_star = self.true_params.len();
        if d >= d_star {
            let mut target = DVector::zeros(d);
            target.rows_mut(0, d_star).copy_from_slice(&self.true_params);
            return Ok(target);
        }
        if let RegressorBasis::Laguerre { alpha, .. } = self.basis {
            if alpha != 0.0 {
                return Err(SpsError::config(
                    "the least-squares limit is only available for FIR (alpha = 0) bases when under-modelling",
                ));
            }
        }
        let a = self.input_ar_coeff;
        let gamma0 = self.input_noise_variance / (1.0 - a * a);
        let cov = |j: usize, k: usize| gamma0 * a.powi((j as i32 - k as i32).abs());
        let r_dd = DMatrix::from_fn(d, d, |j, k| cov(j, k));
        let r_cross = DMatrix::from_fn(d, d_star, |j, k| cov(j, k));
        let rhs = r_cross * DVector::from_column_slice(&self.true_params);
        let l = linalg::cholesky_lower(&r_dd)?;
        Ok(linalg::cholesky_solve(&l, &rhs))
    }
}

/// Simulates `n` samples of `Y_t = theta*^T phi*_t + N_t` and returns the
/// model-order regressors with the outputs.
///
/// The input starts from rest, and the first `burn_in` samples of input,
/// regressors and noise are discarded. Filter states run through the burn-in,
/// so they start from zero only at the beginning of the run.
pub fn simulate_dataset(spec: &SystemSpec, n: usize, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    if n == 0 {
        return Err(SpsError::config("n must be at least 1"));
    }
    let d = spec.model_order();
    let d_star = spec.true_params.len();
    let width = d.max(d_star);
    let total = spec.burn_in + n;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sd = spec.input_noise_variance.sqrt();
    let mut input = Vec::with_capacity(total);
    let mut prev = 0.0;
    for _ in 0..total {
        prev = spec.input_ar_coeff * prev + sd * rng.sample::<f64, _>(StandardNormal);
        input.push(prev);
    }
    let noise = spec.noise.sample(&mut rng, total);

    let bank = spec.basis.filter(&input, width);
    let skip = spec.burn_in;
    let regressors = DMatrix::from_fn(n, d, |t, k| bank[(skip + t, k)]);
    let outputs = DVector::from_fn(n, |t, _| {
        let s = skip + t;
        (0..d_star).map(|k| spec.true_params[k] * bank[(s, k)]).sum::<f64>() + noise[s]
    });
    Dataset::new(regressors, outputs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regression::least_squares;

    fn laplace_fir2() -> SystemSpec {
        SystemSpec::fir(vec![0.7, 0.3], NoiseModel::Laplacian { variance: 0.1 })
    }

    fn sample_moments(x: &[f64]) -> (f64, f64) {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        (mean, var)
    }

    #[test]
    fn noiseless_outputs_are_exact() {
        let spec = laplace_fir2().with_noise(NoiseModel::Gaussian { variance: 0.0 });
        let data = simulate_dataset(&spec, 50, 3).unwrap();
        for t in 0..50 {
            let phi = data.regressors().row(t);
            let expected = 0.7 * phi[0] + 0.3 * phi[1];
            assert_eq!(data.outputs()[t], expected);
        }
        let theta = least_squares(&data).unwrap();
        assert!((theta[0] - 0.7).abs() < 1e-10 && (theta[1] - 0.3).abs() < 1e-10);
    }

    #[test]
    fn fir_regressors_are_delayed_inputs() {
        let spec = SystemSpec::fir(vec![1.0, 0.0, 0.0], NoiseModel::Gaussian { variance: 0.0 });
        let data = simulate_dataset(&spec, 30, 11).unwrap();
        let x = data.regressors();
        for t in 1..30 {
            assert_eq!(x[(t, 1)], x[(t - 1, 0)]);
            assert_eq!(x[(t, 2)], x[(t - 1, 1)]);
        }
    }

    #[test]
    fn laguerre_with_zero_pole_is_fir() {
        let fir = SystemSpec::fir(vec![0.7, 0.3, 0.1], NoiseModel::Uniform { variance: 0.1 });
        let lag = fir.clone().with_basis(RegressorBasis::Laguerre { order: 3, alpha: 0.0 });
        assert_eq!(simulate_dataset(&fir, 40, 5).unwrap(), simulate_dataset(&lag, 40, 5).unwrap());
    }

    #[test]
    fn laguerre_first_column_is_first_order_filter() {
        // x_1 = U / (z - a): the impulse response is a^(s-1) for s >= 1
        let basis = RegressorBasis::Laguerre { order: 3, alpha: 0.5 };
        let mut impulse = vec![0.0; 12];
        impulse[0] = 1.0;
        let x = basis.filter(&impulse, 3);
        for s in 1..12 {
            assert!((x[(s, 0)] - 0.5f64.powi(s as i32 - 1)).abs() < 1e-15);
        }
        // (z - a) x_2 = (1 - a z) x_1
        for s in 1..11 {
            let lhs = x[(s + 1, 1)] - 0.5 * x[(s, 1)];
            let rhs = x[(s, 0)] - 0.5 * x[(s + 1, 0)];
            assert!((lhs - rhs).abs() < 1e-15);
        }
    }

    #[test]
    fn laplacian_variance_matches() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = NoiseModel::Laplacian { variance: 0.1 }.sample(&mut rng, 100_000);
        let (mean, var) = sample_moments(&x);
        assert!(mean.abs() < 0.005);
        assert!((var - 0.1).abs() < 0.005, "{var}");
    }

    #[test]
    fn uniform_and_gaussian_variances_match() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for model in [NoiseModel::Uniform { variance: 0.1 }, NoiseModel::Gaussian { variance: 0.1 }] {
            let (_, var) = sample_moments(&model.sample(&mut rng, 100_000));
            assert!((var - 0.1).abs() < 0.003, "{model:?}: {var}");
        }
    }

    #[test]
    fn ar_noise_autocorrelation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = NoiseModel::Ar1 { coeff: 0.3, innovation_variance: 0.1 }.sample(&mut rng, 100_100);
        let x = &x[100..];
        let (mean, var) = sample_moments(x);
        let lag1 = x.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum::<f64>() / (x.len() - 1) as f64;
        assert!((lag1 / var - 0.3).abs() < 0.02, "{}", lag1 / var);
        assert!((var - 0.1).abs() < 0.005, "{var}");
    }

    #[test]
    fn undermodelling_target() {
        let spec = SystemSpec::fir(vec![0.7, 0.3, 0.21], NoiseModel::Laplacian { variance: 0.1 }).with_model_order(2);
        let target = spec.target_parameter().unwrap();
        assert!((target[0] - 0.7).abs() < 1e-12);
        assert!((target[1] - (0.3 + 0.75 * 0.21)).abs() < 1e-12);
        // over-parameterised: zero padding
        let padded = laplace_fir2().with_model_order(3).target_parameter().unwrap();
        assert_eq!(padded.as_slice(), &[0.7, 0.3, 0.0]);
    }

    #[test]
    fn undermodelled_least_squares_approaches_target() {
        let spec = SystemSpec::fir(vec![0.7, 0.3, 0.21], NoiseModel::Gaussian { variance: 0.1 }).with_model_order(2);
        let theta = least_squares(&simulate_dataset(&spec, 200_000, 8).unwrap()).unwrap();
        let target = spec.target_parameter().unwrap();
        assert!((theta - target).norm() < 0.01);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut s = laplace_fir2();
        s.input_ar_coeff = 1.0;
        assert!(s.validate().is_err());
        let s = laplace_fir2().with_noise(NoiseModel::Ar1 { coeff: -1.2, innovation_variance: 0.1 });
        assert!(simulate_dataset(&s, 10, 0).is_err());
        let s = laplace_fir2().with_noise(NoiseModel::Gaussian { variance: -0.1 });
        assert!(s.validate().is_err());
        assert!(simulate_dataset(&laplace_fir2(), 0, 0).is_err());
        let s = laplace_fir2().with_basis(RegressorBasis::Laguerre { order: 2, alpha: 1.5 });
        assert!(s.validate().is_err());
    }

    #[test]
    fn same_seed_same_data() {
        let s = laplace_fir2();
        assert_eq!(simulate_dataset(&s, 25, 77).unwrap(), simulate_dataset(&s, 25, 77).unwrap());
        assert_ne!(simulate_dataset(&s, 25, 77).unwrap(), simulate_dataset(&s, 25, 78).unwrap());
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = laplace_fir2().with_basis(RegressorBasis::Laguerre { order: 2, alpha: 0.4 });
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<SystemSpec>(&text).unwrap(), spec);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["noise"]["kind"], "laplacian");
    }
}

//! Shared fixtures for the benchmarks.

use sps_core::experiments::catalog;
use sps_core::{simulate_dataset, Dataset, RegressionSummary, SpsConfig, SpsEvaluator, SpsSetup};

pub struct Fixture {
    pub data: Dataset,
    pub summary: RegressionSummary,
    pub setup: SpsSetup,
    pub eval: SpsEvaluator,
}

/// A second-order FIR problem with `n` samples and the standard `m = 100, q = 5`.
pub fn fir2(n: usize) -> Fixture {
    build(catalog::fir2(catalog::laplacian()), n)
}

/// An eighth-order FIR problem with `n` samples.
pub fn fir8(n: usize) -> Fixture {
    build(catalog::fir8(), n)
}

fn build(system: sps_core::SystemSpec, n: usize) -> Fixture {
    let data = simulate_dataset(&system, n, 7).expect("valid system");
    let summary = RegressionSummary::compute(&data).expect("regular design");
    let setup = SpsSetup::generate(SpsConfig::new(100, 5, 7), n).expect("valid config");
    let eval = SpsEvaluator::new(&setup, &summary, &data).expect("matching sizes");
    Fixture { data, summary, setup, eval }
}

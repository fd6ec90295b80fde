//! Named studies with their default parameters, as run by `sps experiment`.

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Result, SpsError};
use crate::experiments::study::{area_study, coverage_study, ExperimentReport, StudyConfig};
use crate::experiments::system::{NoiseModel, SystemSpec};
use crate::sps::Norm;

pub const EXPERIMENTS: [&str; 7] =
    ["fir2-basic", "fir2-norms", "m-sweep", "f-compare", "undermodel", "ar-noise-block", "fir8-volumes"];

pub const DEFAULT_MASTER_SEED: u64 = 2024;

/// Second-order FIR truth `[0.7, 0.3]`.
pub const FIR2_PARAMS: [f64; 2] = [0.7, 0.3];
/// Third-order truth used with a second-order model.
pub const UNDERMODEL_PARAMS: [f64; 3] = [0.7, 0.3, 0.21];
pub const FIR8_PARAMS: [f64; 8] = [0.7, 0.3, 0.21, 0.2, 0.15, 0.25, 0.1, 0.05];
pub const M_SWEEP: [usize; 6] = [20, 60, 100, 200, 400, 600];

const NOISE_VARIANCE: f64 = 0.1;

pub fn laplacian() -> NoiseModel {
    NoiseModel::Laplacian { variance: NOISE_VARIANCE }
}

pub fn gaussian() -> NoiseModel {
    NoiseModel::Gaussian { variance: NOISE_VARIANCE }
}

pub fn uniform() -> NoiseModel {
    NoiseModel::Uniform { variance: NOISE_VARIANCE }
}

pub fn ar_noise() -> NoiseModel {
    NoiseModel::Ar1 { coeff: 0.3, innovation_variance: NOISE_VARIANCE }
}

pub fn fir2(noise: NoiseModel) -> SystemSpec {
    SystemSpec::fir(FIR2_PARAMS.to_vec(), noise)
}

pub fn undermodelled() -> SystemSpec {
    SystemSpec::fir(UNDERMODEL_PARAMS.to_vec(), laplacian()).with_model_order(2)
}

pub fn fir8() -> SystemSpec {
    SystemSpec::fir(FIR8_PARAMS.to_vec(), laplacian())
}

/// `m = 100, q = 5`: a 95% set.
pub fn standard_config() -> StudyConfig {
    StudyConfig::new(100, 5)
}

/// Caller overrides; `None` keeps the experiment's default.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Overrides {
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub n: Option<usize>,
}

/// Reports of a named experiment plus a compact summary table.
#[derive(Debug, Clone, Serialize)]
pub struct CatalogRun {
    pub name: String,
    pub overrides: Overrides,
    pub summary: Value,
    pub reports: Vec<(String, ExperimentReport)>,
}

fn prop(r: &ExperimentReport, pick: impl Fn(&crate::experiments::study::Aggregates) -> Option<f64>) -> Value {
    json!(pick(&r.aggregates))
}

/// Runs one of [`EXPERIMENTS`].
pub fn run_experiment(name: &str, overrides: Overrides) -> Result<CatalogRun> {
    let seed = overrides.seed.unwrap_or(DEFAULT_MASTER_SEED);
    let trials = |default: usize| overrides.trials.unwrap_or(default);
    let n_or = |default: usize| overrides.n.unwrap_or(default);
    let ns_or = |defaults: &[usize]| overrides.n.map(|n| vec![n]).unwrap_or_else(|| defaults.to_vec());

    let mut reports = Vec::new();
    let summary = match name {
        "fir2-basic" => {
            let cfg = standard_config().with_overbound();
            let r = coverage_study(&fir2(laplacian()), n_or(25), &cfg, trials(10_000), seed)?;
            let s = json!({
                "coverage_sps": r.aggregates.coverage_sps,
                "coverage_asym": r.aggregates.coverage_asym,
                "coverage_f": r.aggregates.coverage_f,
                "coverage_overbound": r.aggregates.coverage_overbound,
            });
            reports.push(("coverage".to_string(), r));
            s
        }
        "fir2-norms" => {
            let mut rows = Vec::new();
            for norm in [Norm::L1, Norm::L2, Norm::Linf] {
                let cfg = standard_config().with_norm(norm);
                let r = coverage_study(&fir2(laplacian()), n_or(25), &cfg, trials(5_000), seed)?;
                rows.push(json!({"norm": norm, "coverage_sps": r.aggregates.coverage_sps}));
                reports.push((norm.to_string(), r));
            }
            Value::Array(rows)
        }
        "m-sweep" => {
            let mut rows = Vec::new();
            for m in M_SWEEP {
                let cfg = StudyConfig::new(m, m / 20);
                let r = area_study(&fir2(laplacian()), n_or(25), &cfg, trials(500), seed)?;
                rows.push(json!({"m": m, "q": m / 20, "mean_area_sps": prop(&r, |a| a.mean_area_sps)}));
                reports.push((format!("m{m}"), r));
            }
            Value::Array(rows)
        }
        "f-compare" => {
            let mut rows = Vec::new();
            for n in ns_or(&[25, 200]) {
                let r = area_study(&fir2(gaussian()), n, &standard_config(), trials(1_000), seed)?;
                let a = &r.aggregates;
                let ratio = a.mean_area_sps.zip(a.mean_area_f).map(|(s, f)| s / f);
                rows.push(json!({
                    "n": n,
                    "mean_area_sps": a.mean_area_sps,
                    "mean_area_f": a.mean_area_f,
                    "ratio": ratio,
                    "coverage_sps": a.coverage_sps,
                    "coverage_f": a.coverage_f,
                }));
                reports.push((format!("n{n}"), r));
            }
            Value::Array(rows)
        }
        "undermodel" => {
            let r = coverage_study(&undermodelled(), n_or(25), &standard_config(), trials(20_000), seed)?;
            let s = json!({"target": r.target, "coverage_sps": r.aggregates.coverage_sps});
            reports.push(("coverage".to_string(), r));
            s
        }
        "ar-noise-block" => {
            let n = n_or(200);
            let cfg = standard_config().with_block(10);
            let cov = coverage_study(&fir2(ar_noise()), n, &cfg, trials(20_000), seed)?;
            // the size comparison is far more expensive per trial; cap it
            let area = area_study(&fir2(gaussian()), n, &cfg, trials(1_000).min(1_000), seed)?;
            let (a, c) = (&area.aggregates, &cov.aggregates);
            let s = json!({
                "coverage_sps": c.coverage_sps,
                "coverage_block": c.coverage_block,
                "coverage_asym": c.coverage_asym,
                "mean_area_sps": a.mean_area_sps,
                "mean_area_block": a.mean_area_block,
                "area_increase": a.mean_area_block.zip(a.mean_area_sps).map(|(b, s)| b / s - 1.0),
            });
            reports.push(("ar-coverage".to_string(), cov));
            reports.push(("gaussian-area".to_string(), area));
            s
        }
        "fir8-volumes" => {
            let mut rows = Vec::new();
            for n in ns_or(&[200, 800, 3200]) {
                let r = area_study(&fir8(), n, &standard_config(), trials(1_000), seed)?;
                let a = &r.aggregates;
                let of_means = a
                    .mean_volume_overbound
                    .zip(a.mean_area_asym)
                    .map(|(v, w)| (v / w).powf(1.0 / FIR8_PARAMS.len() as f64));
                rows.push(json!({
                    "n": n,
                    "mean_increase_per_dim": a.mean_increase_per_dim,
                    "increase_per_dim_of_mean_volumes": of_means,
                    "coverage_overbound": a.coverage_overbound,
                    "unbounded_trials": a.unbounded_trials,
                }));
                reports.push((format!("n{n}"), r));
            }
            Value::Array(rows)
        }
        other => {
            return Err(SpsError::config(format!(
                "unknown experiment `{other}`; valid names: {}",
                EXPERIMENTS.join(", ")
            )))
        }
    };
    Ok(CatalogRun { name: name.to_string(), overrides, summary, reports })
}

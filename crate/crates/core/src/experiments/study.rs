//! Monte Carlo coverage and size studies.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::comparators::{asymptotic_ellipsoid, f_ellipsoid};
use crate::error::{Result, SpsError};
use crate::experiments::system::{simulate_dataset, SystemSpec};
use crate::geometry::ellipsoid_volume;
use crate::outer::outer_approximation;
use crate::region::{region_area, DEFAULT_RESOLUTION};
use crate::regression::RegressionSummary;
use crate::rng::trial_seeds;
use crate::sps::{Norm, SpsConfig, SpsEvaluator, SpsSetup};

fn default_resolution() -> usize {
    DEFAULT_RESOLUTION
}

/// SPS parameters shared by all trials of a study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub m: usize,
    pub q: usize,
    #[serde(default)]
    pub norm: Norm,
    /// Also run Block SPS with this block length.
    #[serde(default)]
    pub block_length: Option<usize>,
    /// Compute the ellipsoidal over-bound in every trial (L2 only).
    #[serde(default)]
    pub overbound: bool,
    /// Grid cells per axis for planar areas.
    #[serde(default = "default_resolution")]
    pub raster_resolution: usize,
}

impl StudyConfig {
    pub fn new(m: usize, q: usize) -> Self {
        StudyConfig { m, q, norm: Norm::L2, block_length: None, overbound: false, raster_resolution: DEFAULT_RESOLUTION }
    }

    pub fn with_norm(mut self, norm: Norm) -> Self {
        self.norm = norm;
        self
    }

    pub fn with_block(mut self, block_length: usize) -> Self {
        self.block_length = Some(block_length);
        self
    }

    pub fn with_overbound(mut self) -> Self {
        self.overbound = true;
        self
    }

    pub fn with_resolution(mut self, cells: usize) -> Self {
        self.raster_resolution = cells;
        self
    }

    /// Nominal level `1 - q/m`, shared by the comparator ellipsoids.
    pub fn level(&self) -> f64 {
        1.0 - self.q as f64 / self.m as f64
    }

    fn sps_config(&self, seed: u64, block_length: usize) -> SpsConfig {
        SpsConfig::new(self.m, self.q, seed).with_norm(self.norm).with_block_length(block_length)
    }
}

/// What a study measures in each trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    /// Membership of the target parameter only.
    Coverage,
    /// Membership plus region sizes (raster areas for `d = 2`, ellipsoid
    /// volumes for any `d`).
    Area,
}

/// Outcome of one trial. Sizes are `d`-dimensional volumes (areas when
/// `d = 2`); `None` means not requested or not available.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub covered_sps: bool,
    pub covered_block: Option<bool>,
    pub covered_asym: bool,
    pub covered_f: bool,
    pub covered_overbound: Option<bool>,
    pub area_sps: Option<f64>,
    pub area_block: Option<f64>,
    pub area_f: Option<f64>,
    pub area_asym: Option<f64>,
    pub radius_asym: f64,
    pub radius_f: f64,
    pub radius_overbound: Option<f64>,
    pub volume_overbound: Option<f64>,
    /// `(V_overbound / V_asym)^(1/d)`.
    pub increase_per_dim: Option<f64>,
}

/// Empirical proportion with a 95% Wilson score interval:
/// `(p + z^2/2N +- z sqrt(p(1-p)/N + z^2/4N^2)) / (1 + z^2/N)`, `z = 1.95996...`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Proportion {
    pub successes: usize,
    pub trials: usize,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

const Z_95: f64 = 1.959_963_984_540_054;

impl Proportion {
    pub fn new(successes: usize, trials: usize) -> Self {
        assert!(trials > 0 && successes <= trials);
        let n = trials as f64;
        let p = successes as f64 / n;
        let z2 = Z_95 * Z_95;
        let denom = 1.0 + z2 / n;
        let center = (p + z2 / (2.0 * n)) / denom;
        let half = Z_95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
        Proportion {
            successes,
            trials,
            estimate: p,
            ci_low: (center - half).max(0.0),
            ci_high: (center + half).min(1.0),
        }
    }

    fn from_flags(flags: impl Iterator<Item = bool>) -> Option<Self> {
        let (mut hits, mut total) = (0, 0);
        for f in flags {
            total += 1;
            hits += f as usize;
        }
        (total > 0).then(|| Proportion::new(hits, total))
    }
}

/// Summaries that are a pure function of the per-trial records.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregates {
    pub coverage_sps: Proportion,
    pub coverage_block: Option<Proportion>,
    pub coverage_asym: Proportion,
    pub coverage_f: Proportion,
    pub coverage_overbound: Option<Proportion>,
    pub mean_area_sps: Option<f64>,
    pub mean_area_block: Option<f64>,
    pub mean_area_f: Option<f64>,
    pub mean_area_asym: Option<f64>,
    /// Mean over trials with a bounded over-bound.
    pub mean_radius_overbound: Option<f64>,
    pub mean_volume_overbound: Option<f64>,
    /// Mean of the per-trial `(V_overbound / V_asym)^(1/d)`.
    pub mean_increase_per_dim: Option<f64>,
    /// Trials whose over-bound (or SPS area) was unbounded.
    pub unbounded_trials: usize,
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let (mut sum, mut count) = (0.0, 0usize);
    for v in values.flatten().filter(|v| v.is_finite()) {
        sum += v;
        count += 1;
    }
    (count > 0).then(|| sum / count as f64)
}

impl Aggregates {
    /// Panics on an empty slice.
    pub fn from_records(records: &[TrialRecord]) -> Self {
        assert!(!records.is_empty(), "aggregates need at least one trial");
        let r = records;
        Aggregates {
            coverage_sps: Proportion::from_flags(r.iter().map(|t| t.covered_sps)).unwrap(),
            coverage_block: Proportion::from_flags(r.iter().filter_map(|t| t.covered_block)),
            coverage_asym: Proportion::from_flags(r.iter().map(|t| t.covered_asym)).unwrap(),
            coverage_f: Proportion::from_flags(r.iter().map(|t| t.covered_f)).unwrap(),
            coverage_overbound: Proportion::from_flags(r.iter().filter_map(|t| t.covered_overbound)),
            mean_area_sps: mean_of(r.iter().map(|t| t.area_sps)),
            mean_area_block: mean_of(r.iter().map(|t| t.area_block)),
            mean_area_f: mean_of(r.iter().map(|t| t.area_f)),
            mean_area_asym: mean_of(r.iter().map(|t| t.area_asym)),
            mean_radius_overbound: mean_of(r.iter().map(|t| t.radius_overbound)),
            mean_volume_overbound: mean_of(r.iter().map(|t| t.volume_overbound)),
            mean_increase_per_dim: mean_of(r.iter().map(|t| t.increase_per_dim)),
            unbounded_trials: r
                .iter()
                .filter(|t| t.radius_overbound == Some(f64::INFINITY) || t.area_sps == Some(f64::INFINITY))
                .count(),
        }
    }
}

/// Full study output: configuration echo, per-trial records (in trial order)
/// and aggregates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub kind: StudyKind,
    pub system: SystemSpec,
    pub n: usize,
    pub config: StudyConfig,
    pub trials: usize,
    pub master_seed: u64,
    pub target: Vec<f64>,
    pub records: Vec<TrialRecord>,
    pub aggregates: Aggregates,
}

fn opt_bool(v: Option<bool>) -> String {
    v.map(|b| (b as u8).to_string()).unwrap_or_default()
}

fn opt_f64(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Configuration echo without the per-trial records.
    pub fn config_echo(&self) -> serde_json::Value {
        serde_json::json!({
            "kind": self.kind,
            "system": self.system,
            "n": self.n,
            "config": self.config,
            "trials": self.trials,
            "master_seed": self.master_seed,
        })
    }

    /// One row per trial; booleans as `1`/`0`, missing values empty. The
    /// first line is a `#` comment carrying the configuration echo.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# {}", self.config_echo())?;
        writeln!(w, "trial,covered_sps,covered_block,covered_asym,area_sps,area_f,radius_overbound")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.trial,
                r.covered_sps as u8,
                opt_bool(r.covered_block),
                r.covered_asym as u8,
                opt_f64(r.area_sps),
                opt_f64(r.area_f),
                opt_f64(r.radius_overbound),
            )?;
        }
        Ok(())
    }
}

/// Per-trial size of an SPS set: raster area when `d = 2`.
fn planar_area(
    eval: &SpsEvaluator,
    center: &[f64],
    overbound: Option<&crate::Ellipsoid>,
    resolution: usize,
) -> Result<Option<f64>> {
    if eval.dim() != 2 {
        return Ok(None);
    }
    match region_area(eval, center, overbound, resolution) {
        Ok(a) => Ok(Some(a)),
        Err(SpsError::InfiniteRegion) => Ok(Some(f64::INFINITY)),
        Err(e) => Err(e),
    }
}

fn run_trial(
    spec: &SystemSpec,
    n: usize,
    config: &StudyConfig,
    kind: StudyKind,
    target: &[f64],
    master_seed: u64,
    trial: u64,
) -> Result<TrialRecord> {
    let seeds = trial_seeds(master_seed, trial);
    let data = simulate_dataset(spec, n, seeds.data)?;
    let summary = RegressionSummary::compute(&data)?;
    let center: Vec<f64> = summary.theta_hat.iter().copied().collect();
    let level = config.level();
    let areas = kind == StudyKind::Area;
    let want_overbound = config.norm == Norm::L2 && (config.overbound || areas);

    let setup = SpsSetup::generate(config.sps_config(seeds.sps, 1), n)?;
    let eval = SpsEvaluator::new(&setup, &summary, &data)?;
    let overbound = if want_overbound { Some(outer_approximation(&setup, &summary, &data)?) } else { None };

    let (covered_block, area_block) = match config.block_length {
        Some(t) => {
            let block = SpsSetup::generate(config.sps_config(seeds.block, t), n)?;
            let block_eval = SpsEvaluator::new(&block, &summary, &data)?;
            let area = if areas && data.dim() == 2 {
                let ob = if config.norm == Norm::L2 { Some(outer_approximation(&block, &summary, &data)?) } else { None };
                planar_area(&block_eval, &center, ob.as_ref(), config.raster_resolution)?
            } else {
                None
            };
            (Some(block_eval.contains(target)), area)
        }
        None => (None, None),
    };

    let asym = asymptotic_ellipsoid(&summary, n, level)?;
    let f = f_ellipsoid(&summary, n, level)?;
    let mut record = TrialRecord {
        trial,
        covered_sps: eval.contains(target),
        covered_block,
        covered_asym: asym.contains(target),
        covered_f: f.contains(target),
        covered_overbound: overbound.as_ref().map(|e| e.contains(target)),
        area_sps: None,
        area_block,
        area_f: None,
        area_asym: None,
        radius_asym: asym.radius,
        radius_f: f.radius,
        radius_overbound: overbound.as_ref().map(|e| e.radius),
        volume_overbound: None,
        increase_per_dim: None,
    };
    if areas {
        record.area_sps = planar_area(&eval, &center, overbound.as_ref(), config.raster_resolution)?;
        record.area_f = Some(ellipsoid_volume(&f)?);
        record.area_asym = Some(ellipsoid_volume(&asym)?);
        if let Some(e) = &overbound {
            // same shape matrix, so the per-axis scale is sqrt of the radius ratio
            let ratio = (e.radius / asym.radius).sqrt();
            record.increase_per_dim = Some(ratio);
            record.volume_overbound =
                Some(if e.is_bounded() { ellipsoid_volume(e)? } else { f64::INFINITY });
        }
    }
    Ok(record)
}

fn run_study(
    kind: StudyKind,
    spec: &SystemSpec,
    n: usize,
    config: &StudyConfig,
    trials: usize,
    master_seed: u64,
) -> Result<ExperimentReport> {
    if trials == 0 {
        return Err(SpsError::config("trials must be at least 1"));
    }
    spec.validate()?;
    if n <= spec.model_order() {
        return Err(SpsError::DegenerateSample { n, d: spec.model_order() });
    }
    if config.raster_resolution < 2 {
        return Err(SpsError::config("raster resolution must be at least 2"));
    }
    // surfaces configuration errors before any trial runs
    SpsSetup::generate(config.sps_config(0, 1), n)?;
    if let Some(t) = config.block_length {
        SpsSetup::generate(config.sps_config(0, t), n)?;
    }
    let target: Vec<f64> = spec.target_parameter()?.iter().copied().collect();
    let records = (0..trials as u64)
        .into_par_iter()
        .map(|trial| run_trial(spec, n, config, kind, &target, master_seed, trial))
        .collect::<Result<Vec<_>>>()?;
    let aggregates = Aggregates::from_records(&records);
    Ok(ExperimentReport {
        kind,
        system: spec.clone(),
        n,
        config: config.clone(),
        trials,
        master_seed,
        target,
        records,
        aggregates,
    })
}

/// Fresh data and a fresh SPS setup per trial; records whether the target
/// parameter lies in the SPS set and in the comparator ellipsoids (and the
/// Block SPS set / over-bound when configured).
pub fn coverage_study(
    spec: &SystemSpec,
    n: usize,
    config: &StudyConfig,
    trials: usize,
    master_seed: u64,
) -> Result<ExperimentReport> {
    run_study(StudyKind::Coverage, spec, n, config, trials, master_seed)
}

/// Like [`coverage_study`], additionally measuring region sizes: raster areas
/// of the SPS (and Block SPS) sets when `d = 2`, and volumes of the F,
/// chi-squared and over-bound ellipsoids for any `d`.
pub fn area_study(
    spec: &SystemSpec,
    n: usize,
    config: &StudyConfig,
    trials: usize,
    master_seed: u64,
) -> Result<ExperimentReport> {
    run_study(StudyKind::Area, spec, n, config, trials, master_seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::system::NoiseModel;

    fn fir2() -> SystemSpec {
        SystemSpec::fir(vec![0.7, 0.3], NoiseModel::Laplacian { variance: 0.1 })
    }

    #[test]
    fn wilson_interval_formula() {
        let p = Proportion::new(950, 1000);
        assert_eq!(p.estimate, 0.95);
        assert!(p.ci_low < 0.95 && p.ci_high > 0.95);
        // reference values from the closed form evaluated independently
        let (n, phat, z) = (1000.0f64, 0.95f64, Z_95);
        let c = (phat + z * z / (2.0 * n)) / (1.0 + z * z / n);
        let h = z / (1.0 + z * z / n) * (phat * (1.0 - phat) / n + z * z / (4.0 * n * n)).sqrt();
        assert!((p.ci_low - (c - h)).abs() < 1e-15 && (p.ci_high - (c + h)).abs() < 1e-15);
        let all = Proportion::new(10, 10);
        assert!((all.ci_high - 1.0).abs() < 1e-12);
        assert!(all.ci_low < 1.0 && all.ci_low > 0.6);
        let none = Proportion::new(0, 10);
        assert!(none.ci_low.abs() < 1e-12);
    }

    #[test]
    fn report_is_reproducible_and_aggregates_match_records() {
        let cfg = StudyConfig::new(20, 1).with_block(5).with_overbound();
        let a = coverage_study(&fir2(), 25, &cfg, 40, 99).unwrap();
        let b = coverage_study(&fir2(), 25, &cfg, 40, 99).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        assert_eq!(a.aggregates, Aggregates::from_records(&a.records));
        assert_eq!(a.records.iter().map(|r| r.trial).collect::<Vec<_>>(), (0..40).collect::<Vec<_>>());
        assert_eq!(a.aggregates.coverage_block.unwrap().trials, 40);
        let c = coverage_study(&fir2(), 25, &cfg, 40, 100).unwrap();
        assert_ne!(a.records, c.records);
    }

    #[test]
    fn area_study_fills_sizes() {
        let cfg = StudyConfig::new(20, 1).with_resolution(80);
        let r = area_study(&fir2(), 25, &cfg, 4, 1).unwrap();
        for rec in &r.records {
            assert!(rec.area_sps.unwrap() > 0.0);
            assert!(rec.area_f.unwrap() > 0.0 && rec.area_asym.unwrap() > 0.0);
            assert!(rec.radius_overbound.is_some());
        }
        assert!(r.aggregates.mean_area_sps.is_some());
    }

    #[test]
    fn csv_has_expected_columns() {
        let r = coverage_study(&fir2(), 25, &StudyConfig::new(10, 1), 3, 5).unwrap();
        let mut out = Vec::new();
        r.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# {"));
        assert_eq!(lines[1], "trial,covered_sps,covered_block,covered_asym,area_sps,area_f,radius_overbound");
        assert_eq!(lines.len(), 5);
        assert!(lines[2].starts_with("0,"));
    }

    #[test]
    fn bad_study_inputs() {
        let cfg = StudyConfig::new(20, 1);
        assert!(coverage_study(&fir2(), 25, &cfg, 0, 1).is_err());
        assert!(coverage_study(&fir2(), 2, &cfg, 5, 1).is_err());
        assert!(coverage_study(&fir2(), 25, &StudyConfig::new(20, 1).with_block(7), 5, 1).is_err());
        assert!(coverage_study(&fir2(), 25, &StudyConfig::new(20, 20), 5, 1).is_err());
    }
}

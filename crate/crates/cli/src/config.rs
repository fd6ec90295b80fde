//! Resolution of flags, config file and environment into one validated run
//! configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sps_core::experiments::catalog;
use sps_core::rng::trial_seeds;
use sps_core::{simulate_dataset, Dataset, Norm, SpsConfig, SystemSpec};

use crate::cli::RunArgs;
use crate::error::{CliError, Context};

pub const SEED_ENV: &str = "SPS_SEED";
pub const DEFAULT_M: usize = 100;
pub const DEFAULT_Q: usize = 5;
pub const DEFAULT_N: usize = 25;
pub const DEFAULT_OUT: &str = "sps-output";

/// Built-in systems for `--simulate`.
pub const PRESETS: [&str; 5] = ["fir2", "fir2-gaussian", "fir2-ar", "undermodel", "fir8"];

pub fn preset(name: &str) -> Result<SystemSpec, CliError> {
    Ok(match name {
        "fir2" => catalog::fir2(catalog::laplacian()),
        "fir2-gaussian" => catalog::fir2(catalog::gaussian()),
        "fir2-ar" => catalog::fir2(catalog::ar_noise()),
        "undermodel" => catalog::undermodelled(),
        "fir8" => catalog::fir8(),
        other => {
            return Err(CliError::config(format!(
                "unknown system `{other}`; valid names: {}",
                PRESETS.join(", ")
            )))
        }
    })
}

/// A system given either by preset name or in full.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SystemChoice {
    Preset(String),
    Spec(SystemSpec),
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorFile {
    pub system: Option<SystemChoice>,
    pub n: Option<usize>,
    pub seed: Option<u64>,
}

/// Contents of a `--config` JSON file; every field is optional.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub data: Option<PathBuf>,
    pub generator: Option<GeneratorFile>,
    pub m: Option<usize>,
    pub q: Option<usize>,
    pub seed: Option<u64>,
    pub norm: Option<Norm>,
    pub block_length: Option<usize>,
    pub theta: Option<Vec<f64>>,
    pub out: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).context(format!("reading {}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    File(PathBuf),
    Generator { system: SystemSpec, n: usize, seed: u64 },
}

impl DataSource {
    pub fn load(&self) -> Result<Dataset, CliError> {
        match self {
            DataSource::File(path) => Dataset::load(path).context(format!("reading {}", path.display())),
            DataSource::Generator { system, n, seed } => simulate_dataset(system, *n, *seed).context("simulating data"),
        }
    }
}

/// Fully resolved parameters of a single-dataset command.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub source: DataSource,
    pub sps: SpsConfig,
    pub theta: Option<Vec<f64>>,
    pub out: PathBuf,
}

/// Flag > config file > `SPS_SEED` > 0.
pub fn resolve_seed(flag: Option<u64>, file: Option<u64>) -> Result<u64, CliError> {
    if let Some(s) = flag.or(file) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| CliError::config(format!("{SEED_ENV}={v} is not an unsigned integer"))),
        Err(_) => Ok(0),
    }
}

impl RunConfig {
    pub fn resolve(args: &RunArgs, theta_flag: Option<Vec<f64>>) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let seed = resolve_seed(args.seed, file.seed)?;

        let data_path = args.data.clone().or(file.data.clone());
        let generator = if let Some(name) = &args.simulate {
            Some(GeneratorFile { system: Some(SystemChoice::Preset(name.clone())), n: None, seed: None })
        } else if args.data.is_none() {
            file.generator.clone()
        } else {
            None
        };
        let source = match (data_path, generator) {
            (Some(_), Some(_)) => {
                return Err(CliError::config("give either a data file or a generator, not both"));
            }
            (None, None) => return Err(CliError::config("no data: pass --data FILE or --simulate SYSTEM")),
            (Some(path), None) => {
                if args.n.is_some() || args.data_seed.is_some() {
                    return Err(CliError::config("--n and --data-seed only apply to simulated data"));
                }
                DataSource::File(path)
            }
            (None, Some(g)) => {
                let system = match g.system.unwrap_or(SystemChoice::Preset("fir2".into())) {
                    SystemChoice::Preset(name) => preset(&name)?,
                    SystemChoice::Spec(spec) => spec,
                };
                system.validate().context("generator")?;
                let n = args.n.or(g.n).unwrap_or(DEFAULT_N);
                // a separate stream from the sign generator's
                let data_seed = args.data_seed.or(g.seed).unwrap_or_else(|| trial_seeds(seed, 0).data);
                DataSource::Generator { system, n, seed: data_seed }
            }
        };

        let sps = SpsConfig::new(args.m.or(file.m).unwrap_or(DEFAULT_M), args.q.or(file.q).unwrap_or(DEFAULT_Q), seed)
            .with_norm(args.norm.or(file.norm).unwrap_or_default())
            .with_block_length(args.block.or(file.block_length).unwrap_or(1));
        if sps.m < 2 || sps.q == 0 || sps.q >= sps.m {
            return Err(CliError::config(format!("need m >= 2 and 0 < q < m, got m = {}, q = {}", sps.m, sps.q)));
        }
        if sps.block_length == 0 {
            return Err(CliError::config("block length must be positive"));
        }
        let theta = theta_flag.or(file.theta);
        if let Some(t) = &theta {
            if t.is_empty() || t.iter().any(|v| !v.is_finite()) {
                return Err(CliError::config("theta must be a nonempty list of finite numbers"));
            }
        }
        let out = args.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
        Ok(RunConfig { source, sps, theta, out })
    }

    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("run config serializes")
    }
}

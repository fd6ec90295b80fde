use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use sps_core::Norm;

#[derive(Debug, Parser)]
#[command(name = "sps", version, about = "Sign-Perturbed Sums confidence regions for linear regression")]
pub struct Cli {
    /// Worker threads for parallel work (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test whether one parameter vector lies in the confidence region.
    /// Exit status: 0 member, 3 non-member, 1 configuration error,
    /// 2 singular design.
    Check {
        #[command(flatten)]
        run: RunArgs,
        /// Parameter vector, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        theta: Option<Vec<f64>>,
    },
    /// Write boundary, raster and comparison ellipses of a planar region.
    Region {
        #[command(flatten)]
        run: RunArgs,
        /// Rays for the boundary trace.
        #[arg(long)]
        rays: Option<usize>,
        /// Raster cells per axis.
        #[arg(long)]
        resolution: Option<usize>,
    },
    /// Compute the ellipsoidal over-bound and the comparison ellipsoids.
    Ellipsoid {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run a named Monte Carlo study.
    Experiment {
        /// One of: fir2-basic, fir2-norms, m-sweep, f-compare, undermodel,
        /// ar-noise-block, fir8-volumes.
        name: String,
        /// Monte Carlo trials per study (default depends on the experiment)
        #[arg(long)]
        trials: Option<usize>,
        /// Master seed (falls back to SPS_SEED).
        #[arg(long)]
        seed: Option<u64>,
        /// Sample size override.
        #[arg(long)]
        n: Option<usize>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Data source and SPS parameters shared by the single-dataset commands.
/// Flags override values from `--config`.
#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset file (`.csv` with header `phi_1,...,phi_d,y`, or `.json`).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Simulate the dataset from a built-in system instead of reading one:
    /// fir2, fir2-gaussian, fir2-ar, undermodel, fir8.
    #[arg(long, conflicts_with = "data")]
    pub simulate: Option<String>,
    /// Samples to simulate.
    #[arg(long)]
    pub n: Option<usize>,
    /// Seed of the simulated data (default: derived from --seed).
    #[arg(long)]
    pub data_seed: Option<u64>,
    /// Number of sign sequences including the unperturbed one (default 100)
    #[arg(long)]
    pub m: Option<usize>,
    /// Confidence is 1 - q/m (default 5)
    #[arg(long)]
    pub q: Option<usize>,
    /// Seed of the random signs and tie-break permutation (falls back to
    /// SPS_SEED, then 0).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Norm of the sums: l1, l2 or linf (default l2)
    #[arg(long)]
    pub norm: Option<Norm>,
    /// Block length for Block SPS; must divide n.
    #[arg(long)]
    pub block: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

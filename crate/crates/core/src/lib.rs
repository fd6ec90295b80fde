//! Sign-Perturbed Sums (SPS): confidence regions for linear-regression
//! parameters with exact finite-sample coverage `1 - q/m`, assuming only
//! independent noise that is symmetric about zero.
//!
//! The crate covers the membership indicator ([`sps`]), its block variant,
//! an ellipsoidal outer approximation computed from a scalar dual problem
//! ([`outer`]), the classical chi-squared and F ellipsoids
//! ([`comparators`]), region tracing and rasterization ([`geometry`]), and a
//! Monte Carlo harness for FIR / Laguerre systems ([`experiments`]).

pub mod comparators;
pub mod data;
pub mod ellipsoid;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod linalg;
pub mod outer;
pub mod region;
pub mod regression;
pub mod rng;
pub mod special;
pub mod sps;

pub use comparators::{asymptotic_ellipsoid, f_ellipsoid, quantile, Family, QuantileSpec};
pub use data::Dataset;
pub use ellipsoid::Ellipsoid;
pub use error::{Result, SpsError};
pub use geometry::{
    ellipsoid_volume, raster_area, rasterize, rasterize_rows, trace_boundary, BoundaryTrace, RegionRaster,
};
pub use experiments::{
    area_study, coverage_study, simulate_dataset, ExperimentReport, NoiseModel, RegressorBasis, StudyConfig,
    SystemSpec,
};
pub use outer::{build_quadratic, outer_approximation, solve_dual, PerturbationQuadratic};
pub use region::{raster_region, region_area, region_bounds, trace_region};
pub use regression::{
    factor_rn, least_squares, noise_variance_estimate, outer_product_matrix, residuals,
    RegressionSummary,
};
pub use sps::{
    evaluate_s, init_sps, rank_of_reference, sps_indicator, Confidence, Norm, SpsConfig,
    SpsEvaluator, SpsSetup, SpsVerdict,
};

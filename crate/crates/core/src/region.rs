//! Extracting the shape of an SPS confidence set: bounding boxes, boundary
//! traces along rays from the least-squares estimate, and rasters.

use crate::ellipsoid::Ellipsoid;
use crate::error::{Result, SpsError};
use crate::geometry::{self, BoundaryTrace, RegionRaster};
use crate::sps::SpsEvaluator;

pub const DEFAULT_RAYS: usize = 360;
pub const DEFAULT_RESOLUTION: usize = 400;

/// Doublings before a ray is declared unbounded.
const MAX_DOUBLINGS: i32 = 60;

fn along(center: &[f64], u: &[f64], t: f64) -> Vec<f64> {
    center.iter().zip(u).map(|(c, u)| c + t * u).collect()
}

/// First `start * 2^k` along `u` that is not a member, if any.
fn escape_distance(eval: &SpsEvaluator, center: &[f64], u: &[f64], start: f64) -> Option<f64> {
    let mut r = start;
    for _ in 0..MAX_DOUBLINGS {
        if !eval.contains(&along(center, u, r)) {
            return Some(r);
        }
        r *= 2.0;
    }
    None
}

fn start_scale(center: &[f64]) -> f64 {
    1e-3 * center.iter().map(|c| c * c).sum::<f64>().sqrt().max(1.0)
}

/// Boundary distances along `directions` from `center` (normally the
/// least-squares estimate, which is always a member).
///
/// The search bracket for each ray is found by doubling, so no prior size is
/// needed; rays that never leave the set report `+inf`. Bisection stops at a
/// relative precision of about `1e-7` of the typical boundary distance.
pub fn trace_region(eval: &SpsEvaluator, center: &[f64], directions: &[Vec<f64>]) -> Result<BoundaryTrace> {
    if center.len() != eval.dim() {
        return Err(SpsError::DimensionMismatch { expected: eval.dim(), got: center.len() });
    }
    let start = start_scale(center);
    let cap = start * 2f64.powi(MAX_DOUBLINGS);
    let scale = directions
        .iter()
        .filter_map(|u| escape_distance(eval, center, u, start))
        .fold(f64::INFINITY, f64::min);
    let tol = if scale.is_finite() { 1e-7 * scale } else { 1e-7 * start };
    geometry::trace_boundary(
        |p| eval.contains(p),
        center,
        directions,
        |u| escape_distance(eval, center, u, start).unwrap_or(cap),
        tol,
    )
}

/// Axis-aligned box containing a planar SPS set.
///
/// With a bounded over-bound the box is the over-bound's own bounding box,
/// which provably contains the set. Otherwise the set is traced along
/// [`DEFAULT_RAYS`] rays and the traced hull is padded by 5% per side.
pub fn region_bounds(eval: &SpsEvaluator, center: &[f64], overbound: Option<&Ellipsoid>) -> Result<[[f64; 2]; 2]> {
    if eval.dim() != 2 {
        return Err(SpsError::DimensionMismatch { expected: 2, got: eval.dim() });
    }
    if let Some(e) = overbound.filter(|e| e.is_bounded()) {
        let bb = e.bounding_box()?;
        return Ok([[bb[0].0, bb[0].1], [bb[1].0, bb[1].1]]);
    }
    let trace = trace_region(eval, center, &geometry::unit_circle_directions(DEFAULT_RAYS))?;
    if trace.has_unbounded_ray() {
        return Err(SpsError::InfiniteRegion);
    }
    let mut bounds = [[f64::INFINITY, f64::NEG_INFINITY]; 2];
    for k in 0..trace.len() {
        let p = trace.point(k);
        for axis in 0..2 {
            bounds[axis][0] = bounds[axis][0].min(p[axis]);
            bounds[axis][1] = bounds[axis][1].max(p[axis]);
        }
    }
    for b in bounds.iter_mut() {
        let pad = 0.05 * (b[1] - b[0]).max(f64::EPSILON * b[0].abs().max(1.0));
        b[0] -= pad;
        b[1] += pad;
    }
    Ok(bounds)
}

/// Membership of every cell center of an `nx x ny` grid over `bounds`,
/// scanning one row at a time (see [`SpsEvaluator::line_membership`]).
pub fn raster_region(eval: &SpsEvaluator, bounds: [[f64; 2]; 2], resolution: (usize, usize)) -> Result<RegionRaster> {
    if eval.dim() != 2 {
        return Err(SpsError::DimensionMismatch { expected: 2, got: eval.dim() });
    }
    let x_mid = 0.5 * (bounds[0][0] + bounds[0][1]);
    geometry::rasterize_rows(
        |y, xs| {
            let ts: Vec<f64> = xs.iter().map(|x| x - x_mid).collect();
            eval.line_membership(&[x_mid, y], &[1.0, 0.0], &ts)
        },
        bounds,
        resolution,
    )
}

/// Raster area of a planar SPS set on a `resolution x resolution` grid.
pub fn region_area(
    eval: &SpsEvaluator,
    center: &[f64],
    overbound: Option<&Ellipsoid>,
    resolution: usize,
) -> Result<f64> {
    let bounds = region_bounds(eval, center, overbound)?;
    let raster = raster_region(eval, bounds, (resolution, resolution))?;
    Ok(geometry::raster_area(&raster))
}

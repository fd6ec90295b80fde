//! Region artifacts: ray-traced boundaries of star-convex regions, grid
//! rasters, raster areas and ellipsoid volumes, with their file formats.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::ellipsoid::Ellipsoid;
use crate::error::{Result, SpsError};
use crate::linalg;

/// Bisection steps used when only `r_max` is known.
pub const DEFAULT_BISECTION_STEPS: u32 = 20;

/// Boundary of a region that is star-shaped around `center`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryTrace {
    pub center: Vec<f64>,
    pub directions: Vec<Vec<f64>>,
    /// `f64::INFINITY` where the region still contains the point at `r_max`.
    pub distances: Vec<f64>,
}

impl BoundaryTrace {
    pub fn len(&self) -> usize {
        self.distances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distances.is_empty()
    }

    pub fn has_unbounded_ray(&self) -> bool {
        self.distances.iter().any(|d| d.is_infinite())
    }

    /// Boundary point along ray `k`.
    pub fn point(&self, k: usize) -> Vec<f64> {
        self.center
            .iter()
            .zip(&self.directions[k])
            .map(|(c, u)| c + self.distances[k] * u)
            .collect()
    }

    /// Writes `angle,distance,x,y` rows (2-D only).
    pub fn write_csv<W: Write>(&self, mut w: W, comment: Option<&str>) -> Result<()> {
        if self.center.len() != 2 {
            return Err(SpsError::DimensionMismatch { expected: 2, got: self.center.len() });
        }
        write_comment(&mut w, comment)?;
        writeln!(w, "angle,distance,x,y")?;
        for k in 0..self.len() {
            let u = &self.directions[k];
            let p = self.point(k);
            writeln!(w, "{},{},{},{}", u[1].atan2(u[0]), self.distances[k], p[0], p[1])?;
        }
        Ok(())
    }
}

fn write_comment<W: Write>(w: &mut W, comment: Option<&str>) -> Result<()> {
    if let Some(c) = comment {
        for line in c.lines() {
            writeln!(w, "# {line}")?;
        }
    }
    Ok(())
}

/// `count` unit directions evenly spaced in angle, starting at angle 0.
pub fn unit_circle_directions(count: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|k| {
            let a = std::f64::consts::TAU * k as f64 / count as f64;
            vec![a.cos(), a.sin()]
        })
        .collect()
}

/// For each direction, bisects on `t in [0, r_max(u)]` for the transition
/// from member to non-member, stopping once the bracket is below `tol`.
///
/// Relies on star-convexity around `center`: the first excluded point along
/// a ray is a boundary point.
pub fn trace_boundary<F, R>(
    indicator: F,
    center: &[f64],
    directions: &[Vec<f64>],
    r_max: R,
    tol: f64,
) -> Result<BoundaryTrace>
where
    F: Fn(&[f64]) -> bool + Sync,
    R: Fn(&[f64]) -> f64 + Sync,
{
    if !indicator(center) {
        return Err(SpsError::CenterExcluded);
    }
    let at = |u: &[f64], t: f64| -> Vec<f64> { center.iter().zip(u).map(|(c, u)| c + t * u).collect() };
    let distances = directions
        .par_iter()
        .map(|u| {
            let limit = r_max(u);
            if indicator(&at(u, limit)) {
                return f64::INFINITY;
            }
            let (mut lo, mut hi) = (0.0, limit);
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                if indicator(&at(u, mid)) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect();
    Ok(BoundaryTrace { center: center.to_vec(), directions: directions.to_vec(), distances })
}

/// Membership of a 2-D region sampled at cell centers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionRaster {
    /// `[[x_min, x_max], [y_min, y_max]]`
    pub bounds: [[f64; 2]; 2],
    pub nx: usize,
    pub ny: usize,
    /// Row-major with `y` rows: index `iy * nx + ix`.
    pub membership: Vec<bool>,
}

impl RegionRaster {
    pub fn cell_center(&self, ix: usize, iy: usize) -> [f64; 2] {
        cell_center(&self.bounds, self.nx, self.ny, ix, iy)
    }

    pub fn cell_area(&self) -> f64 {
        let [[x0, x1], [y0, y1]] = self.bounds;
        (x1 - x0) / self.nx as f64 * (y1 - y0) / self.ny as f64
    }

    pub fn is_member(&self, ix: usize, iy: usize) -> bool {
        self.membership[iy * self.nx + ix]
    }

    pub fn member_count(&self) -> usize {
        self.membership.iter().filter(|&&b| b).count()
    }

    pub fn member_cells(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        (0..self.ny).flat_map(move |iy| {
            (0..self.nx).filter(move |&ix| self.is_member(ix, iy)).map(move |ix| self.cell_center(ix, iy))
        })
    }

    /// Plain PGM (`P2`), top row = largest `y`; members are white.
    pub fn write_pgm<W: Write>(&self, mut w: W, comment: Option<&str>) -> Result<()> {
        writeln!(w, "P2")?;
        write_comment(&mut w, comment)?;
        let [[x0, x1], [y0, y1]] = self.bounds;
        writeln!(w, "# bounds x=[{x0},{x1}] y=[{y0},{y1}]")?;
        writeln!(w, "{} {}", self.nx, self.ny)?;
        writeln!(w, "1")?;
        for iy in (0..self.ny).rev() {
            let row: Vec<&str> = (0..self.nx).map(|ix| if self.is_member(ix, iy) { "1" } else { "0" }).collect();
            writeln!(w, "{}", row.join(" "))?;
        }
        Ok(())
    }

    /// CSV `x,y` of member cell centers.
    pub fn write_member_csv<W: Write>(&self, mut w: W, comment: Option<&str>) -> Result<()> {
        write_comment(&mut w, comment)?;
        writeln!(w, "x,y")?;
        for [x, y] in self.member_cells() {
            writeln!(w, "{x},{y}")?;
        }
        Ok(())
    }
}

fn cell_center(bounds: &[[f64; 2]; 2], nx: usize, ny: usize, ix: usize, iy: usize) -> [f64; 2] {
    let [[x0, x1], [y0, y1]] = *bounds;
    [
        x0 + (x1 - x0) * (ix as f64 + 0.5) / nx as f64,
        y0 + (y1 - y0) * (iy as f64 + 0.5) / ny as f64,
    ]
}

/// Evaluates `indicator` at every cell center of an `nx x ny` grid.
pub fn rasterize<F>(indicator: F, bounds: [[f64; 2]; 2], resolution: (usize, usize)) -> Result<RegionRaster>
where
    F: Fn(&[f64]) -> bool + Sync,
{
    rasterize_rows(
        |y, xs| xs.iter().map(|&x| indicator(&[x, y])).collect(),
        bounds,
        resolution,
    )
}

/// Like [`rasterize`], but membership is produced one grid row at a time:
/// `row(y, xs)` returns the verdicts for the cell centers `(xs[k], y)`.
pub fn rasterize_rows<F>(row: F, bounds: [[f64; 2]; 2], resolution: (usize, usize)) -> Result<RegionRaster>
where
    F: Fn(f64, &[f64]) -> Vec<bool> + Sync,
{
    let (nx, ny) = resolution;
    if nx < 2 || ny < 2 {
        return Err(SpsError::config("raster resolution must be at least 2 per axis"));
    }
    if !(bounds[0][1] > bounds[0][0] && bounds[1][1] > bounds[1][0]) {
        return Err(SpsError::config("raster bounds must be nonempty boxes"));
    }
    let xs: Vec<f64> = (0..nx).map(|ix| cell_center(&bounds, nx, ny, ix, 0)[0]).collect();
    let rows: Vec<Vec<bool>> = (0..ny)
        .into_par_iter()
        .map(|iy| {
            let y = cell_center(&bounds, nx, ny, 0, iy)[1];
            let verdicts = row(y, &xs);
            assert_eq!(verdicts.len(), nx, "row callback must return one verdict per cell");
            verdicts
        })
        .collect();
    Ok(RegionRaster { bounds, nx, ny, membership: rows.concat() })
}

/// Cell area times member count.
pub fn raster_area(raster: &RegionRaster) -> f64 {
    raster.cell_area() * raster.member_count() as f64
}

/// Volume of the unit ball in `d` dimensions.
pub fn unit_ball_volume(d: usize) -> f64 {
    // V_d = pi^{d/2} / Gamma(d/2 + 1), via V_d = V_{d-2} * 2 pi / d
    let mut v = if d % 2 == 0 { 1.0 } else { 2.0 };
    let mut k = if d % 2 == 0 { 2 } else { 3 };
    while k <= d {
        v *= std::f64::consts::TAU / k as f64;
        k += 2;
    }
    v
}

/// `V_d r^{d/2} / sqrt(det(shape))`.
pub fn ellipsoid_volume(e: &Ellipsoid) -> Result<f64> {
    if !e.is_bounded() {
        return Err(SpsError::InfiniteRegion);
    }
    let d = e.dim();
    let l = linalg::cholesky_lower(&e.shape)?;
    // sqrt(det) = prod of the factor's diagonal
    let sqrt_det: f64 = (0..d).map(|i| l[(i, i)]).product();
    Ok(unit_ball_volume(d) * e.radius.powf(0.5 * d as f64) / sqrt_det)
}

/// Closed-form boundary of a 2-D ellipsoid at `points` evenly spaced angles.
pub fn ellipse_trace(e: &Ellipsoid, points: usize) -> Result<BoundaryTrace> {
    if e.dim() != 2 {
        return Err(SpsError::DimensionMismatch { expected: 2, got: e.dim() });
    }
    let directions = unit_circle_directions(points);
    let distances = directions.iter().map(|u| e.radial_extent(u)).collect();
    Ok(BoundaryTrace { center: e.center.iter().copied().collect(), directions, distances })
}

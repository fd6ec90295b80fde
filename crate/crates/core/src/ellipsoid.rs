//! Ellipsoids `{theta : (theta - c)^T S (theta - c) <= r}`, shared by the
//! SPS over-bound and the chi-squared / F comparators.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SpsError};
use crate::linalg;

#[derive(Debug, Clone, PartialEq)]
pub struct Ellipsoid {
    pub center: DVector<f64>,
    /// Symmetric positive-definite shape matrix.
    pub shape: DMatrix<f64>,
    /// Nonnegative; `f64::INFINITY` means the whole space.
    pub radius: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RadiusJson {
    Finite(f64),
    Tag(String),
}

#[derive(Serialize, Deserialize)]
struct EllipsoidJson {
    center: Vec<f64>,
    shape: Vec<f64>,
    radius: RadiusJson,
}

impl Ellipsoid {
    pub fn new(center: DVector<f64>, shape: DMatrix<f64>, radius: f64) -> Result<Self> {
        let d = center.len();
        if shape.shape() != (d, d) {
            return Err(SpsError::DimensionMismatch { expected: d, got: shape.nrows() });
        }
        if radius.is_nan() || radius < 0.0 {
            return Err(SpsError::config(format!("ellipsoid radius {radius} must be nonnegative")));
        }
        Ok(Ellipsoid { center, shape, radius })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn is_bounded(&self) -> bool {
        self.radius.is_finite()
    }

    /// `(theta - c)^T S (theta - c)`.
    pub fn quadratic_form(&self, theta: &[f64]) -> f64 {
        let d = self.dim();
        let mut acc = 0.0;
        for i in 0..d {
            let di = theta[i] - self.center[i];
            let mut row = 0.0;
            for j in 0..d {
                row += self.shape[(i, j)] * (theta[j] - self.center[j]);
            }
            acc += di * row;
        }
        acc
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        self.radius == f64::INFINITY || self.quadratic_form(theta) <= self.radius
    }

    /// Distance from the center to the boundary along `direction`.
    pub fn radial_extent(&self, direction: &[f64]) -> f64 {
        let u = DVector::from_column_slice(direction);
        let curvature = u.dot(&(&self.shape * &u));
        (self.radius / curvature).sqrt()
    }

    /// Half-widths of the axis-aligned bounding box, `sqrt(r (S^{-1})_jj)`.
    pub fn half_widths(&self) -> Result<Vec<f64>> {
        if !self.is_bounded() {
            return Err(SpsError::InfiniteRegion);
        }
        let l = linalg::cholesky_lower(&self.shape)?;
        let d = self.dim();
        Ok((0..d)
            .map(|j| {
                let e = DVector::from_fn(d, |k, _| if k == j { 1.0 } else { 0.0 });
                (self.radius * linalg::cholesky_solve(&l, &e)[j]).sqrt()
            })
            .collect())
    }

    /// `(lower, upper)` per axis.
    pub fn bounding_box(&self) -> Result<Vec<(f64, f64)>> {
        Ok(self
            .half_widths()?
            .into_iter()
            .enumerate()
            .map(|(j, h)| (self.center[j] - h, self.center[j] + h))
            .collect())
    }

    pub fn to_json(&self) -> Result<String> {
        let raw = EllipsoidJson {
            center: self.center.iter().copied().collect(),
            shape: self.shape.transpose().as_slice().to_vec(),
            radius: if self.radius.is_finite() {
                RadiusJson::Finite(self.radius)
            } else {
                RadiusJson::Tag("inf".into())
            },
        };
        Ok(serde_json::to_string_pretty(&raw)?)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::from_str(&self.to_json().expect("ellipsoid serializes")).expect("valid json")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: EllipsoidJson = serde_json::from_str(text)?;
        let d = raw.center.len();
        if raw.shape.len() != d * d {
            return Err(SpsError::DimensionMismatch { expected: d * d, got: raw.shape.len() });
        }
        let radius = match raw.radius {
            RadiusJson::Finite(r) => r,
            RadiusJson::Tag(t) if t == "inf" => f64::INFINITY,
            RadiusJson::Tag(t) => return Err(SpsError::config(format!("bad radius `{t}`"))),
        };
        Self::new(DVector::from_vec(raw.center), DMatrix::from_row_slice(d, d, &raw.shape), radius)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Ellipsoid {
        Ellipsoid::new(
            DVector::from_vec(vec![0.7, 0.3]),
            DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]),
            0.02,
        )
        .unwrap()
    }

    #[test]
    fn membership_and_extent_agree() {
        let e = sample();
        assert!(e.contains(&[0.7, 0.3]));
        for k in 0..16 {
            let a = k as f64 * std::f64::consts::PI / 8.0;
            let u = [a.cos(), a.sin()];
            let r = e.radial_extent(&u);
            assert!(e.contains(&[0.7 + 0.999 * r * u[0], 0.3 + 0.999 * r * u[1]]));
            assert!(!e.contains(&[0.7 + 1.001 * r * u[0], 0.3 + 1.001 * r * u[1]]));
            assert!((e.quadratic_form(&[0.7 + r * u[0], 0.3 + r * u[1]]) - 0.02).abs() < 1e-14);
        }
    }

    #[test]
    fn bounding_box_is_tight() {
        let e = sample();
        let bb = e.bounding_box().unwrap();
        let mut max_x = f64::MIN;
        for k in 0..20_000 {
            let a = k as f64 * std::f64::consts::TAU / 20_000.0;
            let u = [a.cos(), a.sin()];
            max_x = max_x.max(0.7 + e.radial_extent(&u) * u[0]);
        }
        assert!((max_x - bb[0].1).abs() < 1e-6);
    }

    #[test]
    fn json_round_trip_with_infinite_radius() {
        let e = sample();
        assert_eq!(Ellipsoid::from_json(&e.to_json().unwrap()).unwrap(), e);
        let mut inf = sample();
        inf.radius = f64::INFINITY;
        let text = inf.to_json().unwrap();
        assert!(text.contains("\"inf\""));
        let back = Ellipsoid::from_json(&text).unwrap();
        assert!(back.radius.is_infinite());
        assert!(back.contains(&[1e9, -1e9]));
        assert!(matches!(back.half_widths(), Err(SpsError::InfiniteRegion)));
    }

    #[test]
    fn rejects_negative_radius() {
        assert!(Ellipsoid::new(DVector::zeros(1), DMatrix::identity(1, 1), -1.0).is_err());
    }
}

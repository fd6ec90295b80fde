//! Small dense helpers on top of `nalgebra`: a tolerance-aware Cholesky
//! factorization and in-place triangular solves against its factor.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SpsError};

/// Positive-definiteness threshold for the Cholesky pivots of `m`:
/// `1e-10 * trace(m) / d`.
pub fn pd_tolerance(m: &DMatrix<f64>) -> f64 {
    let d = m.nrows().max(1);
    1e-10 * m.trace().abs() / d as f64
}

/// Lower Cholesky factor `L` with `L * L^T = m`.
///
/// Only the lower triangle of `m` is read. Fails with `SingularDesign` when a
/// squared pivot drops below [`pd_tolerance`]; no regularization is applied.
pub fn cholesky_lower(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = m.nrows();
    if m.ncols() != d {
        return Err(SpsError::DimensionMismatch { expected: d, got: m.ncols() });
    }
    let tol = pd_tolerance(m);
    let mut l = DMatrix::<f64>::zeros(d, d);
    for j in 0..d {
        let mut diag = m[(j, j)];
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        if !(diag > tol) {
            return Err(SpsError::SingularDesign { pivot: diag, tol });
        }
        let ljj = diag.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..d {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Solves `L x = b` in place for lower-triangular `L`.
pub fn forward_solve(l: &DMatrix<f64>, b: &mut [f64]) {
    let d = l.nrows();
    for i in 0..d {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * b[k];
        }
        b[i] = s / l[(i, i)];
    }
}

/// Solves `L^T x = b` in place for lower-triangular `L`.
pub fn backward_solve_transposed(l: &DMatrix<f64>, b: &mut [f64]) {
    let d = l.nrows();
    for i in (0..d).rev() {
        let mut s = b[i];
        for k in (i + 1)..d {
            s -= l[(k, i)] * b[k];
        }
        b[i] = s / l[(i, i)];
    }
}

/// `L^{-1} v` as a new vector.
pub fn solve_lower(l: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    let mut out = v.clone();
    forward_solve(l, out.as_mut_slice());
    out
}

/// `(L L^T)^{-1} v`.
pub fn cholesky_solve(l: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    let mut out = v.clone();
    forward_solve(l, out.as_mut_slice());
    backward_solve_transposed(l, out.as_mut_slice());
    out
}

/// `L^{-1} M` column by column.
pub fn solve_lower_matrix(l: &DMatrix<f64>, m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for mut col in out.column_iter_mut() {
        forward_solve(l, col.as_mut_slice());
    }
    out
}

/// `(L L^T)^{-1} M` column by column.
pub fn cholesky_solve_matrix(l: &DMatrix<f64>, m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for mut col in out.column_iter_mut() {
        forward_solve(l, col.as_mut_slice());
        backward_solve_transposed(l, col.as_mut_slice());
    }
    out
}

/// Forces exact symmetry by averaging with the transpose.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let d = m.nrows();
    for i in 0..d {
        for j in (i + 1)..d {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_identity_and_diagonal() {
        let id = DMatrix::<f64>::identity(3, 3);
        assert_eq!(cholesky_lower(&id).unwrap(), id);

        let m = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 9.0]);
        let l = cholesky_lower(&m).unwrap();
        assert_eq!(l, DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]));
    }

    #[test]
    fn cholesky_multiplies_back() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let l = cholesky_lower(&m).unwrap();
        assert_eq!(l[(0, 1)], 0.0);
        let back = &l * l.transpose();
        assert!((back - m).abs().max() < 1e-12);
    }

    #[test]
    fn cholesky_rejects_singular() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(
            cholesky_lower(&m),
            Err(SpsError::SingularDesign { .. })
        ));
        let tiny = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1e-12]);
        assert!(cholesky_lower(&tiny).is_err());
    }

    #[test]
    fn triangular_solves_invert_factor() {
        let m = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let l = cholesky_lower(&m).unwrap();
        let v = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let x = cholesky_solve(&l, &v);
        assert!((&m * x - &v).norm() < 1e-12);
        let y = solve_lower(&l, &v);
        assert!((&l * y - v).norm() < 1e-12);
    }
}

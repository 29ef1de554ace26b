use super::Matrix;
use crate::error::{dim_err, Error, Result};

/// Solves `(A + ridge·I) X = B` for symmetric positive semidefinite `A` by
/// Cholesky factorization.
///
/// With `ridge = 0` the matrix must be positive definite; a non-positive (or
/// numerically negligible) pivot is reported as [`Error::Singular`].
pub fn solve_spd(a: &Matrix, b: &Matrix, ridge: f64) -> Result<Matrix> {
    if !a.is_square() {
        return Err(dim_err("solve_spd", format!("A is {}x{}", a.rows(), a.cols())));
    }
    if b.rows() != a.rows() {
        return Err(dim_err(
            "solve_spd",
            format!("A is {0}x{0}, B has {1} rows", a.rows(), b.rows()),
        ));
    }
    if ridge < 0.0 || !ridge.is_finite() {
        return Err(Error::Contract(format!("ridge must be >= 0, got {ridge}")));
    }
    let n = a.rows();
    let scale = (0..n).map(|i| a[(i, i)].abs()).fold(ridge, f64::max);
    let floor = n.max(1) as f64 * f64::EPSILON * scale;

    // Lower-triangular factor, stored in a full matrix.
    let mut l = Matrix::zeros(n, n);
    let mut min_pivot = f64::INFINITY;
    for j in 0..n {
        let mut d = a[(j, j)] + ridge;
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        min_pivot = min_pivot.min(d);
        if d <= floor {
            return Err(Error::Singular {
                op: "solve_spd",
                pivot: d,
            });
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let mut s = 0.5 * (a[(i, j)] + a[(j, i)]);
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }

    let mut x = b.clone();
    for c in 0..x.cols() {
        let col = x.column_mut(c);
        for i in 0..n {
            let mut s = col[i];
            for k in 0..i {
                s -= l[(i, k)] * col[k];
            }
            col[i] = s / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = col[i];
            for k in i + 1..n {
                s -= l[(k, i)] * col[k];
            }
            col[i] = s / l[(i, i)];
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_returns_rhs() {
        let b = Matrix::from_rows(&[[1.0, -2.0], [0.5, 3.0]]);
        assert_eq!(solve_spd(&Matrix::identity(2), &b, 0.0).unwrap(), b);
    }

    #[test]
    fn scaled_identity() {
        let x = solve_spd(&Matrix::identity(3).scale(2.0), &Matrix::identity(3), 0.0).unwrap();
        assert!((&x - &Matrix::identity(3).scale(0.5)).max_abs() < 1e-15);
    }

    #[test]
    fn singular_without_ridge_reports_pivot() {
        let a = Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]);
        match solve_spd(&a, &Matrix::identity(2), 0.0) {
            Err(Error::Singular { pivot, .. }) => assert!(pivot.abs() < 1e-12),
            other => panic!("expected singular error, got {other:?}"),
        }
        let indefinite = Matrix::from_rows(&[[1.0, 0.0], [0.0, -1.0]]);
        assert!(matches!(
            solve_spd(&indefinite, &Matrix::identity(2), 0.0),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn ridge_regularizes_singular_matrix() {
        let a = Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]);
        let b = Matrix::column_vector(&[1.0, 1.0]);
        let x = solve_spd(&a, &b, 1.0).unwrap();
        // (A + I) x = b  =>  x = b / 3
        assert!((x[(0, 0)] - 1.0 / 3.0).abs() < 1e-15);
    }
}

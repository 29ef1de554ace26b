use super::{dot, norm, Matrix};
use crate::error::{Error, Result};

/// Singular values below `DEFAULT_SVD_TOL · s_max` are deflated to zero.
pub const DEFAULT_SVD_TOL: f64 = 1e-12;

const MAX_SWEEPS: usize = 80;

/// Thin SVD `A = U diag(s) Vᵀ` with `k = min(rows, cols)` triples.
#[derive(Clone, Debug)]
pub struct SvdDecomposition {
    pub u: Matrix,
    /// Descending, nonnegative.
    pub singular_values: Vec<f64>,
    pub v: Matrix,
}

impl SvdDecomposition {
    /// Keeps the leading `k` singular triples.
    pub fn truncate(&self, k: usize) -> SvdDecomposition {
        let k = k.min(self.singular_values.len());
        let idx: Vec<usize> = (0..k).collect();
        SvdDecomposition {
            u: self.u.select_columns(&idx),
            singular_values: self.singular_values[..k].to_vec(),
            v: self.v.select_columns(&idx),
        }
    }

    pub fn reconstruct(&self) -> Matrix {
        let mut us = self.u.clone();
        for (j, &s) in self.singular_values.iter().enumerate() {
            for x in us.column_mut(j) {
                *x *= s;
            }
        }
        &us * &self.v.transpose()
    }

    /// Number of singular values above `rel_tol · s_max`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let smax = self.singular_values.first().copied().unwrap_or(0.0);
        self.singular_values
            .iter()
            .filter(|&&s| s > rel_tol * smax && s > 0.0)
            .count()
    }
}

/// One-sided (Hestenes) Jacobi orthogonalization of the columns of `a`.
///
/// Returns `(B, V)` with `B = A V`, `V` orthogonal, and the columns of `B`
/// mutually orthogonal. Column norms of `B` are the singular values.
fn hestenes(a: &Matrix, tol: f64) -> Result<(Matrix, Matrix)> {
    let n = a.cols();
    let mut b = a.clone();
    let mut v = Matrix::identity(n);
    // Columns below this norm are numerical zeros and are left alone.
    let floor = (f64::EPSILON * a.frobenius_norm()).powi(2);

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let alpha = dot(b.column(p), b.column(p));
                let beta = dot(b.column(q), b.column(q));
                if alpha <= floor || beta <= floor {
                    continue;
                }
                let gamma = dot(b.column(p), b.column(q));
                if gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut b, p, q, c, s);
                rotate_columns(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            return Ok((b, v));
        }
    }
    Err(Error::Numerical(format!(
        "one-sided Jacobi SVD did not converge in {MAX_SWEEPS} sweeps"
    )))
}

fn rotate_columns(m: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    for k in 0..m.rows() {
        let xp = m[(k, p)];
        let xq = m[(k, q)];
        m[(k, p)] = c * xp - s * xq;
        m[(k, q)] = s * xp + c * xq;
    }
}

/// Thin singular value decomposition.
///
/// Singular values at or below `tol · s_max` are set to exactly zero and
/// their left vectors are completed to an orthonormal set.
pub fn svd(a: &Matrix, tol: f64) -> Result<SvdDecomposition> {
    if a.rows() < a.cols() {
        let t = svd(&a.transpose(), tol)?;
        return Ok(SvdDecomposition {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        });
    }
    let (b, v) = hestenes(a, f64::EPSILON)?;
    let n = a.cols();
    let norms: Vec<f64> = (0..n).map(|j| norm(b.column(j))).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let smax = norms.iter().cloned().fold(0.0, f64::max);

    let mut u = Matrix::zeros(a.rows(), n);
    let mut s = Vec::with_capacity(n);
    let mut missing = Vec::new();
    for (k, &j) in order.iter().enumerate() {
        let sj = norms[j];
        if sj > tol * smax && sj > 0.0 {
            for (dst, src) in u.column_mut(k).iter_mut().zip(b.column(j)) {
                *dst = src / sj;
            }
            s.push(sj);
        } else {
            missing.push(k);
            s.push(0.0);
        }
    }
    complete_orthonormal(&mut u, &missing);
    Ok(SvdDecomposition {
        u,
        singular_values: s,
        v: v.select_columns(&order),
    })
}

/// Fills the listed columns of `u` with unit vectors orthogonal to every
/// other column (Gram–Schmidt against the standard basis).
fn complete_orthonormal(u: &mut Matrix, missing: &[usize]) {
    let m = u.rows();
    let mut filled: Vec<usize> = (0..u.cols()).filter(|j| !missing.contains(j)).collect();
    let mut candidate = 0;
    for &k in missing {
        while candidate < m {
            let mut e = vec![0.0; m];
            e[candidate] = 1.0;
            candidate += 1;
            // two passes of classical Gram–Schmidt
            for _ in 0..2 {
                for &j in &filled {
                    let proj = dot(&e, u.column(j));
                    for (x, y) in e.iter_mut().zip(u.column(j)) {
                        *x -= proj * y;
                    }
                }
            }
            let nrm = norm(&e);
            if nrm > 1e-8 {
                for (dst, x) in u.column_mut(k).iter_mut().zip(&e) {
                    *dst = x / nrm;
                }
                filled.push(k);
                break;
            }
        }
    }
}

/// Orthonormal basis (as columns) of `{x : A x = 0}`, treating singular
/// directions with `σ ≤ rel_tol · σ_max` as null. Works for any shape.
pub fn nullspace(a: &Matrix, rel_tol: f64) -> Result<Matrix> {
    let n = a.cols();
    if a.frobenius_norm() == 0.0 {
        return Ok(Matrix::identity(n));
    }
    let (b, v) = hestenes(a, f64::EPSILON)?;
    let norms: Vec<f64> = (0..n).map(|j| norm(b.column(j))).collect();
    let smax = norms.iter().cloned().fold(0.0, f64::max);
    let idx: Vec<usize> = (0..n).filter(|&j| norms[j] <= rel_tol * smax).collect();
    Ok(v.select_columns(&idx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::diag;

    #[test]
    fn diagonal_singular_values() {
        let d = svd(&diag(&[3.0, 1.0]), DEFAULT_SVD_TOL).unwrap();
        assert_eq!(d.singular_values, vec![3.0, 1.0]);
        let d = svd(&diag(&[1.0, 3.0]), DEFAULT_SVD_TOL).unwrap();
        assert_eq!(d.singular_values, vec![3.0, 1.0]);
    }

    #[test]
    fn zero_matrix_gives_zero_values_and_orthonormal_u() {
        let d = svd(&Matrix::zeros(3, 2), DEFAULT_SVD_TOL).unwrap();
        assert_eq!(d.singular_values, vec![0.0, 0.0]);
        let utu = d.u.tr_matmul(&d.u).unwrap();
        assert!((&utu - &Matrix::identity(2)).frobenius_norm() < 1e-14);
    }

    #[test]
    fn wide_matrix_goes_through_transpose() {
        let a = Matrix::from_rows(&[[1.0, 0.0, 2.0], [0.0, 3.0, 0.0]]);
        let d = svd(&a, DEFAULT_SVD_TOL).unwrap();
        assert_eq!(d.u.shape(), (2, 2));
        assert_eq!(d.v.shape(), (3, 2));
        assert!((&d.reconstruct() - &a).frobenius_norm() < 1e-14);
        assert!((d.singular_values[0] - 3.0).abs() < 1e-14);
        assert!((d.singular_values[1] - 5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn rank_deficient_truncation() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]]);
        let d = svd(&a, DEFAULT_SVD_TOL).unwrap();
        assert_eq!(d.rank(1e-10), 1);
        let t = d.truncate(1);
        assert!((&t.reconstruct() - &a).frobenius_norm() < 1e-13);
    }

    #[test]
    fn nullspace_of_wide_operator() {
        let a = Matrix::from_rows(&[[1.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        let z = nullspace(&a, 1e-10).unwrap();
        assert_eq!(z.cols(), 1);
        assert!(a.matvec(z.column(0)).unwrap().iter().all(|x| x.abs() < 1e-15));
        assert_eq!(nullspace(&Matrix::zeros(2, 4), 1e-10).unwrap().cols(), 4);
        assert_eq!(nullspace(&Matrix::identity(3), 1e-10).unwrap().cols(), 0);
    }
}

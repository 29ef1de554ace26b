//! Finite-difference oracles. These only ever call the supplied loss
//! closure, never the closed-form derivative code they are used to check.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix};

/// Central differences with per-entry step `h = h0 · (1 + |p_k|)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdConfig {
    pub h0: f64,
}

impl Default for FdConfig {
    fn default() -> Self {
        FdConfig { h0: 1e-5 }
    }
}

impl FdConfig {
    pub fn new(h0: f64) -> Result<Self> {
        if !(1e-8..=1e-3).contains(&h0) {
            return Err(Error::Contract(format!("h0 must lie in [1e-8, 1e-3], got {h0:e}")));
        }
        Ok(FdConfig { h0 })
    }

    /// Larger base step for second differences, where roundoff scales as
    /// `ε / h²`.
    pub fn for_hessian() -> Self {
        FdConfig { h0: 1e-4 }
    }

    pub fn step(&self, entry: f64) -> f64 {
        self.h0 * (1.0 + entry.abs())
    }
}

fn checked(f: &(impl Fn(&[f64]) -> f64 + ?Sized), p: &[f64], entry: usize) -> Result<f64> {
    let v = f(p);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Numerical(format!(
            "loss evaluated to {v} while perturbing parameter {entry}"
        )))
    }
}

/// Central-difference gradient `(f(p + h e_k) − f(p − h e_k)) / 2h`.
pub fn fd_gradient<F>(f: F, point: &[f64], cfg: FdConfig) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    (0..point.len())
        .into_par_iter()
        .map(|k| {
            let h = cfg.step(point[k]);
            let (up, down) = (point[k] + h, point[k] - h);
            let mut p = point.to_vec();
            p[k] = up;
            let fp = checked(&f, &p, k)?;
            p[k] = down;
            let fm = checked(&f, &p, k)?;
            // divide by the spacing actually realized in floating point
            Ok((fp - fm) / (up - down))
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct FdHessian {
    /// Symmetrized estimate `(H + Hᵀ) / 2`.
    pub hessian: Matrix,
    /// `‖H − Hᵀ‖_F` of the raw estimate.
    pub asymmetry: f64,
}

/// Second-difference Hessian built from loss evaluations only.
///
/// Diagonal entries use `(f(p+h) − 2f(p) + f(p−h)) / h²`; off-diagonal
/// entries use the four-point mixed stencil. Entry `(i, j)` and `(j, i)` are
/// evaluated with the perturbations applied in opposite order, so the raw
/// estimate can be slightly asymmetric in floating point.
pub fn fd_hessian<F>(f: F, point: &[f64], cfg: FdConfig) -> Result<FdHessian>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let n = point.len();
    let f0 = checked(&f, point, 0)?;
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| -> Result<Vec<f64>> {
            let hi = cfg.step(point[i]);
            let mut row = vec![0.0; n];
            let mut p = point.to_vec();
            for (j, slot) in row.iter_mut().enumerate() {
                if i == j {
                    p[i] = point[i] + hi;
                    let fp = checked(&f, &p, i)?;
                    p[i] = point[i] - hi;
                    let fm = checked(&f, &p, i)?;
                    p[i] = point[i];
                    *slot = (fp - 2.0 * f0 + fm) / (hi * hi);
                    continue;
                }
                let hj = cfg.step(point[j]);
                let mut eval = |si: f64, sj: f64| {
                    p[i] = point[i] + si * hi;
                    p[j] = point[j] + sj * hj;
                    let v = checked(&f, &p, i);
                    p[i] = point[i];
                    p[j] = point[j];
                    v
                };
                let fpp = eval(1.0, 1.0)?;
                let fpm = eval(1.0, -1.0)?;
                let fmp = eval(-1.0, 1.0)?;
                let fmm = eval(-1.0, -1.0)?;
                // Order the sum by (i, j) role so (i,j) and (j,i) differ in rounding.
                *slot = ((fpp - fpm) - (fmp - fmm)) / (4.0 * hi * hj);
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let raw = Matrix::from_fn(n, n, |i, j| rows[i][j]);
    Ok(FdHessian {
        asymmetry: raw.asymmetry(),
        hessian: raw.symmetrized(),
    })
}

/// `vᵀ H v / vᵀ v`.
pub fn rayleigh(h: &Matrix, v: &[f64]) -> Result<f64> {
    if !h.is_square() {
        return Err(Error::Contract("rayleigh needs a square matrix".into()));
    }
    let vv = dot(v, v);
    if vv == 0.0 {
        return Err(Error::Contract("rayleigh quotient of the zero vector".into()));
    }
    Ok(dot(v, &h.matvec(v)?) / vv)
}

/// `‖a − b‖ / max(‖a‖, ‖b‖)`, zero when both vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let scale = dot(a, a).sqrt().max(dot(b, b).sqrt());
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{diag, symm_eig, DEFAULT_EIG_TOL};

    #[test]
    fn quadratic_gradient_is_identity_map() {
        let p = [1.0, -3.0, 10.0, 0.25];
        let g = fd_gradient(|q: &[f64]| 0.5 * dot(q, q), &p, FdConfig::default()).unwrap();
        for (a, b) in g.iter().zip(&p) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_has_vanishing_gradient() {
        let g = fd_gradient(|_: &[f64]| 4.2, &[1.0, 2.0], FdConfig::default()).unwrap();
        assert!(g.iter().all(|x| x.abs() < 1e-9));
    }

    #[test]
    fn degree_two_polynomial_gradient() {
        // f = 3 p0² − 2 p0 p1 + p1 + 7
        let f = |q: &[f64]| 3.0 * q[0] * q[0] - 2.0 * q[0] * q[1] + q[1] + 7.0;
        let p = [9.5, -4.0];
        let g = fd_gradient(f, &p, FdConfig::default()).unwrap();
        assert!((g[0] - (6.0 * p[0] - 2.0 * p[1])).abs() < 1e-9);
        assert!((g[1] - (-2.0 * p[0] + 1.0)).abs() < 1e-9);
    }

    #[test]
    fn quadratic_form_hessian() {
        let a = Matrix::from_rows(&[[2.0, 0.5, -1.0], [0.5, 1.0, 0.0], [-1.0, 0.0, 3.0]]);
        let f = |q: &[f64]| 0.5 * dot(q, &a.matvec(q).unwrap());
        let h = fd_hessian(f, &[0.3, -0.2, 1.0], FdConfig::for_hessian()).unwrap();
        assert!((&h.hessian - &a).frobenius_norm() < 1e-6);
    }

    #[test]
    fn linear_function_has_zero_hessian() {
        let f = |q: &[f64]| 2.0 * q[0] - q[1];
        let h = fd_hessian(f, &[1.0, 1.0], FdConfig::for_hessian()).unwrap();
        assert!(h.hessian.max_abs() < 1e-6);
    }

    #[test]
    fn non_finite_loss_is_reported() {
        let f = |q: &[f64]| if q[1] > 1.0 { f64::NAN } else { q[0] };
        let err = fd_gradient(f, &[0.0, 1.0], FdConfig::default()).unwrap_err();
        assert!(err.to_string().contains("parameter 1"));
    }

    #[test]
    fn step_bounds() {
        assert!(FdConfig::new(1e-9).is_err());
        assert!(FdConfig::new(1e-2).is_err());
        assert!(FdConfig::new(1e-6).is_ok());
    }

    #[test]
    fn rayleigh_examples() {
        assert_eq!(rayleigh(&Matrix::identity(3), &[1.0, -2.0, 0.5]).unwrap(), 1.0);
        let d = diag(&[3.0, -1.0]);
        assert_eq!(rayleigh(&d, &[0.0, 2.0]).unwrap(), -1.0);
        assert_eq!(rayleigh(&d, &[1.0, 0.0]).unwrap(), 3.0);
        assert!(rayleigh(&d, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn rayleigh_lies_within_spectrum() {
        let h = Matrix::from_rows(&[[1.0, 2.0, 0.0], [2.0, -1.0, 0.5], [0.0, 0.5, 4.0]]);
        let e = symm_eig(&h, DEFAULT_EIG_TOL).unwrap();
        for v in [[1.0, 0.0, 0.0], [1.0, 1.0, 1.0], [0.3, -2.0, 0.1]] {
            let q = rayleigh(&h, &v).unwrap();
            assert!(q >= e.min() - 1e-12 && q <= e.max() + 1e-12);
        }
    }
}

//! Rank-constrained linear network `½‖Y − W1 W0 X‖²_F`.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{solve_spd, svd, symm_eig, Matrix, DEFAULT_EIG_TOL, DEFAULT_SVD_TOL};
use crate::instances::gaussian;
use crate::shallow::Dataset;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LinearBaseline {
    /// `U_r S_r` (m×r).
    pub w1: Matrix,
    /// r×n.
    pub w0: Matrix,
    pub loss: f64,
    /// Least-squares map `Y Xᵀ (X Xᵀ)⁻¹` before truncation.
    pub unconstrained: Matrix,
    /// Loss of the plain truncated SVD of `unconstrained`; equals `loss`
    /// when `X Xᵀ` is a multiple of the identity.
    pub plain_truncation_loss: f64,
    pub singular_values: Vec<f64>,
}

pub fn linear_loss(w1: &Matrix, w0: &Matrix, data: &Dataset) -> Result<f64> {
    let out = w1.matmul(&w0.matmul(&data.x)?)?;
    Ok(0.5 * data.y.try_sub(&out)?.frobenius_norm().powi(2))
}

/// Best rank-`r` factorization `W1 W0` of the least-squares map.
///
/// With `G = X Xᵀ = M²` (symmetric square root), the loss splits as
/// `‖Y − W_ls X‖² + ‖(W_ls − W) M‖²`, so the optimum is the truncated SVD of
/// `W_ls M` mapped back through `M⁻¹`. The factors are `W1 = U_r S_r` and
/// `W0 = V_rᵀ M⁻¹`.
pub fn linear_baseline(data: &Dataset, r: usize) -> Result<LinearBaseline> {
    let (n, m) = (data.x.rows(), data.y.rows());
    if r == 0 || r > m.min(n) {
        return Err(Error::Contract(format!("rank r = {r} must lie in 1..={}", m.min(n))));
    }
    let gram = data.x.matmul(&data.x.transpose())?;
    // (XXᵀ)⁻¹ X Yᵀ = W_lsᵀ; fails with a pivot for rank-deficient X.
    let w_ls = solve_spd(&gram, &data.x.matmul(&data.y.transpose())?, 0.0)?.transpose();

    let eig = symm_eig(&gram, DEFAULT_EIG_TOL)?;
    let lmin = eig.min();
    if lmin <= f64::EPSILON * eig.max() * n as f64 {
        return Err(Error::Singular {
            op: "linear_baseline",
            pivot: lmin,
        });
    }
    let q = &eig.vectors;
    let sqrt_scaled = Matrix::from_fn(n, n, |i, j| q[(i, j)] * eig.values[j].sqrt());
    let inv_sqrt_scaled = Matrix::from_fn(n, n, |i, j| q[(i, j)] / eig.values[j].sqrt());
    let root = &sqrt_scaled * &q.transpose();
    let inv_root = &inv_sqrt_scaled * &q.transpose();

    let dec = svd(&(&w_ls * &root), DEFAULT_SVD_TOL)?.truncate(r);
    let mut w1 = dec.u.clone();
    for (j, &s) in dec.singular_values.iter().enumerate() {
        for x in w1.column_mut(j) {
            *x *= s;
        }
    }
    let w0 = &dec.v.transpose() * &inv_root;

    let plain = svd(&w_ls, DEFAULT_SVD_TOL)?.truncate(r).reconstruct();
    let plain_truncation_loss = 0.5 * (&data.y - &(&plain * &data.x)).frobenius_norm().powi(2);

    Ok(LinearBaseline {
        loss: linear_loss(&w1, &w0, data)?,
        w1,
        w0,
        unconstrained: w_ls,
        plain_truncation_loss,
        singular_values: dec.singular_values,
    })
}

/// `|loss(W1 B, B⁻¹ W0) − loss(W1, W0)|` for an invertible `B`.
pub fn reparametrization_gap(w1: &Matrix, w0: &Matrix, b: &Matrix, data: &Dataset) -> Result<f64> {
    // B⁻¹ W0 = (BᵀB)⁻¹ Bᵀ W0
    let b_inv_w0 = solve_spd(&b.tr_matmul(b)?, &b.tr_matmul(w0)?, 0.0)?;
    let moved = linear_loss(&w1.matmul(b)?, &b_inv_w0, data)?;
    Ok((moved - linear_loss(w1, w0, data)?).abs())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PerturbationCheck {
    pub trials: usize,
    pub scale: f64,
    pub best_perturbed_loss: f64,
    /// Trials whose loss fell strictly below the baseline.
    pub beaten: usize,
}

/// Compares the baseline against `trials` rank-`r` factor pairs
/// `(W1 + εE1, W0 + εE0)` with Gaussian `E`.
pub fn perturbation_check(
    baseline: &LinearBaseline,
    data: &Dataset,
    trials: usize,
    scale: f64,
    rng: &mut dyn RngCore,
) -> Result<PerturbationCheck> {
    let (w1, w0) = (&baseline.w1, &baseline.w0);
    let mut best = f64::INFINITY;
    let mut beaten = 0;
    for _ in 0..trials {
        let p1 = w1.try_add(&gaussian(rng, w1.rows(), w1.cols(), scale))?;
        let p0 = w0.try_add(&gaussian(rng, w0.rows(), w0.cols(), scale))?;
        let loss = linear_loss(&p1, &p0, data)?;
        best = best.min(loss);
        beaten += usize::from(loss < baseline.loss);
    }
    Ok(PerturbationCheck {
        trials,
        scale,
        best_perturbed_loss: best,
        beaten,
    })
}

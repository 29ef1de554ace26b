use serde::{Deserialize, Serialize};

use super::{Degeneracy, Tolerances};
use crate::error::{Error, Result};
use crate::matrix::{symm_eig, Matrix, DEFAULT_EIG_TOL};
use crate::oracle::rayleigh;
use crate::shallow::{Dataset, ShallowEval, ShallowNetwork};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CurvatureClass {
    StrictSaddle,
    ZeroHessianSpurious,
    InconclusivePsd,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CurvatureReport {
    pub classification: CurvatureClass,
    pub eigenvalues: Vec<f64>,
    pub min_eigenvalue: f64,
    pub lambda_max: f64,
    /// `curv · λ_max`.
    pub curv_threshold: f64,
    /// Unit eigenvector for `min_eigenvalue`, ordered `[vec(W1); vec(W0)]`.
    pub min_direction: Vec<f64>,
    /// [`negative_curvature_form`] on the `W0` part of `min_direction`.
    pub quadratic_form_value: f64,
    /// `vᵀ H v / vᵀ v` on `min_direction`.
    pub rayleigh_quotient: f64,
    pub hessian_norm: f64,
    pub degeneracy: Degeneracy,
}

fn degeneracy_of(e: &ShallowEval) -> Degeneracy {
    Degeneracy {
        activation: e.act.frobenius_norm(),
        first_derivative: e.d1.frobenius_norm(),
        second_derivative: e.d2.frobenius_norm(),
    }
}

fn require_degenerate(e: &ShallowEval, tols: &Tolerances) -> Result<Degeneracy> {
    let deg = degeneracy_of(e);
    if !deg.is_degenerate(tols.degen) {
        return Err(Error::Constraint(format!(
            "not a degenerate activation point: ‖σ(W0X)‖_F = {:e}, ‖σ'(W0X)‖_F = {:e} (tolerance {:e})",
            deg.activation, deg.first_derivative, tols.degen
        )));
    }
    Ok(deg)
}

fn quadratic_form(net: &ShallowNetwork, data: &Dataset, e: &ShallowEval, w0_hat: &Matrix) -> Result<f64> {
    let (_, r, n) = net.dims();
    if w0_hat.shape() != (r, n) {
        return Err(Error::Dimension {
            op: "negative_curvature_form",
            detail: format!("Ŵ0 is {}x{}, expected {r}x{n}", w0_hat.rows(), w0_hat.cols()),
        });
    }
    let dir = w0_hat * &data.x;
    let transported = net.w1.tr_matmul(&e.residual)?;
    let mut total = 0.0;
    for k in 0..data.samples() {
        for i in 0..r {
            let t = dir[(i, k)];
            total += t * t * e.d2[(i, k)] * transported[(i, k)];
        }
    }
    Ok(total)
}

/// `Σ_k Σ_i (Ŵ0 x_k)_i² σ''(W0 x_k)_i (W1ᵀ(W1 σ(W0 x_k) − y_k))_i`.
///
/// At a degenerate point (σ = σ' = 0) this is the whole curvature of the loss
/// along `(0, Ŵ0)`, i.e. `vec(Ŵ0)ᵀ H_00 vec(Ŵ0)`. Since σ(W0X) = 0 there, the
/// transported residual reduces to `−W1ᵀ y_k`: directions concentrated on a
/// positive entry of `W1ᵀ y_k` (with σ'' > 0) have negative curvature.
pub fn negative_curvature_form(net: &ShallowNetwork, data: &Dataset, w0_hat: &Matrix, tols: &Tolerances) -> Result<f64> {
    let e = net.evaluate(data)?;
    require_degenerate(&e, tols)?;
    quadratic_form(net, data, &e, w0_hat)
}

/// Eigen-analysis of the Hessian at a degenerate activation point.
pub fn find_negative_curvature(net: &ShallowNetwork, data: &Dataset, tols: &Tolerances) -> Result<CurvatureReport> {
    let e = net.evaluate(data)?;
    let degeneracy = require_degenerate(&e, tols)?;
    let h = net.full_hessian(data)?;
    let eig = symm_eig(&h, DEFAULT_EIG_TOL)?;
    let lambda_max = eig.spectral_radius();
    let curv_threshold = tols.curv * lambda_max;
    let hessian_norm = h.frobenius_norm();
    let min_eigenvalue = eig.min();

    let classification = if hessian_norm <= tols.zero && degeneracy.second_derivative <= tols.degen {
        CurvatureClass::ZeroHessianSpurious
    } else if min_eigenvalue < -curv_threshold {
        CurvatureClass::StrictSaddle
    } else {
        CurvatureClass::InconclusivePsd
    };

    let min_direction = eig.vector(0).to_vec();
    let (_, w0_part) = net.split_direction(&min_direction)?;
    let quadratic_form_value = quadratic_form(net, data, &e, &w0_part)?;
    let rayleigh_quotient = rayleigh(&h, &min_direction)?;

    Ok(CurvatureReport {
        classification,
        eigenvalues: eig.values,
        min_eigenvalue,
        lambda_max,
        curv_threshold,
        min_direction,
        quadratic_form_value,
        rayleigh_quotient,
        hessian_norm,
        degeneracy,
    })
}

use serde::{Deserialize, Serialize};

use super::{classify_stationary, Tolerances, Verdict};
use crate::error::{Error, Result};
use crate::matrix::{diagvec, kron, norm, nullspace, solve_spd, svd, symm_eig, Matrix, DEFAULT_EIG_TOL, DEFAULT_SVD_TOL};
use crate::shallow::{Dataset, ShallowEval, ShallowNetwork};

/// A Hessian null direction `(Ŵ1, Ŵ0)` built from an admissible `Ŵ0`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NullDirection {
    pub w1_hat: Matrix,
    pub w0_hat: Matrix,
    /// `‖H v‖ / ‖v‖` for `v = [vec(Ŵ1); vec(Ŵ0)]` (0 for `v = 0`).
    pub containment_residual: f64,
    /// Ridge added to `σ(W0X) σ(W0X)ᵀ` when it was numerically singular.
    pub ridge: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NullspaceResult {
    pub eigenvalues: Vec<f64>,
    pub lambda_max: f64,
    /// `null_tol · λ_max`.
    pub threshold: f64,
    /// Orthonormal columns spanning eigenvectors with `|λ| ≤ threshold`.
    pub numerical_basis: Matrix,
    pub analytic_directions: Vec<NullDirection>,
    pub max_containment_residual: f64,
}

impl NullspaceResult {
    pub fn numerical_dimension(&self) -> usize {
        self.numerical_basis.cols()
    }

    pub fn analytic_dimension(&self) -> usize {
        self.analytic_directions.len()
    }
}

/// `diagvec(σ'(W0X)) [Xᵀ ⊗ I_r]`, the map `vec(Ŵ0) ↦ vec(σ'(W0X) ∘ Ŵ0X)`.
pub fn directional_operator(net: &ShallowNetwork, data: &Dataset) -> Result<Matrix> {
    let e = net.evaluate(data)?;
    let r = net.w0.rows();
    Ok(&diagvec(&e.d1) * &kron(&data.x.transpose(), &Matrix::identity(r)))
}

struct HessianContext {
    hessian: Matrix,
    lambda_max: f64,
}

impl HessianContext {
    fn new(net: &ShallowNetwork, data: &Dataset) -> Result<(Self, Vec<f64>, Matrix)> {
        let hessian = net.full_hessian(data)?;
        let eig = symm_eig(&hessian, DEFAULT_EIG_TOL)?;
        let lambda_max = eig.spectral_radius();
        Ok((HessianContext { hessian, lambda_max }, eig.values, eig.vectors))
    }
}

fn require_minimum(net: &ShallowNetwork, data: &Dataset, tols: &Tolerances) -> Result<()> {
    let report = classify_stationary(net, data, tols)?;
    if report.verdict != Verdict::ZeroMisfitGlobalMin {
        return Err(Error::Constraint(format!(
            "point is {} (misfit {:e}, max gradient block {:e}), not a zero-misfit minimum",
            report.verdict.as_str(),
            report.misfit_norm,
            report.max_grad_norm()
        )));
    }
    Ok(())
}

fn build_direction(
    net: &ShallowNetwork,
    data: &Dataset,
    e: &ShallowEval,
    ctx: &HessianContext,
    w0_hat: &Matrix,
    tols: &Tolerances,
) -> Result<NullDirection> {
    let (m, r, n) = net.dims();
    if w0_hat.shape() != (r, n) {
        return Err(Error::Dimension {
            op: "construct_null_direction",
            detail: format!("Ŵ0 is {}x{}, expected {r}x{n}", w0_hat.rows(), w0_hat.cols()),
        });
    }
    let dir = e.d1.hadamard(&(w0_hat * &data.x))?;
    let dir_norm = dir.frobenius_norm();
    let dir_tol = tols.direction
        * (1.0 + e.d1.frobenius_norm() * w0_hat.frobenius_norm() * data.x.frobenius_norm());
    if dir_norm > dir_tol {
        return Err(Error::Constraint(format!(
            "directional derivative ‖σ'(W0X) ∘ Ŵ0X‖_F = {dir_norm:e} exceeds {dir_tol:e}"
        )));
    }

    let s = &e.act;
    let gram = s * &s.transpose();
    let sv = svd(s, DEFAULT_SVD_TOL)?;
    let smin = sv.singular_values.get(r - 1).copied().unwrap_or(0.0);
    let smax = sv.singular_values.first().copied().unwrap_or(0.0);
    let ridge = if s.rows() > s.cols() || smin <= tols.rank * smax {
        let trace = gram.trace();
        if trace <= 0.0 {
            return Err(Error::Singular {
                op: "construct_null_direction",
                pivot: 0.0,
            });
        }
        Some(1e-12 * trace)
    } else {
        None
    };

    // Ŵ1 = −W1 D Sᵀ (S Sᵀ)⁻¹, solved as (S Sᵀ) Z = S Dᵀ W1ᵀ, Ŵ1 = −Zᵀ
    let rhs = &(s * &dir.transpose()) * &net.w1.transpose();
    let z = solve_spd(&gram, &rhs, ridge.unwrap_or(0.0))?;
    let w1_hat = -&z.transpose();
    debug_assert_eq!(w1_hat.shape(), (m, r));

    let mut v = w1_hat.vec();
    v.extend_from_slice(w0_hat.as_slice());
    let vnorm = norm(&v);
    let containment_residual = if vnorm == 0.0 {
        0.0
    } else {
        norm(&ctx.hessian.matvec(&v)?) / vnorm
    };
    let bound = tols.null * ctx.lambda_max;
    if containment_residual > bound {
        return Err(Error::Numerical(format!(
            "constructed direction leaves the nullspace: ‖Hv‖/‖v‖ = {containment_residual:e} > {bound:e}"
        )));
    }
    Ok(NullDirection {
        w1_hat,
        w0_hat: w0_hat.clone(),
        containment_residual,
        ridge,
    })
}

/// Pairs an admissible `Ŵ0` (one with `σ'(W0X) ∘ Ŵ0X = 0`) with
/// `Ŵ1 = −W1 (σ'(W0X) ∘ Ŵ0X) σ(W0X)ᵀ [σ(W0X) σ(W0X)ᵀ]⁻¹` and verifies that
/// the pair is annihilated by the Hessian at a zero-misfit minimum.
///
/// When `σ(W0X)` is not of full row rank a ridge of `1e-12 · trace` is added
/// to the Gram matrix and recorded in the result.
pub fn construct_null_direction(
    net: &ShallowNetwork,
    data: &Dataset,
    w0_hat: &Matrix,
    tols: &Tolerances,
) -> Result<NullDirection> {
    require_minimum(net, data, tols)?;
    let e = net.evaluate(data)?;
    let (ctx, _, _) = HessianContext::new(net, data)?;
    build_direction(net, data, &e, &ctx, w0_hat, tols)
}

/// Numerical Hessian nullspace at a zero-misfit minimum together with the
/// analytic family obtained from the nullspace of [`directional_operator`].
pub fn nullspace_at_minimum(net: &ShallowNetwork, data: &Dataset, tols: &Tolerances) -> Result<NullspaceResult> {
    require_minimum(net, data, tols)?;
    let e = net.evaluate(data)?;
    let (ctx, eigenvalues, vectors) = HessianContext::new(net, data)?;
    let threshold = tols.null * ctx.lambda_max;
    let idx: Vec<usize> = (0..eigenvalues.len())
        .filter(|&k| eigenvalues[k].abs() <= threshold)
        .collect();
    let numerical_basis = vectors.select_columns(&idx);

    let (_, r, n) = net.dims();
    let op = directional_operator(net, data)?;
    let family = nullspace(&op, 1e-10)?;
    let mut analytic_directions = Vec::with_capacity(family.cols());
    for k in 0..family.cols() {
        let w0_hat = Matrix::unvec(family.column(k), r, n)?;
        analytic_directions.push(build_direction(net, data, &e, &ctx, &w0_hat, tols)?);
    }
    let max_containment_residual = analytic_directions
        .iter()
        .map(|d| d.containment_residual)
        .fold(0.0, f64::max);

    Ok(NullspaceResult {
        eigenvalues,
        lambda_max: ctx.lambda_max,
        threshold,
        numerical_basis,
        analytic_directions,
        max_containment_residual,
    })
}

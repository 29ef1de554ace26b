use serde::{Deserialize, Serialize};

use super::Tolerances;
use crate::activation::{apply, Order};
use crate::deep::DeepNetwork;
use crate::error::Result;
use crate::shallow::{gradient_from, Dataset, ShallowNetwork};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    ZeroMisfitGlobalMin,
    OrthogonalStationary,
    DegenerateActivationStationary,
    NotStationary,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::ZeroMisfitGlobalMin => "ZERO_MISFIT_GLOBAL_MIN",
            Verdict::OrthogonalStationary => "ORTHOGONAL_STATIONARY",
            Verdict::DegenerateActivationStationary => "DEGENERATE_ACTIVATION_STATIONARY",
            Verdict::NotStationary => "NOT_STATIONARY",
        }
    }
}

/// Frobenius norms of σ, σ' and σ'' on the (last) preactivation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Degeneracy {
    pub activation: f64,
    pub first_derivative: f64,
    pub second_derivative: f64,
}

impl Degeneracy {
    /// σ and σ' both vanish within `tol`.
    pub fn is_degenerate(&self, tol: f64) -> bool {
        self.activation <= tol && self.first_derivative <= tol
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationaryReport {
    pub verdict: Verdict,
    pub loss: f64,
    pub misfit_norm: f64,
    /// Parameter-block labels, in the order of `grad_norms`.
    pub blocks: Vec<String>,
    pub grad_norms: Vec<f64>,
    /// Norms of the products whose vanishing is the orthogonality condition
    /// for each block; these coincide with the gradient block norms.
    pub ortho_residuals: Vec<f64>,
    pub degeneracy: Degeneracy,
    pub grad_tol: f64,
    pub misfit_tol: f64,
    pub tolerances: Tolerances,
}

impl StationaryReport {
    pub fn max_grad_norm(&self) -> f64 {
        self.grad_norms.iter().cloned().fold(0.0, f64::max)
    }
}

fn decide(grad_norms: &[f64], misfit_norm: f64, deg: &Degeneracy, grad_tol: f64, misfit_tol: f64, degen_tol: f64) -> Verdict {
    let gmax = grad_norms.iter().cloned().fold(0.0, f64::max);
    if gmax > grad_tol {
        Verdict::NotStationary
    } else if misfit_norm <= misfit_tol {
        Verdict::ZeroMisfitGlobalMin
    } else if deg.is_degenerate(degen_tol) {
        Verdict::DegenerateActivationStationary
    } else {
        Verdict::OrthogonalStationary
    }
}

/// Classifies `(W1, W0)` as a zero-misfit minimum, a degenerate-activation
/// stationary point, an orthogonality-condition stationary point, or not
/// stationary. Every residual is filled in regardless of the verdict.
pub fn classify_stationary(net: &ShallowNetwork, data: &Dataset, tols: &Tolerances) -> Result<StationaryReport> {
    let e = net.evaluate(data)?;
    let g = gradient_from(&net.w1, &data.x, &e);
    let misfit_norm = e.residual.frobenius_norm();
    let (n1, n0) = g.norms();
    let grad_norms = vec![n1, n0];
    let degeneracy = Degeneracy {
        activation: e.act.frobenius_norm(),
        first_derivative: e.d1.frobenius_norm(),
        second_derivative: e.d2.frobenius_norm(),
    };
    let grad_tol = tols.grad_threshold(data);
    let misfit_tol = tols.misfit_threshold(data);
    Ok(StationaryReport {
        verdict: decide(&grad_norms, misfit_norm, &degeneracy, grad_tol, misfit_tol, tols.degen),
        loss: 0.5 * misfit_norm * misfit_norm,
        misfit_norm,
        blocks: vec!["W1".into(), "W0".into()],
        ortho_residuals: grad_norms.clone(),
        grad_norms,
        degeneracy,
        grad_tol,
        misfit_tol,
        tolerances: *tols,
    })
}

/// Deep analogue of [`classify_stationary`]. Degeneracy is measured on the
/// last activation `σ_N(W_{N−1} ⋯)`, the one that gates every block.
pub fn deep_classify_stationary(net: &DeepNetwork, data: &Dataset, tols: &Tolerances) -> Result<StationaryReport> {
    net.check(data)?;
    let fwd = net.forward(&data.x)?;
    let grads = net.gradient(data)?;
    let misfit_norm = (&fwd.output - &data.y).frobenius_norm();
    let last = net.depth() - 1;
    let act = net.activations()[last].as_ref();
    let pre = &fwd.pre[last];
    let degeneracy = Degeneracy {
        activation: fwd.post[last].frobenius_norm(),
        first_derivative: apply(act, pre, Order::First).frobenius_norm(),
        second_derivative: apply(act, pre, Order::Second).frobenius_norm(),
    };
    let grad_norms: Vec<f64> = grads.iter().map(|g| g.frobenius_norm()).collect();
    let grad_tol = tols.grad_threshold(data);
    let misfit_tol = tols.misfit_threshold(data);
    Ok(StationaryReport {
        verdict: decide(&grad_norms, misfit_norm, &degeneracy, grad_tol, misfit_tol, tols.degen),
        loss: 0.5 * misfit_norm * misfit_norm,
        misfit_norm,
        blocks: (0..grads.len()).map(|j| format!("W{j}")).collect(),
        ortho_residuals: grad_norms.clone(),
        grad_norms,
        degeneracy,
        grad_tol,
        misfit_tol,
        tolerances: *tols,
    })
}

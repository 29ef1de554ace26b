use serde::{Deserialize, Serialize};

use crate::shallow::Dataset;

/// Thresholds that stand in for the exact zeros of the analysis.
///
/// `grad`, `misfit` and `curv` are relative factors; the absolute values
/// actually compared against are produced by the `*_threshold` helpers and
/// echoed in every report.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Gradient blocks vanish below `grad · (1 + ‖Y‖_F ‖X‖_F)`.
    pub grad: f64,
    /// Misfit vanishes below `misfit · (1 + ‖Y‖_F)`.
    pub misfit: f64,
    /// Absolute bound on `‖σ(W0X)‖_F`, `‖σ'(W0X)‖_F`, `‖σ''(W0X)‖_F`.
    pub degen: f64,
    /// Eigenvalues with `|λ| ≤ null · λ_max` span the numerical nullspace.
    pub null: f64,
    /// Strict saddle when `λ_min < −curv · λ_max`.
    pub curv: f64,
    /// Hessian counts as zero when `‖H‖_F ≤ zero`.
    pub zero: f64,
    /// Admissible null directions need
    /// `‖σ'(W0X) ∘ Ŵ0X‖_F ≤ direction · (1 + ‖σ'(W0X)‖_F ‖Ŵ0‖_F ‖X‖_F)`.
    pub direction: f64,
    /// Singular values below `rank · s_max` count as zero.
    pub rank: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            grad: 1e-8,
            misfit: 1e-8,
            degen: 1e-10,
            null: 1e-8,
            curv: 1e-9,
            zero: 1e-12,
            direction: 1e-10,
            rank: 1e-10,
        }
    }
}

impl Tolerances {
    pub fn grad_threshold(&self, data: &Dataset) -> f64 {
        self.grad * (1.0 + data.y.frobenius_norm() * data.x.frobenius_norm())
    }

    pub fn misfit_threshold(&self, data: &Dataset) -> f64 {
        self.misfit * (1.0 + data.y.frobenius_norm())
    }

    /// Overrides one field by name; returns false for unknown names.
    pub fn set(&mut self, name: &str, value: f64) -> bool {
        let slot = match name {
            "grad" => &mut self.grad,
            "misfit" => &mut self.misfit,
            "degen" => &mut self.degen,
            "null" => &mut self.null,
            "curv" => &mut self.curv,
            "zero" => &mut self.zero,
            "direction" => &mut self.direction,
            "rank" => &mut self.rank,
            _ => return false,
        };
        *slot = value;
        true
    }
}

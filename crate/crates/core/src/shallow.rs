//! The two-layer model `F(W1, W0) = ½‖Y − W1 σ(W0 X)‖²_F`.
//!
//! Parameters are always ordered `[vec(W1); vec(W0)]`. Hessian blocks are
//! named by (row block, column block) with `1` for `W1` and `0` for `W0`, so
//! `gn_10` has `m·r` rows and `r·n` columns.

use serde::{Deserialize, Serialize};

use crate::activation::{apply, ActivationRef, Order};
use crate::error::{dim_err, Result};
use crate::matrix::{commutation, diagvec, kron, Matrix};

/// Training pair: inputs `X` (n×d) and targets `Y` (m×d).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub x: Matrix,
    pub y: Matrix,
}

impl Dataset {
    pub fn new(x: Matrix, y: Matrix) -> Result<Self> {
        if x.cols() != y.cols() || x.cols() == 0 {
            return Err(dim_err(
                "Dataset::new",
                format!("X is {}x{}, Y is {}x{}", x.rows(), x.cols(), y.rows(), y.cols()),
            ));
        }
        Ok(Dataset { x, y })
    }

    /// Number of samples `d`.
    pub fn samples(&self) -> usize {
        self.x.cols()
    }
}

#[derive(Clone, Debug)]
pub struct ShallowNetwork {
    pub w1: Matrix,
    pub w0: Matrix,
    pub activation: ActivationRef,
}

/// Forward quantities shared by the gradient and Hessian formulas.
#[derive(Clone, Debug)]
pub struct ShallowEval {
    /// `W0 X`
    pub pre: Matrix,
    /// `σ(W0 X)`
    pub act: Matrix,
    /// `σ'(W0 X)`
    pub d1: Matrix,
    /// `σ''(W0 X)`
    pub d2: Matrix,
    /// `W1 σ(W0 X) − Y`, the negated misfit.
    pub residual: Matrix,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShallowGradient {
    pub g1: Matrix,
    pub g0: Matrix,
}

impl ShallowGradient {
    /// `[vec(G1); vec(G0)]`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.g1.vec();
        v.extend_from_slice(self.g0.as_slice());
        v
    }

    pub fn norms(&self) -> (f64, f64) {
        (self.g1.frobenius_norm(), self.g0.frobenius_norm())
    }
}

/// Gauss-Newton (`gn_*`) and second-order (`ngn_*`) Hessian blocks.
#[derive(Clone, Debug)]
pub struct HessianBlocks {
    pub gn_11: Matrix,
    pub gn_10: Matrix,
    pub gn_01: Matrix,
    pub gn_00: Matrix,
    pub ngn_11: Matrix,
    pub ngn_10: Matrix,
    pub ngn_01: Matrix,
    pub ngn_00: Matrix,
}

impl HessianBlocks {
    fn assemble(b11: &Matrix, b10: &Matrix, b01: &Matrix, b00: &Matrix) -> Matrix {
        let p1 = b11.rows();
        let p0 = b00.rows();
        let mut h = Matrix::zeros(p1 + p0, p1 + p0);
        h.set_block(0, 0, b11);
        h.set_block(0, p1, b10);
        h.set_block(p1, 0, b01);
        h.set_block(p1, p1, b00);
        h
    }

    pub fn gauss_newton(&self) -> Matrix {
        Self::assemble(&self.gn_11, &self.gn_10, &self.gn_01, &self.gn_00)
    }

    pub fn second_order(&self) -> Matrix {
        Self::assemble(&self.ngn_11, &self.ngn_10, &self.ngn_01, &self.ngn_00)
    }

    pub fn full(&self) -> Matrix {
        &self.gauss_newton() + &self.second_order()
    }
}

impl ShallowNetwork {
    pub fn new(w1: Matrix, w0: Matrix, activation: ActivationRef) -> Result<Self> {
        if w1.cols() != w0.rows() {
            return Err(dim_err(
                "ShallowNetwork::new",
                format!("W1 is {}x{}, W0 is {}x{}", w1.rows(), w1.cols(), w0.rows(), w0.cols()),
            ));
        }
        Ok(ShallowNetwork { w1, w0, activation })
    }

    /// `(m, r, n)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.w1.rows(), self.w1.cols(), self.w0.cols())
    }

    /// Length of `[vec(W1); vec(W0)]`.
    pub fn param_count(&self) -> usize {
        let (m, r, n) = self.dims();
        m * r + r * n
    }

    pub fn params(&self) -> Vec<f64> {
        let mut p = self.w1.vec();
        p.extend_from_slice(self.w0.as_slice());
        p
    }

    /// Same architecture with weights taken from a stacked parameter vector.
    pub fn with_params(&self, p: &[f64]) -> Result<ShallowNetwork> {
        let (m, r, n) = self.dims();
        if p.len() != m * r + r * n {
            return Err(dim_err(
                "with_params",
                format!("{} parameters for a network with {}", p.len(), m * r + r * n),
            ));
        }
        Ok(ShallowNetwork {
            w1: Matrix::unvec(&p[..m * r], m, r)?,
            w0: Matrix::unvec(&p[m * r..], r, n)?,
            activation: self.activation.clone(),
        })
    }

    /// `(Ŵ1, Ŵ0)` split of a stacked direction.
    pub fn split_direction(&self, v: &[f64]) -> Result<(Matrix, Matrix)> {
        let (m, r, n) = self.dims();
        if v.len() != m * r + r * n {
            return Err(dim_err("split_direction", format!("direction of length {}", v.len())));
        }
        Ok((Matrix::unvec(&v[..m * r], m, r)?, Matrix::unvec(&v[m * r..], r, n)?))
    }

    pub fn check(&self, data: &Dataset) -> Result<()> {
        let (m, _, n) = self.dims();
        if data.x.rows() != n || data.y.rows() != m || data.x.cols() != data.y.cols() {
            return Err(dim_err(
                "shallow model",
                format!(
                    "W1 {}x{}, W0 {}x{} against X {}x{}, Y {}x{}",
                    self.w1.rows(),
                    self.w1.cols(),
                    self.w0.rows(),
                    self.w0.cols(),
                    data.x.rows(),
                    data.x.cols(),
                    data.y.rows(),
                    data.y.cols()
                ),
            ));
        }
        Ok(())
    }

    pub fn output(&self, x: &Matrix) -> Result<Matrix> {
        let pre = self.w0.matmul(x)?;
        self.w1.matmul(&apply(self.activation.as_ref(), &pre, Order::Value))
    }

    pub fn evaluate(&self, data: &Dataset) -> Result<ShallowEval> {
        self.check(data)?;
        let act = self.activation.as_ref();
        let pre = &self.w0 * &data.x;
        let s = apply(act, &pre, Order::Value);
        let residual = &(&self.w1 * &s) - &data.y;
        Ok(ShallowEval {
            d1: apply(act, &pre, Order::First),
            d2: apply(act, &pre, Order::Second),
            act: s,
            pre,
            residual,
        })
    }

    pub fn loss(&self, data: &Dataset) -> Result<f64> {
        self.check(data)?;
        let out = self.output(&data.x)?;
        let r = &data.y - &out;
        Ok(0.5 * r.frobenius_norm().powi(2))
    }

    /// `vec(Y − W1 σ(W0 X))`.
    pub fn misfit(&self, data: &Dataset) -> Result<Vec<f64>> {
        Ok(self.evaluate(data)?.residual.map(|x| -x).vec())
    }

    /// Jacobian of `vec(Y − W1 σ(W0 X))` with respect to `[vec(W1); vec(W0)]`,
    /// an `md × (mr + rn)` matrix.
    pub fn misfit_jacobian(&self, data: &Dataset) -> Result<Matrix> {
        let e = self.evaluate(data)?;
        let (m, r, n) = self.dims();
        let d = data.samples();
        let j1 = -&kron(&e.act.transpose(), &Matrix::identity(m));
        let j0 = -&(&(&kron(&Matrix::identity(d), &self.w1) * &diagvec(&e.d1))
            * &kron(&data.x.transpose(), &Matrix::identity(r)));
        let mut j = Matrix::zeros(m * d, m * r + r * n);
        j.set_block(0, 0, &j1);
        j.set_block(0, m * r, &j0);
        Ok(j)
    }

    pub fn gradient(&self, data: &Dataset) -> Result<ShallowGradient> {
        let e = self.evaluate(data)?;
        Ok(gradient_from(&self.w1, &data.x, &e))
    }

    /// Gauss-Newton blocks `JᵀJ`; the second-order fields are zero.
    pub fn gn_hessian(&self, data: &Dataset) -> Result<HessianBlocks> {
        let e = self.evaluate(data)?;
        let (m, r, n) = self.dims();
        let d = data.samples();
        let ir = Matrix::identity(r);
        let x_ir = kron(&data.x, &ir);
        let xt_ir = kron(&data.x.transpose(), &ir);
        let dv1 = diagvec(&e.d1);

        let gn_11 = kron(&(&e.act * &e.act.transpose()), &Matrix::identity(m));
        let gn_01 = &(&x_ir * &dv1) * &kron(&e.act.transpose(), &self.w1.transpose());
        let gn_10 = &(&kron(&e.act, &self.w1) * &dv1) * &xt_ir;
        let w1tw1 = self.w1.tr_matmul(&self.w1)?;
        let gn_00 = &(&(&(&x_ir * &dv1) * &kron(&Matrix::identity(d), &w1tw1)) * &dv1) * &xt_ir;

        Ok(HessianBlocks {
            gn_11,
            gn_10,
            gn_01,
            gn_00,
            ngn_11: Matrix::zeros(m * r, m * r),
            ngn_10: Matrix::zeros(m * r, r * n),
            ngn_01: Matrix::zeros(r * n, m * r),
            ngn_00: Matrix::zeros(r * n, r * n),
        })
    }

    /// Blocks carrying second derivatives of the misfit; each is linear in
    /// the residual `W1 σ(W0 X) − Y`. The Gauss-Newton fields are zero.
    pub fn ngn_hessian(&self, data: &Dataset) -> Result<HessianBlocks> {
        let e = self.evaluate(data)?;
        let (m, r, n) = self.dims();
        let d = data.samples();
        let ir = Matrix::identity(r);
        let x_ir = kron(&data.x, &ir);
        let xt_ir = kron(&data.x.transpose(), &ir);
        let dv1 = diagvec(&e.d1);

        // vec(R Dᵀ) = [I_r ⊗ R] K^{(r,d)} vec(D) with D = σ'(W0X) ∘ Ŵ0X
        let ngn_10 = &(&(&kron(&ir, &e.residual) * &commutation(r, d)) * &dv1) * &xt_ir;
        // vec(Ŵ1ᵀ R) = [Rᵀ ⊗ I_r] K^{(m,r)} vec(Ŵ1)
        let ngn_01 = &(&(&x_ir * &dv1) * &kron(&e.residual.transpose(), &ir)) * &commutation(m, r);
        let weight = self.w1.tr_matmul(&e.residual)?.hadamard(&e.d2)?;
        let ngn_00 = &(&x_ir * &diagvec(&weight)) * &xt_ir;

        Ok(HessianBlocks {
            gn_11: Matrix::zeros(m * r, m * r),
            gn_10: Matrix::zeros(m * r, r * n),
            gn_01: Matrix::zeros(r * n, m * r),
            gn_00: Matrix::zeros(r * n, r * n),
            ngn_11: Matrix::zeros(m * r, m * r),
            ngn_10,
            ngn_01,
            ngn_00,
        })
    }

    /// All eight blocks.
    pub fn hessian_blocks(&self, data: &Dataset) -> Result<HessianBlocks> {
        let gn = self.gn_hessian(data)?;
        let ngn = self.ngn_hessian(data)?;
        Ok(HessianBlocks {
            gn_11: gn.gn_11,
            gn_10: gn.gn_10,
            gn_01: gn.gn_01,
            gn_00: gn.gn_00,
            ngn_11: ngn.ngn_11,
            ngn_10: ngn.ngn_10,
            ngn_01: ngn.ngn_01,
            ngn_00: ngn.ngn_00,
        })
    }

    /// The `(mr + rn)²` Hessian `GN + NGN`.
    pub fn full_hessian(&self, data: &Dataset) -> Result<Matrix> {
        Ok(self.hessian_blocks(data)?.full())
    }
}

pub(crate) fn gradient_from(w1: &Matrix, x: &Matrix, e: &ShallowEval) -> ShallowGradient {
    let g1 = &e.residual * &e.act.transpose();
    let back = w1.tr_matmul(&e.residual).expect("shapes checked");
    let g0 = &back.hadamard(&e.d1).expect("shapes checked") * &x.transpose();
    ShallowGradient { g1, g0 }
}

//! Deep dense networks `W_N σ_N(W_{N−1} ⋯ σ_1(W_0 X) ⋯)`.
//!
//! `activations[j]` is σ_{j+1}, applied after `weights[j]`. The forward cache
//! indexes preactivations by the weight that produced them:
//! `pre[j] = W_j · post[j−1]` with `post[−1] = X`, and `post[j] = σ_{j+1}(pre[j])`.

use serde::{Deserialize, Serialize};

use crate::activation::{apply, builtin, ActivationRef, Order};
use crate::error::{dim_err, Error, Result};
use crate::matrix::{diagvec, kron, Matrix};
use crate::shallow::{Dataset, ShallowNetwork};

#[derive(Clone, Debug)]
pub struct DeepNetwork {
    weights: Vec<Matrix>,
    activations: Vec<ActivationRef>,
}

/// Per-layer values from one forward pass.
#[derive(Clone, Debug)]
pub struct DeepForward {
    pub pre: Vec<Matrix>,
    pub post: Vec<Matrix>,
    pub output: Matrix,
}

/// One entry of the layer-list JSON form. The last layer carries no
/// activation (or `"identity"`).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LayerSpec {
    pub weight: Matrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub activation: Option<String>,
}

impl DeepNetwork {
    pub fn new(weights: Vec<Matrix>, activations: Vec<ActivationRef>) -> Result<Self> {
        if weights.len() < 2 {
            return Err(Error::Contract(format!(
                "a deep network needs at least two weight matrices, got {}",
                weights.len()
            )));
        }
        if activations.len() + 1 != weights.len() {
            return Err(Error::Contract(format!(
                "{} weights need {} activations, got {}",
                weights.len(),
                weights.len() - 1,
                activations.len()
            )));
        }
        for j in 1..weights.len() {
            if weights[j].cols() != weights[j - 1].rows() {
                return Err(dim_err(
                    "DeepNetwork::new",
                    format!(
                        "W{} is {}x{} but W{} has {} rows",
                        j,
                        weights[j].rows(),
                        weights[j].cols(),
                        j - 1,
                        weights[j - 1].rows()
                    ),
                ));
            }
        }
        Ok(DeepNetwork { weights, activations })
    }

    pub fn from_shallow(net: &ShallowNetwork) -> Self {
        DeepNetwork {
            weights: vec![net.w0.clone(), net.w1.clone()],
            activations: vec![net.activation.clone()],
        }
    }

    pub fn from_layers(layers: &[LayerSpec]) -> Result<Self> {
        let Some((last, hidden)) = layers.split_last() else {
            return Err(Error::Contract("empty layer list".into()));
        };
        if let Some(name) = &last.activation {
            if name != "identity" {
                return Err(Error::Contract(format!(
                    "the output layer cannot carry an activation (got '{name}')"
                )));
            }
        }
        let mut activations = Vec::with_capacity(hidden.len());
        for (j, layer) in hidden.iter().enumerate() {
            let name = layer
                .activation
                .as_deref()
                .ok_or_else(|| Error::Contract(format!("layer {j} is missing its activation")))?;
            activations.push(builtin(name)?);
        }
        let weights = layers.iter().map(|l| l.weight.clone()).collect();
        DeepNetwork::new(weights, activations)
    }

    pub fn to_layers(&self) -> Vec<LayerSpec> {
        self.weights
            .iter()
            .enumerate()
            .map(|(j, w)| LayerSpec {
                weight: w.clone(),
                activation: self.activations.get(j).map(|a| a.name().to_string()),
            })
            .collect()
    }

    /// Number of activation layers `N`.
    pub fn depth(&self) -> usize {
        self.activations.len()
    }

    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [Matrix] {
        &mut self.weights
    }

    pub fn activations(&self) -> &[ActivationRef] {
        &self.activations
    }

    pub fn last_weight(&self) -> &Matrix {
        self.weights.last().expect("at least two weights")
    }

    pub fn params(&self) -> Vec<f64> {
        self.weights.iter().flat_map(|w| w.as_slice().iter().copied()).collect()
    }

    pub fn param_count(&self) -> usize {
        self.weights.iter().map(|w| w.rows() * w.cols()).sum()
    }

    pub fn with_params(&self, p: &[f64]) -> Result<DeepNetwork> {
        if p.len() != self.param_count() {
            return Err(dim_err(
                "DeepNetwork::with_params",
                format!("{} parameters for a network with {}", p.len(), self.param_count()),
            ));
        }
        let mut offset = 0;
        let mut weights = Vec::with_capacity(self.weights.len());
        for w in &self.weights {
            let len = w.rows() * w.cols();
            weights.push(Matrix::unvec(&p[offset..offset + len], w.rows(), w.cols())?);
            offset += len;
        }
        Ok(DeepNetwork {
            weights,
            activations: self.activations.clone(),
        })
    }

    pub fn check(&self, data: &Dataset) -> Result<()> {
        let n = self.weights[0].cols();
        let m = self.last_weight().rows();
        if data.x.rows() != n || data.y.rows() != m {
            return Err(dim_err(
                "deep model",
                format!(
                    "network maps {n} inputs to {m} outputs; X is {}x{}, Y is {}x{}",
                    data.x.rows(),
                    data.x.cols(),
                    data.y.rows(),
                    data.y.cols()
                ),
            ));
        }
        Ok(())
    }

    pub fn forward(&self, x: &Matrix) -> Result<DeepForward> {
        if x.rows() != self.weights[0].cols() {
            return Err(dim_err(
                "deep_forward",
                format!("X has {} rows, W0 has {} columns", x.rows(), self.weights[0].cols()),
            ));
        }
        let n_act = self.depth();
        let mut pre = Vec::with_capacity(n_act);
        let mut post: Vec<Matrix> = Vec::with_capacity(n_act);
        for j in 0..n_act {
            let input = if j == 0 { x } else { &post[j - 1] };
            let z = &self.weights[j] * input;
            post.push(apply(self.activations[j].as_ref(), &z, Order::Value));
            pre.push(z);
        }
        let output = self.output_from_cache(&post);
        Ok(DeepForward { pre, post, output })
    }

    /// `W_N · post[N−1]`.
    pub fn output_from_cache(&self, post: &[Matrix]) -> Matrix {
        self.last_weight() * post.last().expect("non-empty cache")
    }

    pub fn loss(&self, data: &Dataset) -> Result<f64> {
        self.check(data)?;
        let fwd = self.forward(&data.x)?;
        Ok(0.5 * (&data.y - &fwd.output).frobenius_norm().powi(2))
    }

    /// Gradient blocks `[G_0, …, G_N]` by backward recursion over the cache.
    pub fn gradient(&self, data: &Dataset) -> Result<Vec<Matrix>> {
        self.check(data)?;
        let fwd = self.forward(&data.x)?;
        let n_act = self.depth();
        let residual = &fwd.output - &data.y;
        let mut grads = vec![Matrix::zeros(0, 0); n_act + 1];
        grads[n_act] = &residual * &fwd.post[n_act - 1].transpose();

        // back = W_{j+1}ᵀ (…), transported misfit entering layer j
        let mut back = self.weights[n_act].tr_matmul(&residual)?;
        for j in (0..n_act).rev() {
            let d1 = apply(self.activations[j].as_ref(), &fwd.pre[j], Order::First);
            let delta = d1.hadamard(&back)?;
            let input = if j == 0 { &data.x } else { &fwd.post[j - 1] };
            grads[j] = &delta * &input.transpose();
            if j > 0 {
                back = self.weights[j].tr_matmul(&delta)?;
            }
        }
        Ok(grads)
    }

    /// Dense Jacobian of `vec(Y − output)` with respect to the stacked
    /// `[vec(W_0); …; vec(W_N)]`, built from the Kronecker/diagvec chain.
    /// Intended for cross-checking [`DeepNetwork::gradient`] at small sizes.
    pub fn misfit_jacobian_dense(&self, data: &Dataset) -> Result<Matrix> {
        self.check(data)?;
        let fwd = self.forward(&data.x)?;
        let d = data.samples();
        let n_act = self.depth();
        let m = self.last_weight().rows();
        let id = Matrix::identity(d);
        let mut jac = Matrix::zeros(m * d, self.param_count());

        let mut col = 0;
        for j in 0..=n_act {
            let w = &self.weights[j];
            let input = if j == 0 { &data.x } else { &fwd.post[j - 1] };
            // ∂ vec(W_j · input) / ∂ vec(W_j)
            let mut block = kron(&input.transpose(), &Matrix::identity(w.rows()));
            for k in j..n_act {
                let d1 = apply(self.activations[k].as_ref(), &fwd.pre[k], Order::First);
                block = &diagvec(&d1) * &block;
                block = &kron(&id, &self.weights[k + 1]) * &block;
            }
            jac.set_block(0, col, &(-&block));
            col += w.rows() * w.cols();
        }
        Ok(jac)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net3(act: &str) -> DeepNetwork {
        let a = builtin(act).unwrap();
        DeepNetwork::new(
            vec![
                Matrix::from_rows(&[[0.2, -0.4, 0.1], [0.5, 0.3, -0.6]]),
                Matrix::from_rows(&[[0.7, -0.2], [0.1, 0.9], [-0.3, 0.4]]),
                Matrix::from_rows(&[[0.6, -0.5, 0.2], [0.3, 0.1, 0.8]]),
                Matrix::from_rows(&[[1.0, -0.7]]),
            ],
            vec![a.clone(), a.clone(), a],
        )
        .unwrap()
    }

    fn data3() -> Dataset {
        Dataset::new(
            Matrix::from_rows(&[[1.0, -0.5, 0.3, 0.2], [0.4, 0.8, -1.2, 0.0], [-0.6, 0.1, 0.5, 1.1]]),
            Matrix::from_rows(&[[0.3, -0.1, 0.7, 0.2]]),
        )
        .unwrap()
    }

    #[test]
    fn construction_checks() {
        let relu = builtin("relu").unwrap();
        assert!(DeepNetwork::new(vec![Matrix::zeros(2, 2)], vec![]).is_err());
        assert!(DeepNetwork::new(vec![Matrix::zeros(2, 3), Matrix::zeros(1, 3)], vec![relu.clone()]).is_err());
        assert!(DeepNetwork::new(vec![Matrix::zeros(2, 3), Matrix::zeros(1, 2)], vec![]).is_err());
        assert!(DeepNetwork::new(vec![Matrix::zeros(2, 3), Matrix::zeros(1, 2)], vec![relu]).is_ok());
    }

    #[test]
    fn cache_recomputation_is_bitwise_equal() {
        let net = net3("tanh");
        let fwd = net.forward(&data3().x).unwrap();
        assert_eq!(net.output_from_cache(&fwd.post), fwd.output);
        assert_eq!(fwd.pre.len(), 3);
        let fresh = net.forward(&data3().x).unwrap();
        assert_eq!(fresh.output, fwd.output);
    }

    #[test]
    fn identity_layers_collapse_to_a_product() {
        let net = net3("identity");
        let x = data3().x;
        let fwd = net.forward(&x).unwrap();
        let w = net.weights();
        let direct = &(&(&(&w[3] * &w[2]) * &w[1]) * &w[0]) * &x;
        assert!((&fwd.output - &direct).frobenius_norm() < 1e-14);
    }

    #[test]
    fn dense_jacobian_agrees_with_recursion() {
        let net = net3("sigmoid");
        let data = data3();
        let jac = net.misfit_jacobian_dense(&data).unwrap();
        let misfit = (&data.y - &net.forward(&data.x).unwrap().output).vec();
        let via_jac = jac.transpose().matvec(&misfit).unwrap();
        let grads: Vec<f64> = net.gradient(&data).unwrap().iter().flat_map(|g| g.vec()).collect();
        for (a, b) in via_jac.iter().zip(&grads) {
            assert!((a - b).abs() < 1e-13, "{a} vs {b}");
        }
    }

    #[test]
    fn layer_json_round_trip() {
        let net = net3("softplus");
        let json = serde_json::to_string(&net.to_layers()).unwrap();
        let layers: Vec<LayerSpec> = serde_json::from_str(&json).unwrap();
        let back = DeepNetwork::from_layers(&layers).unwrap();
        assert_eq!(back.params(), net.params());
        assert_eq!(back.activations()[1].name(), "softplus");
        assert!(!json.contains("null"));
    }

    #[test]
    fn output_layer_activation_rejected() {
        let mut layers = net3("tanh").to_layers();
        layers.last_mut().unwrap().activation = Some("relu".into());
        assert!(DeepNetwork::from_layers(&layers).is_err());
        layers.last_mut().unwrap().activation = Some("identity".into());
        assert!(DeepNetwork::from_layers(&layers).is_ok());
    }

    #[test]
    fn shape_mismatch_with_data() {
        let net = net3("tanh");
        let bad = Dataset::new(Matrix::zeros(2, 4), Matrix::zeros(1, 4)).unwrap();
        assert!(net.gradient(&bad).is_err());
        assert!(net.forward(&bad.x).is_err());
    }
}

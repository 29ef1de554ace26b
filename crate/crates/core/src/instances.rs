//! Seeded instance generators, registered by name.
//!
//! Each generator encodes one construction from the analysis (a zero-misfit
//! point, a dead ReLU layer, a saddle of the square activation, …) so that
//! experiments and tests need no external data.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::activation::{builtin, ActivationRef};
use crate::deep::DeepNetwork;
use crate::error::{Error, Result};
use crate::matrix::{solve_spd, Matrix};
use crate::shallow::{Dataset, ShallowNetwork};

/// Shallow dimensions: `W1 ∈ m×r`, `W0 ∈ r×n`, `X ∈ n×d`, `Y ∈ m×d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Dims {
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub d: usize,
}

impl Default for Dims {
    fn default() -> Self {
        Dims { m: 3, n: 3, r: 2, d: 4 }
    }
}

impl Dims {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 || self.r == 0 || self.d == 0 {
            return Err(Error::Contract(format!("all dimensions must be >= 1, got {self:?}")));
        }
        Ok(())
    }
}

/// What to generate. `widths` switches to a deep network whose layer
/// outputs are `widths[0..N]` (hidden) followed by `m`.
#[derive(Clone, Debug, Default)]
pub struct InstanceSpec {
    pub dims: Dims,
    pub widths: Option<Vec<usize>>,
    pub activation: Option<String>,
}

#[derive(Clone, Debug)]
pub enum Instance {
    Shallow { net: ShallowNetwork, data: Dataset },
    Deep { net: DeepNetwork, data: Dataset },
}

impl Instance {
    pub fn data(&self) -> &Dataset {
        match self {
            Instance::Shallow { data, .. } | Instance::Deep { data, .. } => data,
        }
    }

    pub fn shallow(self) -> Result<(ShallowNetwork, Dataset)> {
        match self {
            Instance::Shallow { net, data } => Ok((net, data)),
            Instance::Deep { .. } => Err(Error::Contract("expected a shallow instance".into())),
        }
    }
}

pub trait InstanceGenerator: Send + Sync {
    fn name(&self) -> &str;
    fn description(&self) -> &str;
    fn generate(&self, spec: &InstanceSpec, rng: &mut dyn rand::RngCore) -> Result<Instance>;
}

pub fn gaussian(rng: &mut dyn rand::RngCore, rows: usize, cols: usize, scale: f64) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| {
        let z: f64 = rng.sample(StandardNormal);
        scale * z
    })
}

/// Entries `±(|z| + offset)` with the given sign.
pub fn signed_gaussian(rng: &mut dyn rand::RngCore, rows: usize, cols: usize, sign: f64, offset: f64) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| {
        let z: f64 = rng.sample(StandardNormal);
        sign * (z.abs() + offset)
    })
}

fn activation_or(spec: &InstanceSpec, default: &str) -> Result<ActivationRef> {
    builtin(spec.activation.as_deref().unwrap_or(default))
}

fn require_activation(spec: &InstanceSpec, generator: &str, allowed: &[&str]) -> Result<ActivationRef> {
    let name = spec.activation.as_deref().unwrap_or(allowed[0]);
    if !allowed.contains(&name) {
        return Err(Error::Contract(format!(
            "generator '{generator}' requires activation {}, got '{name}'",
            allowed.join(" or ")
        )));
    }
    builtin(name)
}

fn deep_weights(rng: &mut dyn rand::RngCore, n: usize, widths: &[usize], m: usize) -> Vec<Matrix> {
    let mut sizes = vec![n];
    sizes.extend_from_slice(widths);
    sizes.push(m);
    sizes
        .windows(2)
        .map(|w| gaussian(rng, w[1], w[0], 1.0 / (w[0] as f64).sqrt()))
        .collect()
}

fn deep_activations(spec: &InstanceSpec, default: &str, layers: usize) -> Result<Vec<ActivationRef>> {
    let a = activation_or(spec, default)?;
    Ok(vec![a; layers])
}

/// Generic point: everything Gaussian.
struct RandomPoint;

impl InstanceGenerator for RandomPoint {
    fn name(&self) -> &str {
        "random"
    }
    fn description(&self) -> &str {
        "Gaussian weights and data; generically not stationary"
    }
    fn generate(&self, spec: &InstanceSpec, rng: &mut dyn rand::RngCore) -> Result<Instance> {
        let Dims { m, n, r, d } = spec.dims;
        spec.dims.validate()?;
        let x = gaussian(rng, n, d, 1.0);
        let y = gaussian(rng, m, d, 1.0);
        let data = Dataset::new(x, y)?;
        if let Some(widths) = &spec.widths {
            let weights = deep_weights(rng, n, widths, m);
            let acts = deep_activations(spec, "tanh", widths.len())?;
            return Ok(Instance::Deep {
                net: DeepNetwork::new(weights, acts)?,
                data,
            });
        }
        let net = ShallowNetwork::new(
            gaussian(rng, m, r, 0.7),
            gaussian(rng, r, n, 0.7),
            activation_or(spec, "tanh")?,
        )?;
        Ok(Instance::Shallow { net, data })
    }
}

/// Targets set to the network's own output, `Y := W1 σ(W0 X)`.
struct ZeroMisfit;

impl InstanceGenerator for ZeroMisfit {
    fn name(&self) -> &str {
        "zero-misfit"
    }
    fn description(&self) -> &str {
        "random weights with Y set to the network output (global minimum)"
    }
    fn generate(&self, spec: &InstanceSpec, rng: &mut dyn rand::RngCore) -> Result<Instance> {
        let Dims { m, n, r, d } = spec.dims;
        spec.dims.validate()?;
        let x = gaussian(rng, n, d, 1.0);
        if let Some(widths) = &spec.widths {
            let weights = deep_weights(rng, n, widths, m);
            let net = DeepNetwork::new(weights, deep_activations(spec, "tanh", widths.len())?)?;
            let y = net.forward(&x)?.output;
            return Ok(Instance::Deep {
                net,
                data: Dataset::new(x, y)?,
            });
        }
        let net = ShallowNetwork::new(
            gaussian(rng, m, r, 0.7),
            gaussian(rng, r, n, 0.7),
            activation_or(spec, "tanh")?,
        )?;
        let y = net.output(&x)?;
        Ok(Instance::Shallow {
            net,
            data: Dataset::new(x, y)?,
        })
    }
}

/// ReLU with every preactivation strictly negative: positive inputs and a
/// negative encoder. Targets are arbitrary and nonzero.
struct ReluDead;

impl InstanceGenerator for ReluDead {
    fn name(&self) -> &str {
        "relu-dead"
    }
    fn description(&self) -> &str {
        "relu with entrywise negative preactivations (gradient and Hessian vanish)"
    }
    fn generate(&self, spec: &InstanceSpec, rng: &mut dyn rand::RngCore) -> Result<Instance> {
        let Dims { m, n, r, d } = spec.dims;
        spec.dims.validate()?;
        let x = signed_gaussian(rng, n, d, 1.0, 0.1);
        let y = gaussian(rng, m, d, 1.0);
        let data = Dataset::new(x, y)?;
        if let Some(widths) = &spec.widths {
            // Hidden layers must emit nonnegative values so a negative last
            // encoder drives the final preactivation below zero.
            let hidden = activation_or(spec, "sigmoid")?;
            if hidden.value(-1.0) < 0.0 || hidden.value(1.0) < 0.0 {
                return Err(Error::Contract(format!(
                    "relu-dead needs nonnegative hidden activations, '{}' is not",
                    hidden.name()
                )));
            }
            let mut weights = deep_weights(rng, n, widths, m);
            let last_hidden = weights.len() - 2;
            let (rows, cols) = weights[last_hidden].shape();
            weights[last_hidden] = signed_gaussian(rng, rows, cols, -1.0, 0.1);
            let mut acts = vec![hidden; widths.len()];
            *acts.last_mut().expect("N >= 1") = builtin("relu")?;
            return Ok(Instance::Deep {
                net: DeepNetwork::new(weights, acts)?,
                data,
            });
        }
        let relu = require_activation(spec, self.name(), &["relu"])?;
        let net = ShallowNetwork::new(gaussian(rng, m, r, 1.0), signed_gaussian(rng, r, n, -1.0, 0.1), relu)?;
        Ok(Instance::Shallow { net, data })
    }
}

/// Zero-misfit ReLU point whose first hidden unit is dead on every sample.
struct ReluDeadUnit;

impl InstanceGenerator for ReluDeadUnit {
    fn name(&self) -> &str {
        "relu-dead-unit"
    }
    fn description(&self) -> &str {
        "zero-misfit relu point with the first hidden unit dead on all samples"
    }
    fn generate(&self, spec: &InstanceSpec, rng: &mut dyn rand::RngCore) -> Result<Instance> {
        let Dims { m, n, r, d } = spec.dims;
        spec.dims.validate()?;
        let relu = require_activation(spec, self.name(), &["relu"])?;
        let x = signed_gaussian(rng, n, d, 1.0, 0.1);
        // row 0 negative (dead), remaining rows positive (alive on every sample)
        let mut w0 = signed_gaussian(rng, r, n, 1.0, 0.1);
        for j in 0..n {
            w0[(0, j)] = -w0[(0, j)];
        }
        let net = ShallowNetwork::new(gaussian(rng, m, r, 1.0), w0, relu)?;
        let y = net.output(&x)?;
        Ok(Instance::Shallow {
            net,
            data: Dataset::new(x, y)?,
        })
    }
}

/// Square activation at `W0 = 0` with targets chosen so that
/// `W1ᵀ Y = T` for a prescribed `T` (needs `m ≥ r`).
fn square_origin(spec: &InstanceSpec, rng: &mut dyn rand::RngCore, name: &str, t: impl FnOnce(&mut dyn rand::RngCore, usize, usize) -> Matrix) -> Result<Instance> {
    let Dims { m, n, r, d } = spec.dims;
    spec.dims.validate()?;
    if m < r {
        return Err(Error::Contract(format!("generator '{name}' needs m >= r, got m={m}, r={r}")));
    }
    let sq = require_activation(spec, name, &["square"])?;
    let x = gaussian(rng, n, d, 1.0);
    let w1 = gaussian(rng, m, r, 1.0);
    let target = t(rng, r, d);
    // Y = W1 (W1ᵀW1)⁻¹ T  ⇒  W1ᵀ Y = T
    let coeffs = solve_spd(&w1.tr_matmul(&w1)?, &target, 0.0)?;
    let y = &w1 * &coeffs;
    let net = ShallowNetwork::new(w1, Matrix::zeros(r, n), sq)?;
    Ok(Instance::Shallow {
        net,
        data: Dataset::new(x, y)?,
    })
}

/// `W1ᵀ Y` has an all-positive first row, so the residual transported by
/// `W1ᵀ` has an all-negative row: a strict saddle.
struct SquareSaddle;

impl InstanceGenerator for SquareSaddle {
    fn name(&self) -> &str {
        "square-saddle"
    }
    fn description(&self) -> &str {
        "square activation at W0 = 0 with a negative-curvature direction"
    }
    fn generate(&self, spec: &InstanceSpec, rng: &mut dyn rand::RngCore) -> Result<Instance> {
        square_origin(spec, rng, self.name(), |rng, r, d| {
            let mut t = gaussian(rng, r, d, 1.0);
            for k in 0..d {
                let z: f64 = rng.sample(StandardNormal);
                t[(0, k)] = z.abs() + 0.5;
            }
            t
        })
    }
}

/// `W1ᵀ Y` entrywise negative: the curvature form is nonnegative.
struct SquarePsd;

impl InstanceGenerator for SquarePsd {
    fn name(&self) -> &str {
        "square-psd"
    }
    fn description(&self) -> &str {
        "square activation at W0 = 0 with positive semidefinite Hessian"
    }
    fn generate(&self, spec: &InstanceSpec, rng: &mut dyn rand::RngCore) -> Result<Instance> {
        square_origin(spec, rng, self.name(), |rng, r, d| signed_gaussian(rng, r, d, -1.0, 0.5))
    }
}

/// Linear network with `Y := W1 W0 X`; the `W1 B, B⁻¹ W0` symmetry makes
/// the Hessian singular.
struct OverparamIdentity;

impl InstanceGenerator for OverparamIdentity {
    fn name(&self) -> &str {
        "overparam-identity"
    }
    fn description(&self) -> &str {
        "identity activation at a zero-misfit point (factorization symmetry)"
    }
    fn generate(&self, spec: &InstanceSpec, rng: &mut dyn rand::RngCore) -> Result<Instance> {
        let Dims { m, n, r, d } = spec.dims;
        spec.dims.validate()?;
        let id = require_activation(spec, self.name(), &["identity"])?;
        let x = gaussian(rng, n, d, 1.0);
        let net = ShallowNetwork::new(gaussian(rng, m, r, 1.0), gaussian(rng, r, n, 1.0), id)?;
        let y = net.output(&x)?;
        Ok(Instance::Shallow {
            net,
            data: Dataset::new(x, y)?,
        })
    }
}

/// `m = n = r = 1`, tanh, zero misfit on `d ≥ 2` nonzero samples: the
/// Hessian is nonsingular.
struct WellPosed;

impl InstanceGenerator for WellPosed {
    fn name(&self) -> &str {
        "well-posed"
    }
    fn description(&self) -> &str {
        "scalar tanh network at a zero-misfit point with nonsingular Hessian"
    }
    fn generate(&self, spec: &InstanceSpec, rng: &mut dyn rand::RngCore) -> Result<Instance> {
        let d = spec.dims.d.max(2);
        let act = activation_or(spec, "tanh")?;
        let x = Matrix::from_fn(1, d, |_, k| {
            let z: f64 = rng.sample(StandardNormal);
            (k as f64 + 1.0) * 0.4 * (1.0 + 0.1 * z.abs())
        });
        let w1: f64 = 1.0 + rng.random::<f64>();
        let w0: f64 = 0.5 + rng.random::<f64>();
        let net = ShallowNetwork::new(Matrix::from_rows(&[[w1]]), Matrix::from_rows(&[[w0]]), act)?;
        let y = net.output(&x)?;
        Ok(Instance::Shallow {
            net,
            data: Dataset::new(x, y)?,
        })
    }
}

pub type GeneratorRef = Arc<dyn InstanceGenerator>;

/// Name-keyed generator lookup.
#[derive(Clone, Default)]
pub struct GeneratorRegistry {
    entries: BTreeMap<String, GeneratorRef>,
}

impl GeneratorRegistry {
    pub fn with_builtins() -> Self {
        let mut reg = GeneratorRegistry::default();
        reg.register(Arc::new(RandomPoint));
        reg.register(Arc::new(ZeroMisfit));
        reg.register(Arc::new(ReluDead));
        reg.register(Arc::new(ReluDeadUnit));
        reg.register(Arc::new(SquareSaddle));
        reg.register(Arc::new(SquarePsd));
        reg.register(Arc::new(OverparamIdentity));
        reg.register(Arc::new(WellPosed));
        reg
    }

    pub fn register(&mut self, generator: GeneratorRef) {
        self.entries.insert(generator.name().to_string(), generator);
    }

    pub fn get(&self, name: &str) -> Result<GeneratorRef> {
        self.entries.get(name).cloned().ok_or_else(|| Error::Lookup {
            kind: "generator",
            name: name.to_string(),
            valid: self.names().join(", "),
        })
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.keys().map(String::as_str).collect()
    }

    pub fn generate(&self, name: &str, spec: &InstanceSpec, rng: &mut dyn rand::RngCore) -> Result<Instance> {
        self.get(name)?.generate(spec, rng)
    }
}

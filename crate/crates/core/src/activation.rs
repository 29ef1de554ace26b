//! Elementwise activation functions and the name-keyed registry that the
//! CLI and the instance generators select them from.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convexity {
    StrictlyConvex,
    Convex,
    Neither,
}

/// Which derivative of the activation to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Order {
    Value,
    First,
    Second,
}

impl TryFrom<u8> for Order {
    type Error = Error;

    fn try_from(order: u8) -> Result<Self> {
        match order {
            0 => Ok(Order::Value),
            1 => Ok(Order::First),
            2 => Ok(Order::Second),
            k => Err(Error::Contract(format!("derivative order must be 0, 1 or 2, got {k}"))),
        }
    }
}

/// A scalar nonlinearity σ together with σ' and σ''.
pub trait Activation: Send + Sync {
    fn name(&self) -> &str;
    fn value(&self, x: f64) -> f64;
    fn first(&self, x: f64) -> f64;
    fn second(&self, x: f64) -> f64;
    fn convexity(&self) -> Convexity;

    /// False for activations with a kink (finite-difference checks must
    /// stay away from it).
    fn is_smooth(&self) -> bool {
        true
    }

    /// Points where the activation is not twice differentiable.
    fn kinks(&self) -> &[f64] {
        &[]
    }

    fn eval(&self, order: Order, x: f64) -> f64 {
        match order {
            Order::Value => self.value(x),
            Order::First => self.first(x),
            Order::Second => self.second(x),
        }
    }
}

pub type ActivationRef = Arc<dyn Activation>;

impl fmt::Debug for dyn Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Activation({})", self.name())
    }
}

/// Entrywise σ, σ' or σ'' of `a`.
pub fn apply(act: &dyn Activation, a: &Matrix, order: Order) -> Matrix {
    a.map(|x| act.eval(order, x))
}

#[derive(Debug, Clone, Copy)]
pub struct Identity;

impl Activation for Identity {
    fn name(&self) -> &str {
        "identity"
    }
    fn value(&self, x: f64) -> f64 {
        x
    }
    fn first(&self, _: f64) -> f64 {
        1.0
    }
    fn second(&self, _: f64) -> f64 {
        0.0
    }
    fn convexity(&self) -> Convexity {
        Convexity::Convex
    }
}

/// `max(x, 0)` with σ'(0) = σ''(0) = 0, so every non-positive input is an
/// exact zero of σ, σ' and σ''.
#[derive(Debug, Clone, Copy)]
pub struct Relu;

impl Activation for Relu {
    fn name(&self) -> &str {
        "relu"
    }
    fn value(&self, x: f64) -> f64 {
        if x > 0.0 {
            x
        } else {
            0.0
        }
    }
    fn first(&self, x: f64) -> f64 {
        if x > 0.0 {
            1.0
        } else {
            0.0
        }
    }
    fn second(&self, _: f64) -> f64 {
        0.0
    }
    fn convexity(&self) -> Convexity {
        Convexity::Convex
    }
    fn is_smooth(&self) -> bool {
        false
    }
    fn kinks(&self) -> &[f64] {
        &[0.0]
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Sigmoid;

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `1 − logistic(x)` without cancellation.
fn logistic_complement(x: f64) -> f64 {
    logistic(-x)
}

impl Activation for Sigmoid {
    fn name(&self) -> &str {
        "sigmoid"
    }
    fn value(&self, x: f64) -> f64 {
        logistic(x)
    }
    fn first(&self, x: f64) -> f64 {
        logistic(x) * logistic_complement(x)
    }
    fn second(&self, x: f64) -> f64 {
        let s = logistic(x);
        let c = logistic_complement(x);
        s * c * (c - s)
    }
    fn convexity(&self) -> Convexity {
        Convexity::Neither
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Tanh;

fn sech2(x: f64) -> f64 {
    let c = x.cosh();
    1.0 / (c * c)
}

impl Activation for Tanh {
    fn name(&self) -> &str {
        "tanh"
    }
    fn value(&self, x: f64) -> f64 {
        x.tanh()
    }
    fn first(&self, x: f64) -> f64 {
        sech2(x)
    }
    fn second(&self, x: f64) -> f64 {
        -2.0 * x.tanh() * sech2(x)
    }
    fn convexity(&self) -> Convexity {
        Convexity::Neither
    }
}

/// `log(1 + eˣ)`.
#[derive(Debug, Clone, Copy)]
pub struct Softplus;

impl Activation for Softplus {
    fn name(&self) -> &str {
        "softplus"
    }
    fn value(&self, x: f64) -> f64 {
        if x > 0.0 {
            x + (-x).exp().ln_1p()
        } else {
            x.exp().ln_1p()
        }
    }
    fn first(&self, x: f64) -> f64 {
        logistic(x)
    }
    fn second(&self, x: f64) -> f64 {
        logistic(x) * logistic_complement(x)
    }
    fn convexity(&self) -> Convexity {
        Convexity::StrictlyConvex
    }
}

/// σ = σ' = σ'' = exp.
#[derive(Debug, Clone, Copy)]
pub struct Exp;

impl Activation for Exp {
    fn name(&self) -> &str {
        "exp"
    }
    fn value(&self, x: f64) -> f64 {
        x.exp()
    }
    fn first(&self, x: f64) -> f64 {
        x.exp()
    }
    fn second(&self, x: f64) -> f64 {
        x.exp()
    }
    fn convexity(&self) -> Convexity {
        Convexity::StrictlyConvex
    }
}

/// `x²`: strictly convex with σ(0) = σ'(0) = 0 and σ'' ≡ 2.
#[derive(Debug, Clone, Copy)]
pub struct Square;

impl Activation for Square {
    fn name(&self) -> &str {
        "square"
    }
    fn value(&self, x: f64) -> f64 {
        x * x
    }
    fn first(&self, x: f64) -> f64 {
        2.0 * x
    }
    fn second(&self, _: f64) -> f64 {
        2.0
    }
    fn convexity(&self) -> Convexity {
        Convexity::StrictlyConvex
    }
}

/// Name-keyed collection of activations.
#[derive(Clone, Default)]
pub struct ActivationRegistry {
    entries: BTreeMap<String, ActivationRef>,
}

impl ActivationRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn with_builtins() -> Self {
        let mut reg = Self::empty();
        reg.register(Arc::new(Identity));
        reg.register(Arc::new(Relu));
        reg.register(Arc::new(Sigmoid));
        reg.register(Arc::new(Tanh));
        reg.register(Arc::new(Softplus));
        reg.register(Arc::new(Exp));
        reg.register(Arc::new(Square));
        reg
    }

    /// Adds or replaces the activation under its own name.
    pub fn register(&mut self, act: ActivationRef) {
        self.entries.insert(act.name().to_string(), act);
    }

    pub fn get(&self, name: &str) -> Result<ActivationRef> {
        self.entries.get(name).cloned().ok_or_else(|| Error::Lookup {
            kind: "activation",
            name: name.to_string(),
            valid: self.names().join(", "),
        })
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.keys().map(String::as_str).collect()
    }
}

fn builtins() -> &'static ActivationRegistry {
    static REGISTRY: OnceLock<ActivationRegistry> = OnceLock::new();
    REGISTRY.get_or_init(ActivationRegistry::with_builtins)
}

/// Looks up one of the built-in activations by name.
pub fn builtin(name: &str) -> Result<ActivationRef> {
    builtins().get(name)
}

pub fn builtin_names() -> Vec<&'static str> {
    builtins().names()
}

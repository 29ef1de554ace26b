//! Loss-landscape analysis for least-squares dense networks.
//!
//! Closed-form gradients and Hessians of the shallow model
//! `½‖Y − W1 σ(W0 X)‖²_F`, a deep extension, finite-difference oracles, and
//! the geometry of stationary points: zero-misfit minima and their Hessian
//! nullspace, degenerate-activation saddles, and the orthant estimate.
//!
//! Parameters are always stacked column-major as `[vec(W1); vec(W0)]` for the
//! shallow model and `[vec(W0); …; vec(WN)]` for the deep one.

pub mod activation;
pub mod deep;
pub mod error;
pub mod instances;
pub mod linear;
pub mod matrix;
pub mod oracle;
pub mod shallow;
pub mod stationary;

pub use activation::{builtin, Activation, ActivationRef, ActivationRegistry};
pub use deep::DeepNetwork;
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use shallow::{Dataset, ShallowNetwork};
pub use stationary::Tolerances;

#![allow(dead_code)]

use landscape_core::deep::DeepNetwork;
use landscape_core::instances::gaussian;
use landscape_core::oracle::{fd_gradient, fd_hessian, relative_error, FdConfig};
use landscape_core::{builtin, Dataset, Matrix, ShallowNetwork};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random shallow instance with m, n, r ≤ 4 and d ≤ 5.
pub fn small_instance(rng: &mut ChaCha8Rng, activation: &str) -> (ShallowNetwork, Dataset) {
    let m = rng.random_range(1..=4);
    let n = rng.random_range(1..=4);
    let r = rng.random_range(1..=4);
    let d = rng.random_range(1..=5);
    let net = ShallowNetwork::new(
        gaussian(rng, m, r, 0.8),
        gaussian(rng, r, n, 0.8),
        builtin(activation).unwrap(),
    )
    .unwrap();
    let data = Dataset::new(gaussian(rng, n, d, 1.0), gaussian(rng, m, d, 1.0)).unwrap();
    (net, data)
}

pub fn shallow_fd_gradient(net: &ShallowNetwork, data: &Dataset) -> Vec<f64> {
    let loss = |p: &[f64]| net.with_params(p).unwrap().loss(data).unwrap();
    fd_gradient(loss, &net.params(), FdConfig::default()).unwrap()
}

pub fn shallow_fd_hessian(net: &ShallowNetwork, data: &Dataset) -> (Matrix, f64) {
    let loss = |p: &[f64]| net.with_params(p).unwrap().loss(data).unwrap();
    let fd = fd_hessian(loss, &net.params(), FdConfig::for_hessian()).unwrap();
    (fd.hessian, fd.asymmetry)
}

pub fn matrix_rel(a: &Matrix, b: &Matrix) -> f64 {
    relative_error(a.as_slice(), b.as_slice())
}

pub fn deep_instance(rng: &mut ChaCha8Rng, widths: &[usize], activation: &str, n: usize, m: usize, d: usize) -> (DeepNetwork, Dataset) {
    let mut sizes = vec![n];
    sizes.extend_from_slice(widths);
    sizes.push(m);
    let weights: Vec<Matrix> = sizes.windows(2).map(|w| gaussian(rng, w[1], w[0], 0.8)).collect();
    let acts = vec![builtin(activation).unwrap(); widths.len()];
    let net = DeepNetwork::new(weights, acts).unwrap();
    let data = Dataset::new(gaussian(rng, n, d, 1.0), gaussian(rng, m, d, 1.0)).unwrap();
    (net, data)
}

pub fn deep_fd_gradient(net: &DeepNetwork, data: &Dataset) -> Vec<f64> {
    let loss = |p: &[f64]| net.with_params(p).unwrap().loss(data).unwrap();
    fd_gradient(loss, &net.params(), FdConfig::default()).unwrap()
}

pub fn stack(blocks: &[Matrix]) -> Vec<f64> {
    blocks.iter().flat_map(|b| b.as_slice().iter().copied()).collect()
}

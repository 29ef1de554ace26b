use landscape_core::matrix::{symm_eig, Matrix, DEFAULT_EIG_TOL};
use landscape_core::oracle::{fd_gradient, fd_hessian, rayleigh, relative_error, FdConfig};
use landscape_core::{builtin, Dataset, ShallowNetwork};
use proptest::prelude::*;

fn frozen_instance() -> (ShallowNetwork, Dataset) {
    let net = ShallowNetwork::new(
        Matrix::from_rows(&[[1.0, 2.0]]),
        Matrix::identity(2),
        builtin("tanh").unwrap(),
    )
    .unwrap();
    let data = Dataset::new(Matrix::from_rows(&[[0.5], [-1.0]]), Matrix::from_rows(&[[0.3]])).unwrap();
    (net, data)
}

// values computed independently in double precision
const FROZEN_LOSS: f64 = 0.9262573440122108;
const FROZEN_G1: [f64; 2] = [-0.6289743328161594, 1.0365838372225626];
// column-major vec(G0)
const FROZEN_G0: [f64; 4] = [
    -0.5352056619905026,
    -0.5716149620646145,
    1.0704113239810051,
    1.143229924129229,
];

#[test]
fn frozen_loss_and_gradient() {
    let (net, data) = frozen_instance();
    assert!((net.loss(&data).unwrap() - FROZEN_LOSS).abs() < 1e-15);
    let g = net.gradient(&data).unwrap();
    assert!(relative_error(g.g1.as_slice(), &FROZEN_G1) < 1e-14);
    assert!(relative_error(g.g0.as_slice(), &FROZEN_G0) < 1e-14);
}

#[test]
fn fd_matches_frozen_gradient() {
    let (net, data) = frozen_instance();
    let loss = |p: &[f64]| net.with_params(p).unwrap().loss(&data).unwrap();
    let fd = fd_gradient(loss, &net.params(), FdConfig::default()).unwrap();
    let mut expected = FROZEN_G1.to_vec();
    expected.extend_from_slice(&FROZEN_G0);
    assert!(relative_error(&fd, &expected) < 1e-9);
}

#[test]
fn rayleigh_examples() {
    let id = Matrix::identity(3);
    assert!((rayleigh(&id, &[0.3, -2.0, 7.0]).unwrap() - 1.0).abs() < 1e-15);
    let h = Matrix::from_rows(&[[3.0, 0.0], [0.0, -1.0]]);
    assert_eq!(rayleigh(&h, &[0.0, 2.5]).unwrap(), -1.0);
    assert_eq!(rayleigh(&h, &[4.0, 0.0]).unwrap(), 3.0);
    assert!(rayleigh(&h, &[0.0, 0.0]).is_err());
}

#[test]
fn fd_hessian_of_quadratic() {
    // f(p) = ½ pᵀ A p + bᵀ p
    let a = Matrix::from_rows(&[[2.0, -1.0, 0.5], [-1.0, 3.0, 0.0], [0.5, 0.0, 1.0]]);
    let f = |p: &[f64]| {
        let ap = a.matvec(p).unwrap();
        0.5 * p.iter().zip(&ap).map(|(x, y)| x * y).sum::<f64>() + p[0] - 2.0 * p[2]
    };
    let fd = fd_hessian(f, &[0.4, -1.2, 2.0], FdConfig::for_hessian()).unwrap();
    assert!((&fd.hessian - &a).max_abs() < 1e-6);
    assert!(fd.asymmetry <= 1e-6 * a.frobenius_norm());
}

#[test]
fn non_finite_loss_names_the_parameter() {
    let f = |p: &[f64]| if p[1] > 1.0 { f64::NAN } else { p[0] };
    let err = fd_gradient(f, &[0.0, 1.0], FdConfig::default()).unwrap_err();
    assert!(err.to_string().contains("parameter 1"), "{err}");
}

#[test]
fn step_bounds_enforced() {
    assert!(FdConfig::new(1e-9).is_err());
    assert!(FdConfig::new(1e-2).is_err());
    assert_eq!(FdConfig::new(1e-6).unwrap().step(-3.0), 4e-6);
}

fn coeffs(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, n)
}

fn unit(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn fd_exact_on_quadratics(c in unit(3), q in unit(3), p in coeffs(3)) {
        let f = |x: &[f64]| {
            (0..3).map(|k| c[k] * x[k] + q[k] * x[k] * x[k]).sum::<f64>() + c[0] * x[1] * x[2]
        };
        let g = fd_gradient(f, &p, FdConfig::default()).unwrap();
        let exact = [
            c[0] + 2.0 * q[0] * p[0],
            c[1] + 2.0 * q[1] * p[1] + c[0] * p[2],
            c[2] + 2.0 * q[2] * p[2] + c[0] * p[1],
        ];
        for k in 0..3 {
            prop_assert!((g[k] - exact[k]).abs() <= 1e-9, "{} vs {}", g[k], exact[k]);
        }
    }

    #[test]
    fn rayleigh_lies_in_spectrum(entries in coeffs(10), v in coeffs(4)) {
        prop_assume!(v.iter().any(|x| x.abs() > 1e-3));
        let mut k = 0;
        let mut h = Matrix::zeros(4, 4);
        for i in 0..4 {
            for j in i..4 {
                h[(i, j)] = entries[k];
                h[(j, i)] = entries[k];
                k += 1;
            }
        }
        let eig = symm_eig(&h, DEFAULT_EIG_TOL).unwrap();
        let q = rayleigh(&h, &v).unwrap();
        let slack = 1e-12 * (1.0 + eig.spectral_radius());
        prop_assert!(q >= eig.min() - slack && q <= eig.max() + slack);
    }
}

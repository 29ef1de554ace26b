use anyhow::{anyhow, bail, Context, Result};
use landscape_core::deep::{DeepNetwork, LayerSpec};
use landscape_core::instances::{gaussian, GeneratorRegistry, Instance, InstanceSpec};
use landscape_core::linear::{linear_baseline, perturbation_check, reparametrization_gap};
use landscape_core::oracle::{fd_gradient, fd_hessian, relative_error, FdConfig};
use landscape_core::stationary::{
    classify_stationary, deep_classify_stationary, find_negative_curvature, nullspace_at_minimum,
    orthant_probability,
};
use landscape_core::{builtin, Dataset, Matrix, ShallowNetwork};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::report::Check;

pub type Outcome = (Value, Vec<Check>);

pub enum Point {
    Shallow(ShallowNetwork, Dataset),
    Deep(DeepNetwork, Dataset),
}

pub fn seeded(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn load_matrix(path: &std::path::Path, what: &str) -> Result<Matrix> {
    Matrix::load(path).with_context(|| format!("loading {what} from {}", path.display()))
}

fn load_point(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Result<Point> {
    let inputs = &cfg.inputs;
    let (Some(xp), Some(yp)) = (&inputs.x, &inputs.y) else {
        bail!("inputs.x and inputs.y must be given together");
    };
    let x = load_matrix(xp, "X")?;
    let y = load_matrix(yp, "Y")?;
    let data = Dataset::new(x, y).with_context(|| format!("data files {} and {}", xp.display(), yp.display()))?;

    if let Some(lp) = &inputs.layers {
        let text = std::fs::read_to_string(lp).with_context(|| format!("reading {}", lp.display()))?;
        let layers: Vec<LayerSpec> =
            serde_json::from_str(&text).with_context(|| format!("invalid layer list {}", lp.display()))?;
        let net = DeepNetwork::from_layers(&layers)?;
        net.check(&data)
            .with_context(|| format!("layers {} against {} / {}", lp.display(), xp.display(), yp.display()))?;
        return Ok(Point::Deep(net, data));
    }
    let activation = builtin(cfg.activation.as_deref().unwrap_or("tanh"))?;
    let net = match (&inputs.w1, &inputs.w0) {
        (Some(p1), Some(p0)) => ShallowNetwork::new(load_matrix(p1, "W1")?, load_matrix(p0, "W0")?, activation)
            .with_context(|| format!("weights {} and {}", p1.display(), p0.display()))?,
        (None, None) => {
            let (m, n, r) = (data.y.rows(), data.x.rows(), cfg.dims.r);
            ShallowNetwork::new(gaussian(rng, m, r, 0.7), gaussian(rng, r, n, 0.7), activation)?
        }
        _ => bail!("inputs.w1 and inputs.w0 must be given together"),
    };
    net.check(&data).with_context(|| {
        let mut files: Vec<String> = [&inputs.w1, &inputs.w0, &inputs.x, &inputs.y]
            .iter()
            .filter_map(|p| p.as_ref().map(|p| p.display().to_string()))
            .collect();
        files.dedup();
        format!("shape mismatch between {}", files.join(", "))
    })?;
    Ok(Point::Shallow(net, data))
}

/// A point from input files when given, otherwise from the named generator.
pub fn resolve_point(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng, default_generator: &str) -> Result<Point> {
    if cfg.inputs.has_data() {
        return load_point(cfg, rng);
    }
    let spec = InstanceSpec {
        dims: cfg.dims,
        widths: cfg.widths.clone(),
        activation: cfg.activation.clone(),
    };
    let name = cfg.generator.as_deref().unwrap_or(default_generator);
    Ok(match GeneratorRegistry::with_builtins().generate(name, &spec, rng)? {
        Instance::Shallow { net, data } => Point::Shallow(net, data),
        Instance::Deep { net, data } => Point::Deep(net, data),
    })
}

fn shallow_only(point: Point, command: &str) -> Result<(ShallowNetwork, Dataset)> {
    match point {
        Point::Shallow(net, data) => Ok((net, data)),
        Point::Deep(..) => bail!("{command} supports the shallow model only"),
    }
}

fn expectation(cfg: &ExperimentConfig, actual: &str) -> Option<Check> {
    cfg.expect.as_ref().map(|want| Check::flag(&format!("expect {want}"), want == actual))
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| anyhow!("serializing result: {e}"))
}

/// Preactivations within `margin` of a kink of the activation.
fn near_kink(kinks: &[f64], pre: &Matrix, margin: f64) -> bool {
    !kinks.is_empty() && pre.as_slice().iter().any(|&z| kinks.iter().any(|&k| (z - k).abs() <= margin))
}

fn fd_margin(params: &[f64], x: &Matrix, h0: f64) -> f64 {
    let pmax = params.iter().fold(0.0f64, |a, p| a.max(p.abs()));
    10.0 * h0 * (1.0 + pmax) * (1.0 + x.max_abs() * x.rows() as f64)
}

fn flip_block(blocks: &mut [(String, Matrix)], name: &str) -> Result<()> {
    let names: Vec<String> = blocks.iter().map(|(n, _)| n.clone()).collect();
    let (_, block) = blocks
        .iter_mut()
        .find(|(n, _)| n == name)
        .ok_or_else(|| anyhow!("corrupt_gradient: no block '{name}' (blocks: {})", names.join(", ")))?;
    *block = block.scale(-1.0);
    Ok(())
}

const MAX_RESAMPLES: usize = 100;

pub fn grad_check(cfg: &ExperimentConfig) -> Result<Outcome> {
    let mut records = Vec::new();
    let (mut worst_g, mut worst_h, mut worst_gn, mut worst_sym) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let h0 = FdConfig::default().h0;
    for i in 0..cfg.instances {
        let mut rng = seeded(cfg.seed, i as u64);
        let mut resamples = 0;
        let point = loop {
            let point = resolve_point(cfg, &mut rng, "random")?;
            let kinky = match &point {
                Point::Shallow(net, data) => {
                    near_kink(net.activation.kinks(), &(&net.w0 * &data.x), fd_margin(&net.params(), &data.x, h0))
                }
                Point::Deep(net, data) => {
                    let fwd = net.forward(&data.x)?;
                    let margin = fd_margin(&net.params(), &data.x, h0);
                    net.activations()
                        .iter()
                        .zip(&fwd.pre)
                        .any(|(a, pre)| near_kink(a.kinks(), pre, margin))
                }
            };
            if !kinky {
                break point;
            }
            if cfg.inputs.has_data() {
                bail!("preactivations lie within the FD step of a kink; finite differences are invalid here");
            }
            resamples += 1;
            if resamples > MAX_RESAMPLES {
                bail!("no kink-free instance after {MAX_RESAMPLES} resamples");
            }
        };

        let (mut blocks, fd, params) = match &point {
            Point::Shallow(net, data) => {
                let g = net.gradient(data)?;
                let loss = |p: &[f64]| net.with_params(p).map_or(f64::NAN, |n| n.loss(data).unwrap_or(f64::NAN));
                let fd = fd_gradient(loss, &net.params(), FdConfig::default())?;
                (vec![("W1".to_string(), g.g1), ("W0".to_string(), g.g0)], fd, net.param_count())
            }
            Point::Deep(net, data) => {
                let g = net.gradient(data)?;
                let loss = |p: &[f64]| net.with_params(p).map_or(f64::NAN, |n| n.loss(data).unwrap_or(f64::NAN));
                let fd = fd_gradient(loss, &net.params(), FdConfig::default())?;
                let named = g.into_iter().enumerate().map(|(j, m)| (format!("W{j}"), m)).collect();
                (named, fd, net.param_count())
            }
        };
        if let Some(name) = &cfg.corrupt_gradient {
            flip_block(&mut blocks, name)?;
        }
        let closed: Vec<f64> = blocks.iter().flat_map(|(_, m)| m.as_slice().iter().copied()).collect();
        let rel = relative_error(&closed, &fd);
        worst_g = worst_g.max(rel);

        let mut record = json!({ "index": i, "params": params, "resamples": resamples, "gradient_rel_error": rel });
        if cfg.hessian {
            let Point::Shallow(net, data) = &point else {
                bail!("Hessian checks support the shallow model only");
            };
            let blocks = net.hessian_blocks(data)?;
            let h = blocks.full();
            let j = net.misfit_jacobian(data)?;
            let gn = relative_error(blocks.gauss_newton().as_slice(), j.tr_matmul(&j)?.as_slice());
            let loss = |p: &[f64]| net.with_params(p).map_or(f64::NAN, |n| n.loss(data).unwrap_or(f64::NAN));
            let fdh = fd_hessian(loss, &net.params(), FdConfig::for_hessian())?;
            let hrel = relative_error(h.as_slice(), fdh.hessian.as_slice());
            let sym = if h.frobenius_norm() > 0.0 { h.asymmetry() / h.frobenius_norm() } else { 0.0 };
            worst_h = worst_h.max(hrel);
            worst_gn = worst_gn.max(gn);
            worst_sym = worst_sym.max(sym);
            record["hessian_rel_error"] = json!(hrel);
            record["gauss_newton_rel_error"] = json!(gn);
            record["hessian_asymmetry"] = json!(sym);
        }
        records.push(record);
    }

    let mut checks = vec![Check::at_most("gradient_rel_error", worst_g, cfg.checks.gradient)];
    let mut payload = json!({ "instances": records, "max_gradient_rel_error": worst_g });
    if cfg.hessian {
        checks.push(Check::at_most("hessian_rel_error", worst_h, cfg.checks.hessian));
        checks.push(Check::at_most("gauss_newton_rel_error", worst_gn, cfg.checks.gauss_newton));
        checks.push(Check::at_most("hessian_asymmetry", worst_sym, cfg.checks.symmetry));
        payload["max_hessian_rel_error"] = json!(worst_h);
    }
    Ok((payload, checks))
}

pub fn classify(cfg: &ExperimentConfig) -> Result<Outcome> {
    let mut rng = seeded(cfg.seed, 0);
    let report = match resolve_point(cfg, &mut rng, "random")? {
        Point::Shallow(net, data) => classify_stationary(&net, &data, &cfg.tolerances)?,
        Point::Deep(net, data) => deep_classify_stationary(&net, &data, &cfg.tolerances)?,
    };
    let checks = expectation(cfg, report.verdict.as_str()).into_iter().collect();
    Ok((to_value(&report)?, checks))
}

pub fn nullspace(cfg: &ExperimentConfig) -> Result<Outcome> {
    let mut rng = seeded(cfg.seed, 0);
    let (net, data) = shallow_only(resolve_point(cfg, &mut rng, "zero-misfit")?, "nullspace")?;
    let res = nullspace_at_minimum(&net, &data, &cfg.tolerances)?;
    let mut payload = to_value(&res)?;
    payload["numerical_dimension"] = json!(res.numerical_dimension());
    payload["analytic_dimension"] = json!(res.analytic_dimension());
    let checks = vec![Check::at_most("max_containment_residual", res.max_containment_residual, res.threshold)];
    Ok((payload, checks))
}

pub fn curvature(cfg: &ExperimentConfig) -> Result<Outcome> {
    let mut rng = seeded(cfg.seed, 0);
    let (net, data) = shallow_only(resolve_point(cfg, &mut rng, "square-saddle")?, "curvature")?;
    let rep = find_negative_curvature(&net, &data, &cfg.tolerances)?;
    // at σ = σ' = 0 only the second-order W0 block survives, so the form
    // on a unit eigenvector reproduces its eigenvalue
    let gap = (rep.quadratic_form_value - rep.rayleigh_quotient).abs();
    let mut checks = vec![Check::at_most("form_vs_rayleigh", gap, 1e-10 * (1.0 + rep.lambda_max))];
    let class = serde_json::to_value(rep.classification)?;
    checks.extend(expectation(cfg, class.as_str().unwrap_or_default()));
    Ok((to_value(&rep)?, checks))
}

pub fn orthant(cfg: &ExperimentConfig) -> Result<Outcome> {
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for &(r, d) in &cfg.grid {
        let est = orthant_probability(r, d, cfg.samples, cfg.seed)?;
        let z = if est.std_error > 0.0 {
            (est.estimate - est.expected).abs() / est.std_error
        } else if est.estimate == est.expected {
            0.0
        } else {
            f64::MAX
        };
        let pass = est.within(cfg.checks.sigmas);
        let mut row = to_value(&est)?;
        row["z"] = json!(z);
        row["pass"] = json!(pass);
        rows.push(row);
        checks.push(Check::at_most(&format!("orthant r={r} d={d} |z|"), z, cfg.checks.sigmas));
    }
    Ok((json!({ "estimates": rows }), checks))
}

pub fn linear(cfg: &ExperimentConfig) -> Result<Outcome> {
    let mut rng = seeded(cfg.seed, 0);
    let dims = cfg.dims;
    let generator = cfg.generator.as_deref().unwrap_or("random");
    let data = if cfg.inputs.has_data() {
        let (Some(xp), Some(yp)) = (&cfg.inputs.x, &cfg.inputs.y) else {
            bail!("inputs.x and inputs.y must be given together");
        };
        Dataset::new(load_matrix(xp, "X")?, load_matrix(yp, "Y")?)
            .with_context(|| format!("data files {} and {}", xp.display(), yp.display()))?
    } else {
        let x = gaussian(&mut rng, dims.n, dims.d, 1.0);
        let y = match generator {
            "random" => gaussian(&mut rng, dims.m, dims.d, 1.0),
            "factorable" => {
                let w = &gaussian(&mut rng, dims.m, dims.r, 1.0) * &gaussian(&mut rng, dims.r, dims.n, 1.0);
                &w * &x
            }
            other => bail!("linear-baseline generator must be 'random' or 'factorable', got '{other}'"),
        };
        Dataset::new(x, y)?
    };
    let base = linear_baseline(&data, dims.r)?;
    let b = &gaussian(&mut rng, dims.r, dims.r, 1.0) + &Matrix::identity(dims.r).scale(2.0);
    let gap = reparametrization_gap(&base.w1, &base.w0, &b, &data)?;
    let search = perturbation_check(&base, &data, cfg.perturbations, cfg.perturbation_scale, &mut rng)?;

    let mut checks = vec![
        Check::at_most("b_invariance_gap", gap, cfg.checks.invariance),
        Check::at_most("perturbations_beating_baseline", search.beaten as f64, 0.0),
    ];
    if generator == "factorable" && !cfg.inputs.has_data() {
        checks.push(Check::at_most("factorable_loss", base.loss, cfg.checks.exact_loss));
    }
    let mut payload = to_value(&base)?;
    payload["b_invariance_gap"] = json!(gap);
    payload["perturbation_search"] = to_value(&search)?;
    Ok((payload, checks))
}

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use landscape_core::instances::Dims;
use landscape_core::Tolerances;
use serde::{Deserialize, Serialize};

/// Thresholds for the harness's own pass/fail checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckTolerances {
    /// Closed-form vs FD gradient, relative.
    pub gradient: f64,
    /// Closed-form vs FD Hessian, relative Frobenius.
    pub hessian: f64,
    /// Gauss-Newton block vs `JᵀJ`, relative.
    pub gauss_newton: f64,
    /// Relative Hessian asymmetry.
    pub symmetry: f64,
    /// Orthant estimates must lie within this many standard errors.
    pub sigmas: f64,
    /// Linear baseline loss change under `(W1 B, B⁻¹ W0)`.
    pub invariance: f64,
    /// Linear baseline loss on factorable data.
    pub exact_loss: f64,
}

impl Default for CheckTolerances {
    fn default() -> Self {
        CheckTolerances {
            gradient: 1e-6,
            hessian: 1e-5,
            gauss_newton: 1e-10,
            symmetry: 1e-10,
            sigmas: 4.0,
            invariance: 1e-10,
            exact_loss: 1e-12,
        }
    }
}

impl CheckTolerances {
    fn set(&mut self, name: &str, value: f64) -> bool {
        let slot = match name {
            "gradient" => &mut self.gradient,
            "hessian" => &mut self.hessian,
            "gauss_newton" => &mut self.gauss_newton,
            "symmetry" => &mut self.symmetry,
            "sigmas" => &mut self.sigmas,
            "invariance" => &mut self.invariance,
            "exact_loss" => &mut self.exact_loss,
            _ => return false,
        };
        *slot = value;
        true
    }
}

/// Input files. `layers` holds a deep network as a JSON layer list.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Inputs {
    pub x: Option<PathBuf>,
    pub y: Option<PathBuf>,
    pub w1: Option<PathBuf>,
    pub w0: Option<PathBuf>,
    pub layers: Option<PathBuf>,
}

impl Inputs {
    pub fn has_data(&self) -> bool {
        self.x.is_some() || self.y.is_some()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: String,
    pub seed: u64,
    pub dims: Dims,
    /// Hidden widths; switches generated instances to the deep model.
    pub widths: Option<Vec<usize>>,
    pub activation: Option<String>,
    pub generator: Option<String>,
    /// Random instances for grad-check.
    pub instances: usize,
    /// Also check Hessians in grad-check.
    pub hessian: bool,
    /// Monte Carlo samples per orthant grid point.
    pub samples: usize,
    /// `(r, d)` pairs for the orthant estimate.
    pub grid: Vec<(usize, usize)>,
    /// Random perturbed factor pairs for the linear baseline.
    pub perturbations: usize,
    pub perturbation_scale: f64,
    /// Expected verdict / classification; adds a check when present.
    pub expect: Option<String>,
    pub tolerances: Tolerances,
    pub checks: CheckTolerances,
    pub inputs: Inputs,
    pub out: Option<PathBuf>,
    /// Test hook: sign-flip this gradient block ("W1", "W0", "W<j>") before
    /// comparing against finite differences.
    pub corrupt_gradient: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            command: String::new(),
            seed: 0,
            dims: Dims::default(),
            widths: None,
            activation: None,
            generator: None,
            instances: 5,
            hessian: false,
            samples: 100_000,
            grid: vec![(1, 1), (1, 2), (2, 2)],
            perturbations: 20,
            perturbation_scale: 0.05,
            expect: None,
            tolerances: Tolerances::default(),
            checks: CheckTolerances::default(),
            inputs: Inputs::default(),
            out: None,
            corrupt_gradient: None,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    /// `--tol.<name>`: stationary-analysis tolerances first, then the
    /// harness check thresholds.
    pub fn set_tolerance(&mut self, name: &str, value: f64) -> Result<()> {
        if !value.is_finite() || value < 0.0 {
            bail!("tolerance '{name}' must be a nonnegative number, got {value}");
        }
        if self.tolerances.set(name, value) || self.checks.set(name, value) {
            return Ok(());
        }
        bail!(
            "unknown tolerance '{name}'; valid: grad, misfit, degen, null, curv, zero, direction, rank, \
             gradient, hessian, gauss_newton, symmetry, sigmas, invariance, exact_loss"
        )
    }

    pub fn validate(&self) -> Result<()> {
        let Dims { m, n, r, d } = self.dims;
        for (field, v) in [("dims.m", m), ("dims.n", n), ("dims.r", r), ("dims.d", d)] {
            if v == 0 {
                bail!("{field} must be >= 1");
            }
        }
        if let Some(w) = &self.widths {
            if w.is_empty() || w.contains(&0) {
                bail!("widths must be a non-empty list of positive integers");
            }
        }
        if self.instances == 0 {
            bail!("instances must be >= 1");
        }
        if self.grid.iter().any(|&(r, d)| r == 0 || d == 0) {
            bail!("grid entries must have r, d >= 1");
        }
        if !(self.perturbation_scale > 0.0 && self.perturbation_scale.is_finite()) {
            bail!("perturbation_scale must be positive");
        }
        Ok(())
    }
}

pub type ToleranceFlags = Vec<(String, f64)>;

/// Splits `--tol.<name> <value>` / `--tol.<name>=<value>` out of the raw
/// argument list.
pub fn extract_tolerance_flags(args: Vec<String>) -> Result<(Vec<String>, ToleranceFlags)> {
    let mut rest = Vec::with_capacity(args.len());
    let mut tols = Vec::new();
    let mut it = args.into_iter();
    while let Some(arg) = it.next() {
        let Some(flag) = arg.strip_prefix("--tol.") else {
            rest.push(arg);
            continue;
        };
        let (name, raw) = match flag.split_once('=') {
            Some((name, raw)) => (name.to_string(), raw.to_string()),
            None => {
                let raw = it.next().with_context(|| format!("--tol.{flag} needs a value"))?;
                (flag.to_string(), raw)
            }
        };
        let value: f64 = raw
            .parse()
            .with_context(|| format!("--tol.{name}: '{raw}' is not a number"))?;
        tols.push((name, value));
    }
    Ok((rest, tols))
}

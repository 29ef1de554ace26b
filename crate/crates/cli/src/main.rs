//! `landscape-probe`: batch loss-landscape analyses with JSON reports.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use config::{extract_tolerance_flags, ExperimentConfig};
use report::RunReport;

#[derive(Parser, Debug)]
#[command(
    name = "landscape-probe",
    version,
    about = "Gradient, Hessian and stationary-point analyses for least-squares networks",
    after_help = "Tolerances are overridden with --tol.<name> <value>, e.g. --tol.grad 1e-6 or --tol.sigmas=5."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON experiment config; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, env = "LANDSCAPE_PROBE_SEED")]
    seed: Option<u64>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    m: Option<usize>,
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    r: Option<usize>,
    #[arg(long, global = true)]
    d: Option<usize>,
    /// Hidden layer widths for the deep model, e.g. 4,3.
    #[arg(long, global = true, value_delimiter = ',')]
    widths: Option<Vec<usize>>,
    #[arg(long, global = true)]
    activation: Option<String>,
    /// Instance generator (see `list`).
    #[arg(long, global = true)]
    generator: Option<String>,
    /// Monte Carlo samples per grid point.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Random instances for grad-check.
    #[arg(long, global = true)]
    instances: Option<usize>,
    /// Also check Hessians (grad-check).
    #[arg(long, global = true)]
    hessian: bool,
    /// Orthant grid as r:d pairs, e.g. 1:1,1:2,2:2.
    #[arg(long, global = true, value_delimiter = ',', value_parser = parse_pair)]
    grid: Option<Vec<(usize, usize)>>,
    /// Expected verdict or curvature class.
    #[arg(long, global = true)]
    expect: Option<String>,
    #[arg(long, global = true)]
    x: Option<PathBuf>,
    #[arg(long, global = true)]
    y: Option<PathBuf>,
    #[arg(long, global = true)]
    w1: Option<PathBuf>,
    #[arg(long, global = true)]
    w0: Option<PathBuf>,
    /// Deep network as a JSON layer list.
    #[arg(long, global = true)]
    layers: Option<PathBuf>,
    /// Test hook: sign-flip one gradient block before the FD comparison.
    #[arg(long, global = true, hide = true)]
    corrupt_gradient: Option<String>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Closed-form gradients (and Hessians) against finite differences.
    GradCheck,
    /// Stationary-point classification.
    Classify,
    /// Hessian nullspace at a zero-misfit minimum.
    Nullspace,
    /// Negative-curvature search at a degenerate activation point.
    Curvature,
    /// Monte Carlo estimate of the negative-orthant probability.
    Orthant,
    /// Rank-constrained linear baseline.
    LinearBaseline,
    /// Registered activations and generators.
    List,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::GradCheck => "grad-check",
            Command::Classify => "classify",
            Command::Nullspace => "nullspace",
            Command::Curvature => "curvature",
            Command::Orthant => "orthant",
            Command::LinearBaseline => "linear-baseline",
            Command::List => "list",
        }
    }
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (r, d) = s.split_once(':').ok_or_else(|| format!("expected r:d, got '{s}'"))?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("'{v}': {e}"));
    Ok((parse(r)?, parse(d)?))
}

fn resolve(cli: &Cli, tols: &[(String, f64)]) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    cfg.command = cli.command.name().to_string();
    macro_rules! take {
        ($($field:ident => $target:expr),* $(,)?) => {
            $(if let Some(v) = cli.$field.clone() { $target = v; })*
        };
    }
    take!(seed => cfg.seed, m => cfg.dims.m, n => cfg.dims.n, r => cfg.dims.r, d => cfg.dims.d,
          samples => cfg.samples, instances => cfg.instances, grid => cfg.grid);
    macro_rules! take_opt {
        ($($field:ident => $target:expr),* $(,)?) => {
            $(if cli.$field.is_some() { $target = cli.$field.clone(); })*
        };
    }
    take_opt!(widths => cfg.widths, activation => cfg.activation, generator => cfg.generator,
              expect => cfg.expect, out => cfg.out, corrupt_gradient => cfg.corrupt_gradient,
              x => cfg.inputs.x, y => cfg.inputs.y, w1 => cfg.inputs.w1, w0 => cfg.inputs.w0,
              layers => cfg.inputs.layers);
    cfg.hessian |= cli.hessian;
    for (name, value) in tols {
        cfg.set_tolerance(name, value.to_owned())?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn list() -> String {
    let generators = landscape_core::instances::GeneratorRegistry::with_builtins();
    let mut out = String::from("activations:\n");
    for name in landscape_core::activation::builtin_names() {
        out.push_str(&format!("  {name}\n"));
    }
    out.push_str("generators:\n");
    for name in generators.names() {
        let g = generators.get(name).expect("listed name");
        out.push_str(&format!("  {name:<20} {}\n", g.description()));
    }
    out
}

fn run(cli: &Cli, tols: &[(String, f64)]) -> Result<bool> {
    if let Command::List = cli.command {
        print!("{}", list());
        return Ok(true);
    }
    let cfg = resolve(cli, tols)?;
    let start = Instant::now();
    let (payload, checks) = match cli.command {
        Command::GradCheck => commands::grad_check(&cfg),
        Command::Classify => commands::classify(&cfg),
        Command::Nullspace => commands::nullspace(&cfg),
        Command::Curvature => commands::curvature(&cfg),
        Command::Orthant => commands::orthant(&cfg),
        Command::LinearBaseline => commands::linear(&cfg),
        Command::List => unreachable!(),
    }
    .with_context(|| format!("{} failed", cfg.command))?;
    let report = RunReport::new(cfg, payload, checks, start.elapsed().as_secs_f64());
    let text = serde_json::to_string_pretty(&report)?;
    match &report.config.out {
        Some(path) => std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?,
        None => println!("{text}"),
    }
    for c in report.checks.iter().filter(|c| !c.pass) {
        eprintln!("FAIL {}: {:e} (limit {:e})", c.name, c.value, c.limit);
    }
    Ok(report.passed)
}

fn main() -> ExitCode {
    let (args, tols) = match extract_tolerance_flags(std::env::args().collect()) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = Cli::parse_from(args);
    match run(&cli, &tols) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

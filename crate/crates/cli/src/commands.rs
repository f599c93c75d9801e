//! The `verify-kernel`, `star-table` and `selftest` commands, and the
//! command-line front end shared with the binary.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use bergman_core::kernel::fit_alpha_expansion;
use bergman_core::sweep::{numeric_symbols, AlphaRun, SweepOptions};
use bergman_core::C64;
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::checks::{
    diastasis_checks, jet_checks, kernel_checks, selftest_models, symbol_checks, SymbolCheckOptions, GROUPS,
};
use crate::config::{ExperimentConfig, Tolerances, DEFAULT_SEED};
use crate::error::CliError;
use crate::report::{AlphaMetadata, Format, Metadata, Record, Report};

fn point_label(x: &[C64]) -> String {
    let parts: Vec<String> = x.iter().map(|z| format!("{:+.4}{:+.4}i", z.re, z.im)).collect();
    format!("x=({})", parts.join(","))
}

fn point_metadata(points: &[Vec<C64>]) -> Vec<Vec<(f64, f64)>> {
    points.iter().map(|p| p.iter().map(|z| (z.re, z.im)).collect()).collect()
}

fn sweep_options(cfg: &ExperimentConfig) -> SweepOptions {
    let k = &cfg.kernel;
    SweepOptions {
        initial_degree: k.degree,
        max_degree: k.max_degree,
        convergence_tol: k.convergence_tol,
        radial_order: k.radial_order,
        angular_order: k.angular_order,
        cutoff_radius: k.cutoff_radius,
        interior_radius: k.interior_radius,
        ..SweepOptions::default()
    }
}

/// Numeric kernels over the α grid, `1/α` fit of the diagonal symbol, and
/// comparison of its first-order coefficient with `−(Δ ln μ + ½R)`.
pub fn verify_kernel(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    cfg.validate()?;
    cfg.validate_fit()?;
    let model = cfg.model_spec()?;
    if model.dim != 1 {
        return Err(CliError::Config(format!(
            "verify-kernel needs a one-dimensional model, {} has dimension {}",
            model.name, model.dim
        )));
    }
    let points = cfg.sample_points(&model);
    let xs: Vec<C64> = points.iter().map(|p| p[0]).collect();
    let opts = sweep_options(cfg);
    let runs: Vec<AlphaRun> = cfg
        .kernel
        .alphas
        .par_iter()
        .map(|&a| numeric_symbols(&model, a, &xs, &opts))
        .collect::<bergman_core::Result<_>>()?;

    let tol = &cfg.tolerances;
    let mut records = Vec::new();
    let mut meta = Metadata {
        command: "verify-kernel".into(),
        model: model.name.clone(),
        seed: cfg.seed,
        alphas: cfg.kernel.alphas.clone(),
        points: point_metadata(&points),
        ..Metadata::default()
    };
    for run in &runs {
        let worst = run.convergence.iter().copied().fold(0.0, f64::max);
        records.push(Record::residual(
            "convergence",
            format!("alpha={}", run.alpha),
            worst,
            cfg.kernel.convergence_tol,
        ));
        meta.runs.push(AlphaMetadata {
            alpha: run.alpha,
            degree: run.degree,
            radial_order: run.radial_order,
            angular_order: run.angular_order,
            cutoff_radius: run.cutoff_radius,
            tail_estimate: run.tail_estimate,
            condition_estimate: run.condition_estimate,
            max_convergence: worst,
        });
    }
    for (i, x) in points.iter().enumerate() {
        let samples: Vec<(f64, f64)> = runs.iter().map(|r| (r.alpha, r.symbols[i])).collect();
        let fit = fit_alpha_expansion(&samples, cfg.kernel.fit_order)?;
        let label = point_label(x);
        let expected = model.predicted_k1(x)?;
        records.push(Record::relative("k0", label.clone(), 1.0, fit.coeffs[0], tol.k1_relative));
        records.push(Record::relative("k1", label.clone(), expected, fit.coeffs[1], tol.k1_relative));
        meta.extra.push((format!("fit_residual[{i}]"), fit.max_residual));
        if let Some([_, k1]) = model.reference_symbol() {
            meta.extra.push((format!("reference_k1[{i}]"), k1));
        }
    }
    Ok(Report::new(meta, records))
}

/// ⋆-product table for the configured model: unit property, associativity,
/// commutators against the Poisson bracket, μ-independence, Berezin
/// transform identities and both kernel recurrences.
pub fn star_table(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    cfg.validate()?;
    let model = cfg.model_spec()?;
    let points = cfg.sample_points(&model);
    let opts = SymbolCheckOptions {
        trials: cfg.star.polynomials,
        degree: cfg.star.degree,
        seed: cfg.seed,
    };
    let records = symbol_checks(&model, &points, &opts, &cfg.tolerances, &|_| true)?;
    let meta = Metadata {
        command: "star-table".into(),
        model: model.name.clone(),
        seed: cfg.seed,
        points: point_metadata(&points),
        ..Metadata::default()
    };
    Ok(Report::new(meta, records))
}

/// Selftest settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SelftestOptions {
    /// Groups to run; `None` runs all of [`GROUPS`].
    pub groups: Option<Vec<String>>,
    /// Multiplies every default tolerance.
    pub tol_scale: f64,
    pub seed: u64,
}

impl Default for SelftestOptions {
    fn default() -> Self {
        SelftestOptions {
            groups: None,
            tol_scale: 1.0,
            seed: DEFAULT_SEED,
        }
    }
}

/// Full invariant suite on every shipped model with default tolerances.
pub fn selftest(opts: &SelftestOptions) -> Result<Report, CliError> {
    if let Some(groups) = &opts.groups {
        for g in groups {
            if !GROUPS.contains(&g.as_str()) {
                return Err(CliError::Config(format!(
                    "unknown selftest group '{g}'; available: {}",
                    GROUPS.join(", ")
                )));
            }
        }
    }
    if !(opts.tol_scale >= 0.0 && opts.tol_scale.is_finite()) {
        return Err(CliError::Config(format!("tolerance scale must be nonnegative, got {}", opts.tol_scale)));
    }
    let wants = |g: &str| opts.groups.as_ref().is_none_or(|gs| gs.iter().any(|x| x == g));
    let tol = Tolerances::default().scaled(opts.tol_scale);
    let models = selftest_models();
    let mut records = Vec::new();
    if wants("jets") {
        records.extend(jet_checks(&models, &tol)?);
    }
    if wants("diastasis") {
        records.extend(diastasis_checks(&models, &tol)?);
    }
    if wants("kernel") {
        records.extend(kernel_checks(&tol)?);
    }
    let symbol_groups = ["recurrence", "transform", "associativity", "star", "poisson"];
    if symbol_groups.iter().any(|g| wants(g)) {
        let sopts = SymbolCheckOptions {
            seed: opts.seed,
            ..SymbolCheckOptions::default()
        };
        for m in &models {
            records.extend(symbol_checks(m, &m.sample_points(5), &sopts, &tol, &wants)?);
        }
    }
    let meta = Metadata {
        command: "selftest".into(),
        model: models.iter().map(|m| m.name.as_str()).collect::<Vec<_>>().join(","),
        seed: opts.seed,
        extra: vec![("tol_scale".into(), opts.tol_scale)],
        ..Metadata::default()
    };
    Ok(Report::new(meta, records))
}

/// Command line.
#[derive(Debug, Parser)]
#[command(name = "bergman", version, about = "Weighted Bergman kernel and Berezin–Töplitz star-product verification")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Report path; standard output if absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Seed for random polynomial symbols (overrides the config).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the diagonal kernel symbol over α and compare its first-order term.
    VerifyKernel {
        /// Model name used when no config is given.
        #[arg(long, default_value = "disc-mu-sq")]
        model: String,
    },
    /// Tabulate ⋆-product identities on random polynomial symbols.
    StarTable {
        #[arg(long, default_value = "disc-mu-sq")]
        model: String,
    },
    /// Run the invariant suite on all shipped models.
    Selftest {
        /// Comma-separated subset of groups.
        #[arg(long, value_delimiter = ',')]
        groups: Option<Vec<String>>,
        /// Multiply every tolerance by this factor.
        #[arg(long, default_value_t = 1.0)]
        tol_scale: f64,
    },
}

fn load_config(global: &GlobalArgs, model: &str) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &global.config {
        Some(path) => ExperimentConfig::from_path(path)?,
        None => {
            let cfg = ExperimentConfig::for_model(model);
            cfg.validate()?;
            cfg
        }
    };
    if let Some(seed) = global.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<(Report, Option<PathBuf>, Format), CliError> {
    let g = &cli.global;
    if let Some(n) = g.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        // a second initialization in the same process is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match &cli.command {
        Command::VerifyKernel { model } | Command::StarTable { model } => {
            let cfg = load_config(g, model)?;
            let report = match cli.command {
                Command::VerifyKernel { .. } => verify_kernel(&cfg)?,
                _ => star_table(&cfg)?,
            };
            let out = g.out.clone().or(cfg.output.path.clone());
            Ok((report, out, g.format.unwrap_or(cfg.output.format)))
        }
        Command::Selftest { groups, tol_scale } => {
            let seed = match &g.config {
                Some(path) => ExperimentConfig::from_path(path)?.seed,
                None => DEFAULT_SEED,
            };
            let opts = SelftestOptions {
                groups: groups.clone(),
                tol_scale: *tol_scale,
                seed: g.seed.unwrap_or(seed),
            };
            Ok((selftest(&opts)?, g.out.clone(), g.format.unwrap_or(Format::Json)))
        }
    }
}

/// Runs a parsed command line, writes the report and returns the exit code:
/// 0 all checks pass, 1 some check failed, 2 configuration error,
/// 3 numerical failure.
pub fn run(cli: &Cli) -> i32 {
    let start = Instant::now();
    let (report, out, format) = match execute(cli) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let written = match &out {
        Some(path) => std::fs::File::create(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
            .and_then(|f| report.write(std::io::BufWriter::new(f), format)),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            report.write(&mut lock, format).and_then(|_| lock.flush().map_err(|e| CliError::Io(e.to_string())))
        }
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return e.exit_code();
    }
    eprintln!("{} ({:.1} s)", report.summary(), start.elapsed().as_secs_f64());
    if report.pass() {
        0
    } else {
        1
    }
}

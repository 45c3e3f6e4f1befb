//! Command-line front end: `fit`, `synth-bench` and `inpaint`.
//!
//! Every command is a plain function over parsed arguments; [`run`] parses an
//! argument list and maps the outcome to an exit code (0 success,
//! 1 invalid input, 2 I/O failure).

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ndarray::Array2;
use serde::Serialize;

use crate::ald::Component;
use crate::bench::{render_table, run_benchmark, BenchmarkConfig, Method};
use crate::em::{fit, fit_cwm_uniform, FitOptions};
use crate::io::{read_csv_matrix, read_pgm, to_json_string, write_csv_grid, write_json, write_pgm};
use crate::{Error, FactorPair, MaskedMatrix, Result};

#[derive(Debug, Parser)]
#[command(
    name = "aqlrmf",
    version,
    about = "Robust low-rank matrix factorization under asymmetric Laplace mixture noise"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Factorize a CSV matrix (`NaN` marks a missing entry).
    Fit(FitArgs),
    /// Run the seeded synthetic benchmark grid.
    SynthBench(BenchArgs),
    /// Fill in masked pixels of a grayscale PGM image.
    Inpaint(InpaintArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    /// MoAL noise model fitted by EM.
    Aq,
    /// Uniform-weight L1 factorization.
    Cwm,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub rank: usize,
    #[arg(long, default_value_t = 4)]
    pub components: usize,
    #[arg(long, default_value_t = 100)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = FitMethod::Aq)]
    pub method: FitMethod,
    #[arg(long)]
    pub output_u: Option<PathBuf>,
    #[arg(long)]
    pub output_v: Option<PathBuf>,
    /// JSON report; printed to stdout when omitted.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// JSON configuration; missing fields take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub replications: Option<usize>,
    #[arg(long)]
    pub master_seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    pub ranks: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',', value_enum)]
    pub methods: Option<Vec<BenchMethod>>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Where to write the JSON result.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Keep mean wall-clock times in the JSON (makes reruns differ).
    #[arg(long)]
    pub timings: bool,
    /// Do not print the summary table.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BenchMethod {
    Aq,
    CwmUniform,
}

impl From<BenchMethod> for Method {
    fn from(m: BenchMethod) -> Self {
        match m {
            BenchMethod::Aq => Method::Aq,
            BenchMethod::CwmUniform => Method::CwmUniform,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct InpaintArgs {
    /// Binary (P5) grayscale image.
    #[arg(long)]
    pub image: PathBuf,
    /// Same-size P5 image; pixel value 0 marks a missing pixel, anything else is observed.
    #[arg(long)]
    pub mask: PathBuf,
    #[arg(long, default_value_t = 80)]
    pub rank: usize,
    #[arg(long, default_value_t = 4)]
    pub components: usize,
    #[arg(long, default_value_t = 100)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = FitMethod::Aq)]
    pub method: FitMethod,
    #[arg(long)]
    pub output: PathBuf,
    /// Full-precision reconstruction as CSV.
    #[arg(long)]
    pub output_csv: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitConfig {
    pub method: FitMethod,
    pub rank: usize,
    pub components: usize,
    pub max_iterations: usize,
}

/// Report written by `fit` and `inpaint`. Mixture fields are absent for
/// the uniform L1 method.
#[derive(Debug, Clone, Serialize)]
pub struct FitSummary {
    pub seed: u64,
    pub config: FitConfig,
    pub iterations: usize,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loglik_trace: Option<Vec<f64>>,
    #[serde(rename = "final_S", skip_serializing_if = "Option::is_none")]
    pub final_s: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub components: Option<Vec<Component>>,
    /// Mean absolute error over the observed entries.
    pub l1_observed: f64,
    /// Root-mean-square error over the observed entries.
    pub l2_observed: f64,
}

/// Mean absolute and root-mean-square residual over the observed entries.
pub fn observed_errors(x: &MaskedMatrix, f: &FactorPair) -> (f64, f64) {
    let res = x.residuals(f);
    let n = res.len() as f64;
    let l1 = res.iter().map(|e| e.abs()).sum::<f64>() / n;
    let l2 = (res.iter().map(|e| e * e).sum::<f64>() / n).sqrt();
    (l1, l2)
}

/// Fits `x` with the chosen method.
pub fn fit_matrix(x: &MaskedMatrix, config: FitConfig, seed: u64) -> Result<(FactorPair, FitSummary)> {
    if config.rank > x.nrows().min(x.ncols()) {
        return Err(Error::validation(format!(
            "rank {} exceeds min({}, {})",
            config.rank,
            x.nrows(),
            x.ncols()
        )));
    }
    let opts = FitOptions {
        components: config.components,
        max_iterations: config.max_iterations,
        ..FitOptions::new(config.rank)
    };
    let (factors, iterations, converged, trace, final_s, comps) = match config.method {
        FitMethod::Aq => {
            let out = fit(x, &opts, seed)?;
            (
                out.factors,
                out.report.iterations,
                out.report.converged,
                Some(out.report.loglik_trace),
                Some(out.report.final_s),
                Some(out.model.components().to_vec()),
            )
        }
        FitMethod::Cwm => {
            let (f, sweeps) = fit_cwm_uniform(x, &opts, seed)?;
            (f, sweeps, sweeps < opts.max_iterations, None, None, None)
        }
    };
    let (l1, l2) = observed_errors(x, &factors);
    let summary = FitSummary {
        seed,
        config,
        iterations,
        converged,
        loglik_trace: trace,
        final_s,
        components: comps,
        l1_observed: l1,
        l2_observed: l2,
    };
    Ok((factors, summary))
}

pub fn cmd_fit(args: &FitArgs) -> Result<()> {
    let x = read_csv_matrix(&args.input)?;
    let config = FitConfig {
        method: args.method,
        rank: args.rank,
        components: args.components,
        max_iterations: args.max_iters,
    };
    let (factors, summary) = fit_matrix(&x, config, args.seed)?;
    if let Some(p) = &args.output_u {
        write_csv_grid(p, &factors.u)?;
    }
    if let Some(p) = &args.output_v {
        write_csv_grid(p, &factors.v)?;
    }
    match &args.report {
        Some(p) => write_json(p, &summary),
        None => {
            println!("{}", to_json_string(&summary)?);
            Ok(())
        }
    }
}

/// Configuration from `--config` (if any) with flag overrides applied.
pub fn bench_config(args: &BenchArgs) -> Result<BenchmarkConfig> {
    let mut cfg = match &args.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            serde_json::from_str(&text).map_err(|e| Error::validation(format!("{}: {e}", p.display())))?
        }
        None => BenchmarkConfig::default(),
    };
    if let Some(v) = args.replications {
        cfg.replications = v;
    }
    if let Some(v) = args.master_seed {
        cfg.master_seed = v;
    }
    if let Some(v) = &args.ranks {
        cfg.ranks = v.clone();
    }
    if let Some(v) = &args.methods {
        cfg.methods = v.iter().map(|&m| m.into()).collect();
    }
    if let Some(v) = args.max_iters {
        cfg.max_iterations = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn cmd_synth_bench(args: &BenchArgs) -> Result<()> {
    let cfg = bench_config(args)?;
    let res = run_benchmark(&cfg)?;
    if !args.quiet {
        print!("{}", render_table(&res));
    }
    if let Some(p) = &args.output {
        let res = if args.timings { res } else { res.without_timings() };
        write_json(p, &res)?;
    }
    Ok(())
}

/// Observed pixels are those whose mask value is nonzero.
pub fn masked_image(image: Array2<f64>, mask: &Array2<f64>) -> Result<MaskedMatrix> {
    if image.dim() != mask.dim() {
        return Err(Error::validation(format!(
            "image is {:?} but mask is {:?}",
            image.dim(),
            mask.dim()
        )));
    }
    MaskedMatrix::new(image, mask.mapv(|v| v != 0.0))
}

pub fn cmd_inpaint(args: &InpaintArgs) -> Result<()> {
    let image = read_pgm(&args.image)?;
    let mask = read_pgm(&args.mask)?;
    let x = masked_image(image, &mask)?;
    let config = FitConfig {
        method: args.method,
        rank: args.rank,
        components: args.components,
        max_iterations: args.max_iters,
    };
    let (factors, summary) = fit_matrix(&x, config, args.seed)?;
    let recon = factors.product().mapv(|v| v.clamp(0.0, 1.0));
    write_pgm(&args.output, &recon)?;
    if let Some(p) = &args.output_csv {
        write_csv_grid(p, &recon)?;
    }
    if let Some(p) = &args.report {
        write_json(p, &summary)?;
    }
    eprintln!("observed-pixel L1 error {:.6}", summary.l1_observed);
    Ok(())
}

pub fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::SynthBench(a) => cmd_synth_bench(a),
        Command::Inpaint(a) => cmd_inpaint(a),
    }
}

/// Parses `args` (program name first) and runs the command; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

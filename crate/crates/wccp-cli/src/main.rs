//! Command-line harness: single solves, penalty-level tuning, synthetic
//! recovery sweeps, and sweep summaries.

// `!(step > 0.0)` rejects NaN; the suggested `step <= 0.0` would accept it.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use wccp::experiment::{
    self, Design, ExperimentConfig, LambdaMode, SummaryRow, TrialRecord,
};
use wccp::init::{spectral_init, InitConfig};
use wccp::io;
use wccp::ndarray::Array1;
use wccp::model::MeasurementSet;
use wccp::penalty::{PenaltyFamily, PenaltySpec};
use wccp::solver::{solve, Algorithm, SolverConfig};
use wccp::tuning::{tune_lambda, TuningConfig};

#[derive(Parser)]
#[command(
    name = "wccp",
    version,
    about = "Sparse recovery from quadratic measurements y_i = b' Z_i b + noise"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one penalized problem from a measurement file.
    Solve(SolveArgs),
    /// Cross-validate the penalty-level rule constant on a measurement file.
    Tune(TuneArgs),
    /// Run a synthetic recovery sweep and write per-trial records as CSV.
    Experiment(ExperimentArgs),
    /// Aggregate a sweep CSV into a per-cell table (and optional SVG curve).
    Summary(SummaryArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Measurement file (JSON or binary).
    #[arg(long)]
    data: PathBuf,
    /// Penalty family: l1, lhalf, scad, mcp, firm, log, exp.
    #[arg(long)]
    penalty: String,
    /// Penalty level.
    #[arg(long)]
    lambda: f64,
    /// Family shape parameter (defaults per family).
    #[arg(long)]
    shape: Option<f64>,
    /// pga or irl1; defaults to the family's designated algorithm.
    #[arg(long)]
    algorithm: Option<String>,
    /// Starting point: "spectral", "zeros", or "file:<path>".
    #[arg(long, default_value = "spectral")]
    init: String,
    /// Spectral screen size (defaults to ceil(sqrt(n))).
    #[arg(long)]
    init_s: Option<usize>,
    /// Seed for the spectral start.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Center responses and rescale operators before solving.
    #[arg(long, value_parser = ["on", "off"], default_value = "off")]
    standardize: String,
    /// Write the result JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TuneArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    penalty: String,
    #[arg(long)]
    shape: Option<f64>,
    /// Comma-separated candidate rule constants.
    #[arg(long, default_value = "0.1,0.5,1,2,5")]
    c_grid: String,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    /// Seed for the fold shuffle.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_parser = ["on", "off"], default_value = "off")]
    standardize: String,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Signal dimension.
    #[arg(long)]
    d: usize,
    /// Signal sparsity.
    #[arg(long)]
    s: usize,
    /// Noise standard deviation.
    #[arg(long)]
    sigma: f64,
    /// Ratio grid: "start:end:step" or a comma-separated list, values in (0,1].
    #[arg(long, default_value = "1.0")]
    ratios: String,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    /// Comma-separated penalty families.
    #[arg(long, default_value = "scad")]
    penalties: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// gaussian-symmetric (dense) or rank-one-gaussian.
    #[arg(long, default_value = "gaussian-symmetric")]
    design: String,
    /// Fixed penalty level; bypasses the data-driven rule.
    #[arg(long)]
    lambda: Option<f64>,
    /// Fixed rule constant; skips cross-validation.
    #[arg(long)]
    rule_c: Option<f64>,
    /// Candidate rule constants for per-cell cross-validation.
    #[arg(long, default_value = "1e-6,1e-5,1e-4,1e-3,1e-2,0.1,1")]
    c_grid: String,
    #[arg(long, default_value_t = 3)]
    folds: usize,
    /// Force one algorithm for every trial (pga or irl1).
    #[arg(long)]
    algorithm: Option<String>,
    /// Reuse the trial-0 signal across each cell's trials.
    #[arg(long)]
    fixed_signal: bool,
    #[arg(long, value_parser = ["on", "off"], default_value = "off")]
    standardize: String,
    /// Output CSV path.
    #[arg(long, default_value = "results.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct SummaryArgs {
    /// Sweep CSV produced by the experiment subcommand.
    #[arg(long)]
    input: PathBuf,
    /// Write the table here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also render a success-rate-vs-ratio SVG.
    #[arg(long)]
    svg: Option<PathBuf>,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Solve(args) => run_solve(args),
        Command::Tune(args) => run_tune(args),
        Command::Experiment(args) => run_sweep(args),
        Command::Summary(args) => run_summary(args),
    }
}

fn parse_family(text: &str) -> Result<PenaltyFamily> {
    Ok(PenaltyFamily::parse(text)?)
}

fn parse_algorithm(text: &str) -> Result<Algorithm> {
    Ok(Algorithm::parse(text)?)
}

fn parse_f64_list(text: &str, what: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().with_context(|| format!("bad {what} entry {t:?}")))
        .collect()
}

/// "start:end:step" (inclusive, step > 0) or a comma-separated list; returns
/// an ascending, deduplicated grid.
fn parse_ratios(text: &str) -> Result<Vec<f64>> {
    let mut ratios = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            bail!("ratio range must look like start:end:step, got {text:?}");
        }
        let start: f64 = parts[0].trim().parse().context("bad range start")?;
        let end: f64 = parts[1].trim().parse().context("bad range end")?;
        let step: f64 = parts[2].trim().parse().context("bad range step")?;
        if !(step > 0.0) || end < start {
            bail!("ratio range needs end >= start and step > 0");
        }
        let count = ((end - start) / step).round() as usize + 1;
        (0..count)
            .map(|k| start + step * k as f64)
            .filter(|r| *r <= end * (1.0 + 1e-9) + 1e-12)
            .map(|r| r.min(end)) // pin accumulated rounding back onto the endpoint
            .collect()
    } else {
        parse_f64_list(text, "ratio")?
    };
    ratios.sort_by(f64::total_cmp);
    ratios.dedup();
    if ratios.is_empty() {
        bail!("empty ratio grid");
    }
    Ok(ratios)
}

fn load_data(path: &Path, standardize: &str) -> Result<MeasurementSet> {
    let mut data = io::load_measurements(path)
        .with_context(|| format!("cannot load measurements from {}", path.display()))?;
    if standardize == "on" {
        let report = data.standardize().context("standardization failed")?;
        log::info!(
            "standardized: response shift {}, operator scale {}",
            report.response_shift,
            report.operator_scale
        );
    }
    Ok(data)
}

fn run_solve(args: SolveArgs) -> Result<()> {
    let data = load_data(&args.data, &args.standardize)?;
    let family = parse_family(&args.penalty)?;
    let spec = PenaltySpec::new(family, args.lambda, args.shape)?;
    let algorithm = match &args.algorithm {
        Some(text) => parse_algorithm(text)?,
        None => Algorithm::designated_for(family),
    };
    let beta0 = resolve_init(&args, &data)?;
    let config = SolverConfig::default();
    let result = solve(&data, &spec, &config, beta0.view(), algorithm)?;

    let json = serde_json::json!({
        "beta": result.beta_hat.to_vec(),
        "objective_trace": result.objective_trace,
        "iterations": result.iterations,
        "termination": result.termination,
        "fp_residual": result.fp_residual,
    });
    let text = serde_json::to_string_pretty(&json)?;
    match &args.out {
        Some(path) => std::fs::write(path, text + "\n")
            .with_context(|| format!("cannot write {}", path.display()))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn resolve_init(args: &SolveArgs, data: &MeasurementSet) -> Result<Array1<f64>> {
    match args.init.as_str() {
        "zeros" => Ok(Array1::zeros(data.d())),
        "spectral" => {
            let cfg = InitConfig {
                support_size_hint: args.init_s,
                rng_seed: args.seed,
                ..InitConfig::default()
            };
            Ok(spectral_init(data, &cfg)?)
        }
        other => {
            let path = other
                .strip_prefix("file:")
                .ok_or_else(|| anyhow!("--init must be spectral, zeros, or file:<path>"))?;
            let values = io::load_vector(Path::new(path))
                .with_context(|| format!("cannot load starting point from {path}"))?;
            if values.len() != data.d() {
                bail!(
                    "starting point has {} coordinates, data has {}",
                    values.len(),
                    data.d()
                );
            }
            Ok(Array1::from_vec(values))
        }
    }
}

fn run_tune(args: TuneArgs) -> Result<()> {
    let data = load_data(&args.data, &args.standardize)?;
    let family = parse_family(&args.penalty)?;
    let template = PenaltySpec::new(family, 0.0, args.shape)?;
    let tuning = TuningConfig {
        c_grid: parse_f64_list(&args.c_grid, "c-grid")?,
        folds: args.folds,
        seed: args.seed,
    };
    let outcome = tune_lambda(&data, &template, &SolverConfig::default(), &tuning)?;
    let json = serde_json::json!({
        "c": outcome.c,
        "lambda": outcome.lambda,
        "scores": outcome.scores,
    });
    println!("{}", serde_json::to_string_pretty(&json)?);
    Ok(())
}

fn run_sweep(args: ExperimentArgs) -> Result<()> {
    let penalties = args
        .penalties
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(parse_family)
        .collect::<Result<Vec<_>>>()?;
    let lambda_mode = match (args.lambda, args.rule_c) {
        (Some(_), Some(_)) => bail!("--lambda and --rule-c are mutually exclusive"),
        (Some(lambda), None) => LambdaMode::Fixed { lambda },
        (None, Some(c)) => LambdaMode::RuleFixedC { c },
        (None, None) => LambdaMode::RuleCv {
            c_grid: parse_f64_list(&args.c_grid, "c-grid")?,
            folds: args.folds,
        },
    };
    let config = ExperimentConfig {
        ratios: parse_ratios(&args.ratios)?,
        trials: args.trials,
        penalties,
        seed: args.seed,
        design: Design::parse(&args.design)
            .ok_or_else(|| anyhow!("unknown design {:?}", args.design))?,
        lambda_mode,
        algorithm_override: args
            .algorithm
            .as_deref()
            .map(parse_algorithm)
            .transpose()?,
        standardize: args.standardize == "on",
        fixed_signal: args.fixed_signal,
        ..ExperimentConfig::new(args.d, args.s, args.sigma)
    };
    let records = experiment::run_experiment(&config, &SolverConfig::default())?;
    experiment::save_csv(&args.out, &records)
        .with_context(|| format!("cannot write {}", args.out.display()))?;
    eprintln!(
        "wrote {} records to {}",
        records.len(),
        args.out.display()
    );
    print_table(&mut std::io::stdout().lock(), &experiment::summarize(&records))?;
    Ok(())
}

fn run_summary(args: SummaryArgs) -> Result<()> {
    let records: Vec<TrialRecord> = experiment::load_csv(&args.input)
        .with_context(|| format!("cannot read {}", args.input.display()))?;
    if records.is_empty() {
        bail!("no records in {}", args.input.display());
    }
    let rows = experiment::summarize(&records);
    match &args.out {
        Some(path) => {
            let mut file = std::fs::File::create(path)
                .with_context(|| format!("cannot write {}", path.display()))?;
            print_table(&mut file, &rows)?;
        }
        None => print_table(&mut std::io::stdout().lock(), &rows)?,
    }
    if let Some(path) = &args.svg {
        experiment::save_svg(path, &rows)
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(())
}

fn print_table(out: &mut dyn Write, rows: &[SummaryRow]) -> Result<()> {
    writeln!(
        out,
        "{:<8} {:>6} {:>7} {:>13} {:>12} {:>12} {:>11}",
        "penalty", "ratio", "trials", "success_rate", "mse", "sd", "mean_iters"
    )?;
    for row in rows {
        let fmt_opt = |v: Option<f64>| match v {
            Some(x) => format!("{x:.6e}"),
            None => "-".to_string(),
        };
        writeln!(
            out,
            "{:<8} {:>6} {:>7} {:>13.3} {:>12} {:>12} {:>11.1}",
            row.penalty,
            row.ratio,
            row.trials,
            row.success_rate,
            fmt_opt(row.mse),
            fmt_opt(row.sd),
            row.mean_iterations
        )?;
    }
    Ok(())
}

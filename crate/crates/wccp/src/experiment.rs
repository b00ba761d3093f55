//! Synthetic recovery benchmark: sparse signals measured through random
//! quadratic forms, swept over sample-size ratios and penalty families.
//!
//! Every trial is reproducible from `(master seed, ratio, trial index)`
//! alone; runs are deterministic byte-for-byte except for the recorded wall
//! times. Solver failures inside a sweep are logged and recorded as failed
//! trials — they never abort the run.

use std::fmt;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use ndarray::Array1;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::init::{spectral_init, InitConfig};
use crate::model::{MeasurementSet, ModelError};
use crate::penalty::{PenaltyError, PenaltyFamily, PenaltySpec};
use crate::solver::{solve, Algorithm, SolverConfig};
use crate::tuning::{
    lambda_rule, relative_error, success_threshold, support_metrics, tune_lambda, TuningConfig,
};

pub const CSV_HEADER: &str = "penalty,ratio,trial,seed,relerr,success,iterations,\
support_precision,support_recall,support_exact,wall_seconds";

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Penalty(#[from] PenaltyError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid experiment configuration: {0}")]
    Config(String),
    #[error("malformed results file at line {line}: {reason}")]
    Csv { line: usize, reason: String },
}

/// Measurement ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Design {
    /// Dense symmetric `Z = (G + G') / 2` with iid standard normal `G`.
    GaussianSymmetric,
    /// Rank-one `Z = z z'` with iid standard normal `z`.
    RankOneGaussian,
}

impl Design {
    pub fn name(self) -> &'static str {
        match self {
            Design::GaussianSymmetric => "gaussian-symmetric",
            Design::RankOneGaussian => "rank-one-gaussian",
        }
    }

    pub fn parse(text: &str) -> Option<Design> {
        match text.to_ascii_lowercase().as_str() {
            "gaussian-symmetric" | "dense" | "gaussian" => Some(Design::GaussianSymmetric),
            "rank-one-gaussian" | "rank-one" | "rank1" => Some(Design::RankOneGaussian),
            _ => None,
        }
    }
}

impl fmt::Display for Design {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How the penalty level is chosen for each trial.
#[derive(Debug, Clone, PartialEq)]
pub enum LambdaMode {
    /// Cross-validate the rule constant once per (penalty, ratio) cell on
    /// that cell's first trial, then apply the rule per trial.
    RuleCv { c_grid: Vec<f64>, folds: usize },
    /// Apply the rule per trial with a fixed constant.
    RuleFixedC { c: f64 },
    /// Bypass the rule entirely.
    Fixed { lambda: f64 },
}

impl Default for LambdaMode {
    fn default() -> Self {
        // Small constants matter: the rule is evaluated at the spectral
        // start, where the residual sum is still of the order of the signal
        // energy, so workable levels sit several decades below c = 1.
        LambdaMode::RuleCv {
            c_grid: vec![1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 0.1, 1.0],
            folds: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub d: usize,
    /// Signal sparsity (number of nonzero coordinates).
    pub s: usize,
    /// Noise standard deviation.
    pub sigma: f64,
    /// Sample-size ratios in (0, 1], ascending; each gives
    /// `n = max(1, round(ratio * d))`.
    pub ratios: Vec<f64>,
    pub trials: usize,
    pub penalties: Vec<PenaltyFamily>,
    pub seed: u64,
    pub design: Design,
    pub lambda_mode: LambdaMode,
    /// Force one algorithm for every trial instead of each penalty's
    /// designated one. Incompatible pairs surface as recorded trial failures.
    pub algorithm_override: Option<Algorithm>,
    /// Center responses and rescale operators before solving. Off by
    /// default: it changes the problem the solver sees, so recovery errors
    /// are no longer measured against the generating signal.
    pub standardize: bool,
    /// Reuse the trial-0 signal for every trial of a cell (fresh
    /// measurements each trial).
    pub fixed_signal: bool,
}

impl ExperimentConfig {
    pub fn new(d: usize, s: usize, sigma: f64) -> Self {
        ExperimentConfig {
            d,
            s,
            sigma,
            ratios: vec![1.0],
            trials: 10,
            penalties: vec![PenaltyFamily::Scad],
            seed: 0,
            design: Design::GaussianSymmetric,
            lambda_mode: LambdaMode::default(),
            algorithm_override: None,
            standardize: false,
            fixed_signal: false,
        }
    }

    fn validate(&self) -> Result<(), ExperimentError> {
        if self.d == 0 {
            return Err(ExperimentError::Config("dimension must be positive".into()));
        }
        if self.s == 0 || self.s > self.d {
            return Err(ExperimentError::Config(format!(
                "sparsity must lie in 1..={}, got {}",
                self.d, self.s
            )));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(ExperimentError::Config(format!(
                "noise level must be nonnegative and finite, got {}",
                self.sigma
            )));
        }
        if self.ratios.is_empty() || self.ratios.iter().any(|r| !(*r > 0.0 && *r <= 1.0)) {
            return Err(ExperimentError::Config(
                "ratios must be a nonempty list in (0, 1]".into(),
            ));
        }
        if self.ratios.windows(2).any(|w| w[1] < w[0]) {
            return Err(ExperimentError::Config(
                "ratios must be sorted ascending".into(),
            ));
        }
        if self.trials == 0 {
            return Err(ExperimentError::Config("need at least one trial".into()));
        }
        if self.penalties.is_empty() {
            return Err(ExperimentError::Config("need at least one penalty".into()));
        }
        Ok(())
    }
}

/// One solved trial; `relerr` is `NaN` when the solver errored out.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub penalty: String,
    pub ratio: f64,
    pub trial: usize,
    pub seed: u64,
    pub relerr: f64,
    pub success: bool,
    pub iterations: usize,
    pub support_precision: f64,
    pub support_recall: f64,
    pub support_exact: bool,
    pub wall_seconds: f64,
}

fn splitmix64_next(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic per-trial seed from the master seed, the exact bits of the
/// ratio, and the trial index.
pub fn trial_seed(master: u64, ratio: f64, trial: usize) -> u64 {
    let mut state = master;
    let _ = splitmix64_next(&mut state);
    state ^= ratio.to_bits();
    let _ = splitmix64_next(&mut state);
    state ^= trial as u64;
    splitmix64_next(&mut state)
}

/// Decorrelated sub-seed for one of the named random streams of a trial.
fn stream_seed(base: u64, stream: u64) -> u64 {
    let mut state = base ^ stream.wrapping_mul(0xA076_1D64_78BD_642F);
    splitmix64_next(&mut state)
}

fn draw_signal(d: usize, s: usize, rng: &mut ChaCha8Rng) -> Array1<f64> {
    let mut beta = Array1::zeros(d);
    let mut idx: Vec<usize> = (0..d).collect();
    idx.shuffle(rng);
    for &j in &idx[..s] {
        beta[j] = rng.sample::<f64, _>(StandardNormal);
    }
    beta
}

/// Draw one synthetic instance. The signal stream is keyed to trial 0 when
/// `fixed_signal` is set; the measurement stream is always per-trial.
pub fn generate_synthetic(
    config: &ExperimentConfig,
    ratio: f64,
    trial: usize,
) -> Result<(MeasurementSet, Array1<f64>), ExperimentError> {
    config.validate()?;
    let d = config.d;
    let n = ((ratio * d as f64).round() as usize).max(1);
    let signal_trial = if config.fixed_signal { 0 } else { trial };
    let mut sig_rng =
        ChaCha8Rng::seed_from_u64(stream_seed(trial_seed(config.seed, ratio, signal_trial), 1));
    let mut meas_rng =
        ChaCha8Rng::seed_from_u64(stream_seed(trial_seed(config.seed, ratio, trial), 2));

    let beta = draw_signal(d, config.s, &mut sig_rng);
    let mut y = Vec::with_capacity(n);
    let data = match config.design {
        Design::RankOneGaussian => {
            let mut factors = Vec::with_capacity(n * d);
            for _ in 0..n {
                let z: Vec<f64> = (0..d).map(|_| meas_rng.sample(StandardNormal)).collect();
                let t: f64 = z.iter().zip(beta.iter()).map(|(a, b)| a * b).sum();
                let noise: f64 = meas_rng.sample(StandardNormal);
                y.push(t * t + config.sigma * noise);
                factors.extend(z);
            }
            MeasurementSet::from_rank_one(d, y, factors)?
        }
        Design::GaussianSymmetric => {
            let mut entries = Vec::with_capacity(n * d * d);
            let mut mat = vec![0.0_f64; d * d];
            for _ in 0..n {
                for v in mat.iter_mut() {
                    *v = meas_rng.sample(StandardNormal);
                }
                // Symmetrize in place: m <- (g + g') / 2.
                for a in 0..d {
                    for b in (a + 1)..d {
                        let avg = 0.5 * (mat[a * d + b] + mat[b * d + a]);
                        mat[a * d + b] = avg;
                        mat[b * d + a] = avg;
                    }
                }
                let mut quad = 0.0;
                for a in 0..d {
                    let mut row = 0.0;
                    for b in 0..d {
                        row += mat[a * d + b] * beta[b];
                    }
                    quad += beta[a] * row;
                }
                let noise: f64 = meas_rng.sample(StandardNormal);
                y.push(quad + config.sigma * noise);
                entries.extend_from_slice(&mat);
            }
            MeasurementSet::from_dense(d, y, entries)?
        }
    };
    Ok((data, beta))
}

/// Run the full sweep: every (penalty, ratio, trial) cell solved with the
/// penalty's designated algorithm from a screened spectral start.
pub fn run_experiment(
    config: &ExperimentConfig,
    solver: &SolverConfig,
) -> Result<Vec<TrialRecord>, ExperimentError> {
    config.validate()?;
    let threshold = success_threshold(config.sigma);
    let mut records = Vec::with_capacity(config.penalties.len() * config.ratios.len() * config.trials);
    for &family in &config.penalties {
        for &ratio in &config.ratios {
            let cell_c = resolve_rule_constant(config, solver, family, ratio);
            for trial in 0..config.trials {
                records.push(run_trial(
                    config, solver, family, ratio, trial, cell_c, threshold,
                ));
            }
        }
    }
    Ok(records)
}

/// The rule constant for a cell: cross-validated on the cell's first trial
/// when requested. CV failures (e.g. too few samples to fold) fall back to
/// `c = 1` with a warning rather than killing the sweep.
fn resolve_rule_constant(
    config: &ExperimentConfig,
    solver: &SolverConfig,
    family: PenaltyFamily,
    ratio: f64,
) -> Option<f64> {
    match &config.lambda_mode {
        LambdaMode::Fixed { .. } => None,
        LambdaMode::RuleFixedC { c } => Some(*c),
        LambdaMode::RuleCv { c_grid, folds } => {
            let tuning = TuningConfig {
                c_grid: c_grid.clone(),
                folds: *folds,
                seed: stream_seed(trial_seed(config.seed, ratio, 0), 4),
            };
            let template = match PenaltySpec::new(family, 0.0, None) {
                Ok(t) => t,
                Err(e) => {
                    log::warn!("{family} template rejected ({e}); using c = 1");
                    return Some(1.0);
                }
            };
            let outcome = generate_synthetic(config, ratio, 0)
                .map_err(|e| e.to_string())
                .and_then(|(mut data, _)| {
                    if config.standardize {
                        data.standardize().map_err(|e| e.to_string())?;
                    }
                    tune_lambda(&data, &template, solver, &tuning).map_err(|e| e.to_string())
                });
            match outcome {
                Ok(cv) => {
                    log::info!(
                        "{family} at ratio {ratio}: cross-validation picked c = {} (lambda = {:.3e})",
                        cv.c,
                        cv.lambda
                    );
                    Some(cv.c)
                }
                Err(e) => {
                    log::warn!(
                        "cross-validation failed for {family} at ratio {ratio} ({e}); using c = 1"
                    );
                    Some(1.0)
                }
            }
        }
    }
}

fn run_trial(
    config: &ExperimentConfig,
    solver: &SolverConfig,
    family: PenaltyFamily,
    ratio: f64,
    trial: usize,
    cell_c: Option<f64>,
    threshold: f64,
) -> TrialRecord {
    let seed = trial_seed(config.seed, ratio, trial);
    let start = Instant::now();
    let mut record = TrialRecord {
        penalty: family.name().to_string(),
        ratio,
        trial,
        seed,
        relerr: f64::NAN,
        success: false,
        iterations: 0,
        support_precision: 0.0,
        support_recall: 0.0,
        support_exact: false,
        wall_seconds: 0.0,
    };
    let outcome = (|| -> Result<(), String> {
        let (mut data, beta_star) =
            generate_synthetic(config, ratio, trial).map_err(|e| e.to_string())?;
        if config.standardize {
            data.standardize().map_err(|e| e.to_string())?;
        }
        let init_cfg = InitConfig {
            support_size_hint: Some(config.s),
            rng_seed: stream_seed(seed, 3),
            ..InitConfig::default()
        };
        let beta0 = spectral_init(&data, &init_cfg).map_err(|e| e.to_string())?;
        let lambda = match (&config.lambda_mode, cell_c) {
            (LambdaMode::Fixed { lambda }, _) => *lambda,
            (_, Some(c)) => lambda_rule(&data, beta0.view(), c).map_err(|e| e.to_string())?,
            (_, None) => unreachable!("rule modes always carry a constant"),
        };
        let spec = PenaltySpec::new(family, lambda, None).map_err(|e| e.to_string())?;
        let algorithm = config
            .algorithm_override
            .unwrap_or_else(|| Algorithm::designated_for(family));
        let fit =
            solve(&data, &spec, solver, beta0.view(), algorithm).map_err(|e| e.to_string())?;
        record.iterations = fit.iterations;
        record.relerr =
            relative_error(fit.beta_hat.view(), beta_star.view()).map_err(|e| e.to_string())?;
        record.success = record.relerr < threshold;
        let support = support_metrics(fit.beta_hat.view(), beta_star.view())
            .map_err(|e| e.to_string())?;
        record.support_precision = support.precision;
        record.support_recall = support.recall;
        record.support_exact = support.exact;
        Ok(())
    })();
    if let Err(e) = outcome {
        log::warn!("trial failed ({family}, ratio {ratio}, trial {trial}): {e}");
    }
    record.wall_seconds = start.elapsed().as_secs_f64();
    record
}

/// Per-cell aggregate of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub penalty: String,
    pub ratio: f64,
    pub trials: usize,
    pub success_rate: f64,
    /// Mean squared relative error over *successful* trials; absent when the
    /// cell had none.
    pub mse: Option<f64>,
    /// Population standard deviation of the squared relative errors over
    /// successful trials (paired with `mse`).
    pub sd: Option<f64>,
    /// Mean iteration count over all trials of the cell.
    pub mean_iterations: f64,
}

/// Aggregate records by (penalty, ratio), sorted by penalty then ratio.
pub fn summarize(records: &[TrialRecord]) -> Vec<SummaryRow> {
    let mut keys: Vec<(String, f64)> = Vec::new();
    for r in records {
        if !keys.iter().any(|(p, q)| *p == r.penalty && *q == r.ratio) {
            keys.push((r.penalty.clone(), r.ratio));
        }
    }
    keys.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    keys.into_iter()
        .map(|(penalty, ratio)| {
            let cell: Vec<&TrialRecord> = records
                .iter()
                .filter(|r| r.penalty == penalty && r.ratio == ratio)
                .collect();
            let trials = cell.len();
            let hits: Vec<f64> = cell
                .iter()
                .filter(|r| r.success)
                .map(|r| r.relerr * r.relerr)
                .collect();
            let success_rate = hits.len() as f64 / trials as f64;
            let (mse, sd) = if hits.is_empty() {
                (None, None)
            } else {
                let mean = hits.iter().sum::<f64>() / hits.len() as f64;
                let var =
                    hits.iter().map(|h| (h - mean) * (h - mean)).sum::<f64>() / hits.len() as f64;
                (Some(mean), Some(var.sqrt()))
            };
            let mean_iterations =
                cell.iter().map(|r| r.iterations as f64).sum::<f64>() / trials as f64;
            SummaryRow {
                penalty,
                ratio,
                trials,
                success_rate,
                mse,
                sd,
                mean_iterations,
            }
        })
        .collect()
}

/// Write records in the fixed CSV schema (stable across runs except for the
/// wall-time column).
pub fn write_csv<W: Write>(mut out: W, records: &[TrialRecord]) -> Result<(), ExperimentError> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{:.6}",
            r.penalty,
            r.ratio,
            r.trial,
            r.seed,
            r.relerr,
            r.success,
            r.iterations,
            r.support_precision,
            r.support_recall,
            r.support_exact,
            r.wall_seconds
        )?;
    }
    Ok(())
}

pub fn save_csv(path: &Path, records: &[TrialRecord]) -> Result<(), ExperimentError> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    write_csv(&mut w, records)?;
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<TrialRecord>, ExperimentError> {
    let reader = BufReader::new(input);
    let mut lines = reader.lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line?,
        None => {
            return Err(ExperimentError::Csv {
                line: 1,
                reason: "empty file".into(),
            })
        }
    };
    if header.trim() != CSV_HEADER {
        return Err(ExperimentError::Csv {
            line: 1,
            reason: format!("unexpected header {header:?}"),
        });
    }
    let mut records = Vec::new();
    for (idx, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 11 {
            return Err(ExperimentError::Csv {
                line: idx + 1,
                reason: format!("expected 11 fields, found {}", fields.len()),
            });
        }
        let bad = |what: &str| ExperimentError::Csv {
            line: idx + 1,
            reason: format!("unparsable {what}"),
        };
        records.push(TrialRecord {
            penalty: fields[0].to_string(),
            ratio: fields[1].parse().map_err(|_| bad("ratio"))?,
            trial: fields[2].parse().map_err(|_| bad("trial"))?,
            seed: fields[3].parse().map_err(|_| bad("seed"))?,
            relerr: fields[4].parse().map_err(|_| bad("relerr"))?,
            success: fields[5].parse().map_err(|_| bad("success"))?,
            iterations: fields[6].parse().map_err(|_| bad("iterations"))?,
            support_precision: fields[7].parse().map_err(|_| bad("support_precision"))?,
            support_recall: fields[8].parse().map_err(|_| bad("support_recall"))?,
            support_exact: fields[9].parse().map_err(|_| bad("support_exact"))?,
            wall_seconds: fields[10].parse().map_err(|_| bad("wall_seconds"))?,
        });
    }
    Ok(records)
}

pub fn load_csv(path: &Path) -> Result<Vec<TrialRecord>, ExperimentError> {
    read_csv(std::fs::File::open(path)?)
}

const SVG_COLORS: &[&str] = &["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Success-rate-vs-ratio curves, one polyline per penalty, as a small
/// self-contained SVG.
pub fn write_svg<W: Write>(mut out: W, summary: &[SummaryRow]) -> Result<(), ExperimentError> {
    let (width, height) = (640.0, 420.0);
    let (left, right, top, bottom) = (60.0, 20.0, 30.0, 50.0);
    let plot_w = width - left - right;
    let plot_h = height - top - bottom;

    let mut ratios: Vec<f64> = summary.iter().map(|r| r.ratio).collect();
    ratios.sort_by(f64::total_cmp);
    ratios.dedup();
    let (rmin, rmax) = match (ratios.first(), ratios.last()) {
        (Some(&a), Some(&b)) if b > a => (a, b),
        (Some(&a), _) => (a - 0.5, a + 0.5),
        _ => (0.0, 1.0),
    };
    let x = |ratio: f64| left + (ratio - rmin) / (rmax - rmin) * plot_w;
    let y = |rate: f64| top + (1.0 - rate) * plot_h;

    writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
viewBox=\"0 0 {width} {height}\">"
    )?;
    writeln!(out, "<rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>")?;
    // Axes and horizontal guides.
    for tick in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let yy = y(tick);
        writeln!(
            out,
            "<line x1=\"{left}\" y1=\"{yy}\" x2=\"{:.1}\" y2=\"{yy}\" stroke=\"#dddddd\"/>",
            left + plot_w
        )?;
        writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"end\">{tick}</text>",
            left - 6.0,
            yy + 4.0
        )?;
    }
    for &ratio in &ratios {
        let xx = x(ratio);
        writeln!(
            out,
            "<text x=\"{xx:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"middle\">{ratio}</text>",
            top + plot_h + 16.0
        )?;
    }
    writeln!(
        out,
        "<line x1=\"{left}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"black\"/>",
        top + plot_h,
        left + plot_w,
        top + plot_h
    )?;
    writeln!(
        out,
        "<line x1=\"{left}\" y1=\"{top}\" x2=\"{left}\" y2=\"{:.1}\" stroke=\"black\"/>",
        top + plot_h
    )?;
    writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"middle\">n / d</text>",
        left + plot_w / 2.0,
        height - 12.0
    )?;
    writeln!(
        out,
        "<text x=\"14\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"middle\" \
transform=\"rotate(-90 14 {:.1})\">success rate</text>",
        top + plot_h / 2.0,
        top + plot_h / 2.0
    )?;

    let mut penalties: Vec<&str> = summary.iter().map(|r| r.penalty.as_str()).collect();
    penalties.sort_unstable();
    penalties.dedup();
    for (pi, penalty) in penalties.iter().enumerate() {
        let color = SVG_COLORS[pi % SVG_COLORS.len()];
        let mut points: Vec<(f64, f64)> = summary
            .iter()
            .filter(|r| r.penalty == *penalty)
            .map(|r| (r.ratio, r.success_rate))
            .collect();
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        let path: Vec<String> = points
            .iter()
            .map(|&(r, s)| format!("{:.1},{:.1}", x(r), y(s)))
            .collect();
        writeln!(
            out,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>",
            path.join(" ")
        )?;
        for &(r, s) in &points {
            writeln!(
                out,
                "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"3\" fill=\"{color}\"/>",
                x(r),
                y(s)
            )?;
        }
        writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" fill=\"{color}\">{penalty}</text>",
            left + plot_w - 70.0,
            top + 16.0 + 16.0 * pi as f64
        )?;
    }
    writeln!(out, "</svg>")?;
    Ok(())
}

pub fn save_svg(path: &Path, summary: &[SummaryRow]) -> Result<(), ExperimentError> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    write_svg(&mut w, summary)?;
    w.flush()?;
    Ok(())
}

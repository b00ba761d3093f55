//! First-order solvers for the penalized quadratic-measurement objective
//! `F(b) = L(b) + sum_j p(|b_j|)`.
//!
//! Both solvers share the same outer loop. At iterate `b^k` with gradient
//! `g^k = grad L(b^k)` (computed once per iteration and reused across all
//! backtracks), a candidate for step `tau` is
//!
//! * proximal gradient ([`solve_pga`]): `prox_{tau p}(b^k - tau g^k)`,
//! * reweighted l1 ([`solve_irl1`]): `S(b^k - tau g^k, tau w^k)`, the soft
//!   threshold with per-coordinate weights `w^k_j = max(p'(|b^k_j|), floor)`
//!   for nonzero coordinates and the origin slope `lambda * rho` for zero
//!   ones (weights are frozen for the whole iteration).
//!
//! The step is chosen by Armijo backtracking: `tau = gamma1 * gamma0^j` for
//! the smallest `j >= 0` with
//!
//! ```text
//! F(b^k) - F(candidate) >= delta * ||candidate - b^k||^2
//! ```
//!
//! (for PGA, steps with `tau * mu >= 0.999` are skipped so the prox stays
//! single-valued). Iteration stops when the accepted move satisfies
//! `||b^{k+1} - b^k|| < tol * max(1, ||b^k||)`, when the iteration cap is
//! reached, or when no step within the backtracking budget achieves the
//! descent condition. The recorded objective trace is nonincreasing by
//! construction.

use ndarray::{Array1, ArrayView1};
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{self, LinalgError};
use crate::model::{MeasurementSet, ModelError};
use crate::penalty::{soft_threshold, PenaltyError, PenaltyFamily, PenaltySpec};

/// Relative magnitude below which a coordinate counts as zero: the support of
/// `b` is `{j : |b_j| > SUPPORT_RTOL * max(1, max_abs(b))}`.
pub const SUPPORT_RTOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Penalty(#[from] PenaltyError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("{family} cannot be solved with {algorithm}: {reason}")]
    UnsupportedFamily {
        family: PenaltyFamily,
        algorithm: Algorithm,
        reason: &'static str,
    },
    #[error("initial point must be finite and of dimension {expected}")]
    BadInitialPoint { expected: usize },
    #[error("point has empty support at threshold {threshold}; certification does not apply")]
    EmptySupport { threshold: f64 },
}

/// Which outer iteration to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Pga,
    Irl1,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Pga => "pga",
            Algorithm::Irl1 => "irl1",
        }
    }

    pub fn parse(name: &str) -> Result<Self, SolverError> {
        match name.to_ascii_lowercase().as_str() {
            "pga" => Ok(Algorithm::Pga),
            "irl1" => Ok(Algorithm::Irl1),
            other => Err(SolverError::Config(format!(
                "unknown algorithm '{other}' (expected 'pga' or 'irl1')"
            ))),
        }
    }

    /// The algorithm used when the caller does not pick one: proximal
    /// gradient wherever a closed-form prox exists, reweighted l1 otherwise.
    pub fn designated_for(family: PenaltyFamily) -> Algorithm {
        if family.has_prox() {
            Algorithm::Pga
        } else {
            Algorithm::Irl1
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Tuning knobs for both solvers; [`SolverConfig::default`] matches the
/// settings used throughout the experiment harness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Iteration cap `T` (maximum number of accepted updates).
    pub max_iters: usize,
    /// Relative stop tolerance on the accepted move.
    pub tol: f64,
    /// Floor for reweighted-l1 weights at active coordinates.
    pub weight_floor: f64,
    /// Armijo sufficient-decrease constant `delta`.
    pub armijo_delta: f64,
    /// Backtracking shrink factor `gamma0` in (0, 1).
    pub backtrack: f64,
    /// First trial step `gamma1`.
    pub initial_step: f64,
    /// Backtracking budget per iteration.
    pub max_backtracks: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iters: 5000,
            tol: 1e-6,
            weight_floor: 1e-8,
            armijo_delta: 1e-4,
            backtrack: 0.5,
            initial_step: 1.0,
            max_backtracks: 60,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |msg: String| Err(SolverError::Config(msg));
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1".into());
        }
        if !(self.tol > 0.0) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if !(self.weight_floor > 0.0) {
            return bad(format!(
                "weight_floor must be positive, got {}",
                self.weight_floor
            ));
        }
        if !(self.armijo_delta > 0.0) {
            return bad(format!(
                "armijo_delta must be positive, got {}",
                self.armijo_delta
            ));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return bad(format!(
                "backtrack factor must lie in (0, 1), got {}",
                self.backtrack
            ));
        }
        if !(self.initial_step > 0.0 && self.initial_step.is_finite()) {
            return bad(format!(
                "initial_step must be positive and finite, got {}",
                self.initial_step
            ));
        }
        if self.max_backtracks == 0 {
            return bad("max_backtracks must be at least 1".into());
        }
        Ok(())
    }
}

/// Why the solver stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// The accepted move fell below `tol * max(1, ||b^k||)`.
    ToleranceMet,
    /// The iteration cap was reached first.
    IterCap,
    /// No step in the backtracking budget achieved sufficient decrease.
    BacktrackFail,
}

/// Solver output. `objective_trace[k]` is `F(b^k)` including the initial
/// point, so its length is `iterations + 1`; `step_trace` and `move_trace`
/// record the accepted `tau_k` and `||b^{k+1} - b^k||` per update.
#[derive(Debug, Clone)]
pub struct SolverResult {
    pub beta_hat: Array1<f64>,
    pub objective_trace: Vec<f64>,
    pub step_trace: Vec<f64>,
    pub move_trace: Vec<f64>,
    pub iterations: usize,
    pub termination: Termination,
    /// Distance of the final point from its own updated image, evaluated at
    /// the last accepted step (capped so the prox stays valid).
    pub fp_residual: f64,
}

impl SolverResult {
    /// Final objective value.
    pub fn objective(&self) -> f64 {
        *self
            .objective_trace
            .last()
            .expect("trace always holds the initial objective")
    }

    /// Indices of coordinates over the relative support threshold.
    pub fn support(&self) -> Vec<usize> {
        support_indices(self.beta_hat.view())
    }
}

/// Proximal gradient iteration (requires a closed-form prox; every family
/// except Exp).
pub fn solve_pga(
    data: &MeasurementSet,
    spec: &PenaltySpec,
    config: &SolverConfig,
    beta0: ArrayView1<'_, f64>,
) -> Result<SolverResult, SolverError> {
    if !spec.family().has_prox() {
        return Err(SolverError::UnsupportedFamily {
            family: spec.family(),
            algorithm: Algorithm::Pga,
            reason: "no closed-form prox; use the reweighted-l1 solver",
        });
    }
    run(data, spec, config, beta0, Algorithm::Pga)
}

/// Reweighted-l1 iteration (requires a finite origin slope; every family
/// except the l1/2 baseline).
pub fn solve_irl1(
    data: &MeasurementSet,
    spec: &PenaltySpec,
    config: &SolverConfig,
    beta0: ArrayView1<'_, f64>,
) -> Result<SolverResult, SolverError> {
    if !spec.family().has_weights() {
        return Err(SolverError::UnsupportedFamily {
            family: spec.family(),
            algorithm: Algorithm::Irl1,
            reason: "unbounded slope at the origin; use the proximal solver",
        });
    }
    run(data, spec, config, beta0, Algorithm::Irl1)
}

/// Dispatches to [`solve_pga`] or [`solve_irl1`].
pub fn solve(
    data: &MeasurementSet,
    spec: &PenaltySpec,
    config: &SolverConfig,
    beta0: ArrayView1<'_, f64>,
    algorithm: Algorithm,
) -> Result<SolverResult, SolverError> {
    match algorithm {
        Algorithm::Pga => solve_pga(data, spec, config, beta0),
        Algorithm::Irl1 => solve_irl1(data, spec, config, beta0),
    }
}

fn run(
    data: &MeasurementSet,
    spec: &PenaltySpec,
    config: &SolverConfig,
    beta0: ArrayView1<'_, f64>,
    algorithm: Algorithm,
) -> Result<SolverResult, SolverError> {
    config.validate()?;
    if beta0.len() != data.d() || beta0.iter().any(|v| !v.is_finite()) {
        return Err(SolverError::BadInitialPoint { expected: data.d() });
    }
    // PGA skips trial steps whose tau * mu would make the prox set-valued.
    let mu = match algorithm {
        // l1/2 has no modulus but its prox is defined for every step.
        Algorithm::Pga => spec.mu().unwrap_or(0.0),
        Algorithm::Irl1 => 0.0, // weighted soft threshold valid for every step
    };

    let mut beta = beta0.to_owned();
    let mut f_curr = data.loss(beta.view())? + spec.total(beta.view());
    let mut objective_trace = vec![f_curr];
    let mut step_trace = Vec::new();
    let mut move_trace = Vec::new();
    let mut termination = Termination::IterCap;
    let mut iterations = 0;
    let mut last_tau = config.initial_step;

    while iterations < config.max_iters {
        let grad = data.gradient(beta.view())?;
        let weights = match algorithm {
            Algorithm::Irl1 => Some(spec.weights(beta.view(), config.weight_floor)?),
            Algorithm::Pga => None,
        };

        let mut accepted: Option<(f64, Array1<f64>, f64, f64)> = None;
        let mut tau = config.initial_step;
        for _ in 0..=config.max_backtracks {
            if mu == 0.0 || tau * mu < 0.999 {
                let candidate = match &weights {
                    Some(w) => Array1::from_shape_fn(beta.len(), |j| {
                        soft_threshold(beta[j] - tau * grad[j], tau * w[j])
                    }),
                    None => Array1::from_shape_fn(beta.len(), |j| {
                        spec.prox_at(beta[j] - tau * grad[j], tau)
                    }),
                };
                let f_cand = data.loss(candidate.view())? + spec.total(candidate.view());
                let move_sq: f64 = candidate
                    .iter()
                    .zip(beta.iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                if f_curr - f_cand >= config.armijo_delta * move_sq {
                    accepted = Some((tau, candidate, f_cand, move_sq));
                    break;
                }
            }
            tau *= config.backtrack;
        }

        let Some((tau_k, next, f_next, move_sq)) = accepted else {
            termination = Termination::BacktrackFail;
            break;
        };

        let move_norm = move_sq.sqrt();
        let prev_norm = norm2(beta.view());
        beta = next;
        f_curr = f_next;
        last_tau = tau_k;
        objective_trace.push(f_curr);
        step_trace.push(tau_k);
        move_trace.push(move_norm);
        iterations += 1;

        if move_norm < config.tol * prev_norm.max(1.0) {
            termination = Termination::ToleranceMet;
            break;
        }
    }

    let fp_residual = final_residual(data, spec, config, beta.view(), last_tau, algorithm)?;
    Ok(SolverResult {
        beta_hat: beta,
        objective_trace,
        step_trace,
        move_trace,
        iterations,
        termination,
        fp_residual,
    })
}

/// Residual of the fixed-point characterization at `beta` for step `tau`:
/// `||beta - prox_{tau p}(beta - tau grad L(beta))||` for families with a
/// prox (requires `tau * mu < 1`), and the weighted-soft-threshold image
/// `||beta - S(beta - tau grad L(beta), tau w(beta))||` for Exp, with weights
/// floored at `weight_floor`. Zero exactly at first-order stationary points.
pub fn fixed_point_residual(
    data: &MeasurementSet,
    spec: &PenaltySpec,
    beta: ArrayView1<'_, f64>,
    tau: f64,
    weight_floor: f64,
) -> Result<f64, SolverError> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(SolverError::Config(format!(
            "fixed-point step must be positive and finite, got {tau}"
        )));
    }
    let grad = data.gradient(beta)?;
    if spec.family().has_prox() {
        if let Ok(mu) = spec.mu() {
            if tau * mu >= 1.0 {
                return Err(SolverError::Penalty(PenaltyError::StepTooLarge(tau * mu)));
            }
        }
        let mut sq = 0.0;
        for j in 0..beta.len() {
            let img = spec.prox_at(beta[j] - tau * grad[j], tau);
            sq += (beta[j] - img) * (beta[j] - img);
        }
        Ok(sq.sqrt())
    } else {
        let w = spec.weights(beta, weight_floor)?;
        let mut sq = 0.0;
        for j in 0..beta.len() {
            let img = soft_threshold(beta[j] - tau * grad[j], tau * w[j]);
            sq += (beta[j] - img) * (beta[j] - img);
        }
        Ok(sq.sqrt())
    }
}

fn final_residual(
    data: &MeasurementSet,
    spec: &PenaltySpec,
    config: &SolverConfig,
    beta: ArrayView1<'_, f64>,
    last_tau: f64,
    algorithm: Algorithm,
) -> Result<f64, SolverError> {
    // IRL1 may accept steps with tau * mu >= 1; cap the diagnostic step so the
    // prox-form residual stays well defined.
    let tau = match spec.mu() {
        Ok(mu) if mu > 0.0 => last_tau.min(0.9 / mu),
        _ => last_tau,
    };
    let _ = algorithm;
    fixed_point_residual(data, spec, beta, tau, config.weight_floor)
}

/// Restricted "oracle" solve: fixes the support, solves the lower-dimensional
/// problem over those coordinates only (spectral start on the restricted
/// data), and embeds the solution back with exact zeros elsewhere. With
/// `support` equal to all coordinates this is identical to the designated
/// solver started from [`crate::init::default_init`].
///
/// The returned traces and `fp_residual` refer to the restricted problem.
pub fn oracle_solve(
    data: &MeasurementSet,
    spec: &PenaltySpec,
    config: &SolverConfig,
    support: &[usize],
) -> Result<SolverResult, SolverError> {
    let mut seen = vec![false; data.d()];
    for &j in support {
        if j >= data.d() {
            return Err(SolverError::Model(ModelError::IndexOutOfRange {
                index: j,
                d: data.d(),
            }));
        }
        if seen[j] {
            return Err(SolverError::Config(format!(
                "duplicate support index {j}"
            )));
        }
        seen[j] = true;
    }
    if support.is_empty() {
        return Err(SolverError::Config("oracle support must be nonempty".into()));
    }
    let restricted = data.restrict_coordinates(support)?;
    let beta0 = crate::init::default_init(&restricted).map_err(|e| match e {
        crate::init::InitError::Model(m) => SolverError::Model(m),
        other => SolverError::Config(other.to_string()),
    })?;
    let algorithm = Algorithm::designated_for(spec.family());
    let sub = solve(&restricted, spec, config, beta0.view(), algorithm)?;

    let mut embedded = Array1::zeros(data.d());
    for (k, &j) in support.iter().enumerate() {
        embedded[j] = sub.beta_hat[k];
    }
    Ok(SolverResult {
        beta_hat: embedded,
        ..sub
    })
}

/// Second-order certificate report from [`local_min_check`].
#[derive(Debug, Clone)]
pub struct LocalMinReport {
    /// Whether the restricted curvature is strictly positive.
    pub certified: bool,
    /// Smallest eigenvalue of the penalized restricted Hessian.
    pub min_curvature: f64,
    /// Coordinates the certificate was evaluated on.
    pub support: Vec<usize>,
}

/// Checks the second-order condition for a strict local minimum restricted to
/// the support of `beta`: the matrix
///
/// ```text
/// H = [hess L(beta)]_{S x S} + diag( inf p''(|beta_j|) : j in S )
/// ```
///
/// must be positive definite, where the penalty term takes the most negative
/// second derivative adjacent to `|beta_j|` (never below `-mu`). With a zero
/// penalty level and an empty support the check falls back to the full
/// unrestricted Hessian at `beta`; with a positive level an empty support is
/// reported as inapplicable rather than certified.
pub fn local_min_check(
    data: &MeasurementSet,
    spec: &PenaltySpec,
    beta: ArrayView1<'_, f64>,
) -> Result<LocalMinReport, SolverError> {
    let support = support_indices(beta);
    let threshold = support_threshold(beta);
    let support = if support.is_empty() {
        if spec.lambda() > 0.0 {
            return Err(SolverError::EmptySupport { threshold });
        }
        (0..data.d()).collect()
    } else {
        support
    };
    let mut h = data.hessian_restricted(beta, &support)?;
    for (k, &j) in support.iter().enumerate() {
        let t = beta[j].abs();
        if t > 0.0 {
            h[[k, k]] += spec.curvature_infimum(t)?;
        }
        // |beta_j| == 0 only on the zero-penalty fallback, where the penalty
        // contributes nothing.
    }
    let min_curvature = linalg::smallest_eigenvalue(&h)?;
    Ok(LocalMinReport {
        certified: min_curvature > 0.0,
        min_curvature,
        support,
    })
}

/// Support of `b` at the crate-wide relative threshold
/// `SUPPORT_RTOL * max(1, max_abs(b))`.
pub fn support_indices(beta: ArrayView1<'_, f64>) -> Vec<usize> {
    let threshold = support_threshold(beta);
    beta.iter()
        .enumerate()
        .filter_map(|(j, &v)| (v.abs() > threshold).then_some(j))
        .collect()
}

/// The absolute threshold used by [`support_indices`].
pub fn support_threshold(beta: ArrayView1<'_, f64>) -> f64 {
    let max_abs = beta.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    SUPPORT_RTOL * max_abs.max(1.0)
}

fn norm2(v: ArrayView1<'_, f64>) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

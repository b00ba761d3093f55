//! Sparse spectral initialization.
//!
//! The surrogate matrix `D = (1/n) sum_i y_i Z_i` concentrates (for the
//! Gaussian ensembles used here) around a matrix whose leading eigenvector is
//! the normalized signal, and whose diagonal is largest on the signal
//! support. The initializer exploits both facts:
//!
//! 1. score coordinates by `|diag(D)|` and keep the top `s_hat` of them
//!    (defaults to `ceil(sqrt(n))` when no hint is given; ties broken toward
//!    the lower index),
//! 2. run power iteration on the `s_hat x s_hat` principal submatrix of `D`
//!    for the leading direction `v`,
//! 3. scale by the least-squares fit of the measured responses:
//!    `t^2 = max(0, sum_i q_i y_i / sum_i q_i^2)` with `q_i = v' Z_i v`,
//! 4. embed `t * v` into `R^d` with zeros off the screened set.
//!
//! The sign of the result is arbitrary (the model only identifies the signal
//! up to sign). A zero surrogate or a nonpositive scale fit yields the zero
//! vector, with a log warning.

use ndarray::{Array1, Array2};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{MeasurementSet, ModelError, Storage};

#[derive(Debug, Error)]
pub enum InitError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid initializer configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitConfig {
    /// Screened support size `s_hat`; `None` selects `ceil(sqrt(n))`. Values
    /// above `d` are clamped to `d`.
    pub support_size_hint: Option<usize>,
    /// Power iteration budget.
    pub power_iters: usize,
    /// Stop power iteration once successive directions differ by less than
    /// this angle (radians).
    pub angle_tol: f64,
    /// Seed for the power iteration's random starting direction.
    pub rng_seed: u64,
}

impl Default for InitConfig {
    fn default() -> Self {
        InitConfig {
            support_size_hint: None,
            power_iters: 100,
            angle_tol: 1e-8,
            rng_seed: 0,
        }
    }
}

impl InitConfig {
    fn validate(&self) -> Result<(), InitError> {
        if self.support_size_hint == Some(0) {
            return Err(InitError::Config(
                "support size hint must be at least 1".into(),
            ));
        }
        if self.power_iters == 0 {
            return Err(InitError::Config("power_iters must be at least 1".into()));
        }
        if !(self.angle_tol > 0.0) {
            return Err(InitError::Config(format!(
                "angle_tol must be positive, got {}",
                self.angle_tol
            )));
        }
        Ok(())
    }
}

/// Spectral starting point for the solvers; see the module docs.
pub fn spectral_init(data: &MeasurementSet, config: &InitConfig) -> Result<Array1<f64>, InitError> {
    config.validate()?;
    let d = data.d();
    let n = data.n();
    let s_hat = config
        .support_size_hint
        .unwrap_or_else(|| (n as f64).sqrt().ceil() as usize)
        .min(d)
        .max(1);

    let diag = surrogate_diagonal(data);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        diag[b]
            .abs()
            .total_cmp(&diag[a].abs())
            .then(a.cmp(&b))
    });
    let mut screened: Vec<usize> = order[..s_hat].to_vec();
    screened.sort_unstable();

    let sub = surrogate_submatrix(data, &screened);
    let scale_of = sub.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale_of == 0.0 {
        log::warn!("spectral surrogate is identically zero; falling back to the zero vector");
        return Ok(Array1::zeros(d));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let v = power_iteration(&sub, config.power_iters, config.angle_tol, &mut rng);

    // Least-squares intensity fit along the screened direction.
    let q = quad_forms_on(data, &screened, &v);
    let qq: f64 = q.iter().map(|x| x * x).sum();
    let qy: f64 = q.iter().zip(data.y()).map(|(a, b)| a * b).sum();
    if qq == 0.0 {
        log::warn!("screened direction annihilates every measurement; using the zero vector");
        return Ok(Array1::zeros(d));
    }
    let t_sq = (qy / qq).max(0.0);
    let t = t_sq.sqrt();

    let mut beta0 = Array1::zeros(d);
    for (k, &j) in screened.iter().enumerate() {
        beta0[j] = t * v[k];
    }
    Ok(beta0)
}

/// [`spectral_init`] with the default configuration — the starting point used
/// by the restricted oracle solve and the command-line `solve --init spectral`.
pub fn default_init(data: &MeasurementSet) -> Result<Array1<f64>, InitError> {
    spectral_init(data, &InitConfig::default())
}

fn surrogate_diagonal(data: &MeasurementSet) -> Array1<f64> {
    let d = data.d();
    let n = data.n() as f64;
    let mut diag = Array1::zeros(d);
    match data.storage() {
        Storage::Dense(entries) => {
            for (mat, &yi) in entries.chunks_exact(d * d).zip(data.y()) {
                for j in 0..d {
                    diag[j] += yi * mat[j * d + j];
                }
            }
        }
        Storage::RankOne(factors) => {
            for (z, &yi) in factors.chunks_exact(d).zip(data.y()) {
                for j in 0..d {
                    diag[j] += yi * z[j] * z[j];
                }
            }
        }
    }
    diag.mapv_inplace(|v| v / n);
    diag
}

fn surrogate_submatrix(data: &MeasurementSet, screened: &[usize]) -> Array2<f64> {
    let d = data.d();
    let s = screened.len();
    let n = data.n() as f64;
    let mut sub = Array2::zeros((s, s));
    match data.storage() {
        Storage::Dense(entries) => {
            for (mat, &yi) in entries.chunks_exact(d * d).zip(data.y()) {
                for (a, &ja) in screened.iter().enumerate() {
                    for (b, &jb) in screened.iter().enumerate() {
                        sub[[a, b]] += yi * mat[ja * d + jb];
                    }
                }
            }
        }
        Storage::RankOne(factors) => {
            for (z, &yi) in factors.chunks_exact(d).zip(data.y()) {
                for (a, &ja) in screened.iter().enumerate() {
                    for (b, &jb) in screened.iter().enumerate() {
                        sub[[a, b]] += yi * z[ja] * z[jb];
                    }
                }
            }
        }
    }
    sub.mapv_inplace(|v| v / n);
    sub
}

/// `q_i = v' Z_i v` for `v` supported on the screened coordinates.
fn quad_forms_on(data: &MeasurementSet, screened: &[usize], v: &Array1<f64>) -> Vec<f64> {
    let d = data.d();
    let mut q = Vec::with_capacity(data.n());
    match data.storage() {
        Storage::Dense(entries) => {
            for mat in entries.chunks_exact(d * d) {
                let mut acc = 0.0;
                for (a, &ja) in screened.iter().enumerate() {
                    let mut row = 0.0;
                    for (b, &jb) in screened.iter().enumerate() {
                        row += mat[ja * d + jb] * v[b];
                    }
                    acc += v[a] * row;
                }
                q.push(acc);
            }
        }
        Storage::RankOne(factors) => {
            for z in factors.chunks_exact(d) {
                let dot: f64 = screened.iter().enumerate().map(|(a, &ja)| z[ja] * v[a]).sum();
                q.push(dot * dot);
            }
        }
    }
    q
}

/// Leading-eigendirection estimate of a symmetric matrix by plain power
/// iteration from a random unit start. Converges in direction (sign-blind),
/// which is all the initializer needs.
fn power_iteration(
    mat: &Array2<f64>,
    max_iters: usize,
    angle_tol: f64,
    rng: &mut ChaCha8Rng,
) -> Array1<f64> {
    let s = mat.nrows();
    let mut v = Array1::from_iter((0..s).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)));
    normalize(&mut v);
    for _ in 0..max_iters {
        let mut next = mat.dot(&v);
        let norm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-300 {
            // v is (numerically) in the null space; no better direction to
            // extract — keep the current one.
            break;
        }
        next.mapv_inplace(|x| x / norm);
        let cos = next.dot(&v).abs().clamp(-1.0, 1.0);
        let done = cos.acos() < angle_tol;
        v = next;
        if done {
            break;
        }
    }
    v
}

fn normalize(v: &mut Array1<f64>) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.mapv_inplace(|x| x / norm);
    } else {
        v[0] = 1.0;
    }
}

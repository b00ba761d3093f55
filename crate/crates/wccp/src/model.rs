//! The quadratic measurement model and its smooth loss.
//!
//! Data are `n` pairs `(Z_i, y_i)` with symmetric `Z_i` in `R^{d x d}`,
//! modeling `y_i = b' Z_i b + noise_i`. The smooth part of the objective is
//!
//! ```text
//! L(b) = (1/4n) sum_i (b' Z_i b - y_i)^2
//! grad L(b) = (1/n) sum_i r_i Z_i b,          r_i = b' Z_i b - y_i
//! g' hess L(b) g = (2/n) sum_i (b' Z_i g)^2 + (1/n) sum_i r_i (g' Z_i g)
//! ```
//!
//! Two storage layouts are supported: fully dense matrices, and a rank-one
//! layout `Z_i = z_i z_i'` that keeps only the factors (the real phase
//! retrieval design) and evaluates everything in `O(n d)` instead of
//! `O(n d^2)`. Both layouts produce identical results on equal inputs up to
//! rounding.
//!
//! All reductions over samples accumulate in fixed index order, so results
//! are reproducible bit-for-bit for a given input.

use ndarray::{Array1, Array2, ArrayView1};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dimension mismatch: expected {expected} {what}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("{what} contains a non-finite value")]
    NonFinite { what: &'static str },
    #[error("empty measurement set")]
    Empty,
    #[error("degenerate data: {0}")]
    Degenerate(String),
    #[error("coordinate index {index} out of range for dimension {d}")]
    IndexOutOfRange { index: usize, d: usize },
}

/// Measurement matrix layout.
#[derive(Debug, Clone, PartialEq)]
pub enum Storage {
    /// `n` row-major `d x d` symmetric matrices, concatenated.
    Dense(Vec<f64>),
    /// `n` factors of length `d`; `Z_i = z_i z_i'`.
    RankOne(Vec<f64>),
}

/// Outcome of [`MeasurementSet::standardize`]: the applied response shift and
/// operator scale, enough to map estimates back to the original data scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StandardizationReport {
    /// Subtracted from every response: afterwards `sum_i y_i = 0`.
    pub response_shift: f64,
    /// Every matrix was multiplied by this factor: afterwards
    /// `sum_i max_abs(Z_i)^2 = n`.
    pub operator_scale: f64,
}

/// A set of quadratic measurements `(Z_i, y_i)`.
#[derive(Debug, Clone)]
pub struct MeasurementSet {
    d: usize,
    y: Vec<f64>,
    storage: Storage,
}

impl MeasurementSet {
    /// Builds a dense set from `n * d * d` row-major entries. Matrices are
    /// symmetrized as `(Z + Z') / 2`; a material asymmetry is logged, not an
    /// error.
    pub fn from_dense(d: usize, y: Vec<f64>, mut entries: Vec<f64>) -> Result<Self, ModelError> {
        let n = check_common(d, &y)?;
        if entries.len() != n * d * d {
            return Err(ModelError::DimensionMismatch {
                what: "matrix entries",
                expected: n * d * d,
                got: entries.len(),
            });
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite {
                what: "matrix entries",
            });
        }
        let mut worst_asym = 0.0_f64;
        let mut scale = 0.0_f64;
        for mat in entries.chunks_exact_mut(d * d) {
            for r in 0..d {
                for c in (r + 1)..d {
                    let a = mat[r * d + c];
                    let b = mat[c * d + r];
                    worst_asym = worst_asym.max((a - b).abs());
                    let avg = 0.5 * (a + b);
                    mat[r * d + c] = avg;
                    mat[c * d + r] = avg;
                }
            }
            scale = mat.iter().fold(scale, |m, v| m.max(v.abs()));
        }
        if worst_asym > 1e-12 * scale.max(1.0) {
            log::warn!(
                "asymmetric measurement matrices symmetrized as (Z + Z')/2 \
                 (max off-symmetry {worst_asym:.3e})"
            );
        }
        Ok(MeasurementSet {
            d,
            y,
            storage: Storage::Dense(entries),
        })
    }

    /// Builds a rank-one set from `n * d` factor entries (`Z_i = z_i z_i'`).
    pub fn from_rank_one(d: usize, y: Vec<f64>, factors: Vec<f64>) -> Result<Self, ModelError> {
        let n = check_common(d, &y)?;
        if factors.len() != n * d {
            return Err(ModelError::DimensionMismatch {
                what: "factor entries",
                expected: n * d,
                got: factors.len(),
            });
        }
        if factors.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite { what: "factors" });
        }
        Ok(MeasurementSet {
            d,
            y,
            storage: Storage::RankOne(factors),
        })
    }

    /// Convenience constructor from ndarray matrices (symmetrized like
    /// [`Self::from_dense`]).
    pub fn from_matrices(y: Vec<f64>, matrices: &[Array2<f64>]) -> Result<Self, ModelError> {
        let d = matrices.first().map(|m| m.nrows()).unwrap_or(0);
        let mut entries = Vec::with_capacity(matrices.len() * d * d);
        for m in matrices {
            if m.nrows() != d || m.ncols() != d {
                return Err(ModelError::DimensionMismatch {
                    what: "square matrices of common dimension",
                    expected: d,
                    got: m.nrows().max(m.ncols()),
                });
            }
            entries.extend(m.iter().copied());
        }
        Self::from_dense(d, y, entries)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    /// Whether the set uses the rank-one layout.
    pub fn is_rank_one(&self) -> bool {
        matches!(self.storage, Storage::RankOne(_))
    }

    /// Centers responses (`sum y_i = 0`) and rescales all matrices by one
    /// common factor so that `sum_i max_abs(Z_i)^2 = n`. Returns the applied
    /// shift and scale; applying again is a no-op (shift 0, scale 1).
    pub fn standardize(&mut self) -> Result<StandardizationReport, ModelError> {
        let n = self.n() as f64;
        let shift = self.y.iter().sum::<f64>() / n;
        for v in &mut self.y {
            *v -= shift;
        }
        let sum_sq: f64 = match &self.storage {
            Storage::Dense(entries) => entries
                .chunks_exact(self.d * self.d)
                .map(|m| {
                    let inf = m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
                    inf * inf
                })
                .sum(),
            Storage::RankOne(factors) => factors
                .chunks_exact(self.d)
                .map(|z| {
                    let inf = z.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
                    // max_abs(z z') = (max |z_j|)^2
                    inf.powi(4)
                })
                .sum(),
        };
        if sum_sq == 0.0 {
            return Err(ModelError::Degenerate(
                "all measurement matrices are zero".into(),
            ));
        }
        let scale = (n / sum_sq).sqrt();
        match &mut self.storage {
            Storage::Dense(entries) => {
                for v in entries.iter_mut() {
                    *v *= scale;
                }
            }
            Storage::RankOne(factors) => {
                // Z_i scales by `scale` when factors scale by sqrt(scale).
                let fs = scale.sqrt();
                for v in factors.iter_mut() {
                    *v *= fs;
                }
            }
        }
        Ok(StandardizationReport {
            response_shift: shift,
            operator_scale: scale,
        })
    }

    /// Residuals `r_i = b' Z_i b - y_i`.
    pub fn residuals(&self, beta: ArrayView1<'_, f64>) -> Result<Array1<f64>, ModelError> {
        let b = self.check_beta(beta)?;
        let mut r = Array1::zeros(self.n());
        match &self.storage {
            Storage::Dense(entries) => {
                for (i, mat) in entries.chunks_exact(self.d * self.d).enumerate() {
                    r[i] = quad_form(mat, self.d, b) - self.y[i];
                }
            }
            Storage::RankOne(factors) => {
                for (i, z) in factors.chunks_exact(self.d).enumerate() {
                    let t = dot(z, b);
                    r[i] = t * t - self.y[i];
                }
            }
        }
        Ok(r)
    }

    /// `L(b) = (1/4n) sum_i r_i^2`.
    pub fn loss(&self, beta: ArrayView1<'_, f64>) -> Result<f64, ModelError> {
        let b = self.check_beta(beta)?;
        let inv = 1.0 / (4.0 * self.n() as f64);
        let mut acc = 0.0;
        match &self.storage {
            Storage::Dense(entries) => {
                for (mat, &yi) in entries.chunks_exact(self.d * self.d).zip(&self.y) {
                    let r = quad_form(mat, self.d, b) - yi;
                    acc += r * r;
                }
            }
            Storage::RankOne(factors) => {
                for (z, &yi) in factors.chunks_exact(self.d).zip(&self.y) {
                    let t = dot(z, b);
                    let r = t * t - yi;
                    acc += r * r;
                }
            }
        }
        Ok(acc * inv)
    }

    /// Gradient of the loss: `(1/n) sum_i r_i Z_i b`.
    pub fn gradient(&self, beta: ArrayView1<'_, f64>) -> Result<Array1<f64>, ModelError> {
        Ok(self.loss_gradient(beta)?.1)
    }

    /// Loss and gradient in a single pass over the data — the solver hot path.
    pub fn loss_gradient(
        &self,
        beta: ArrayView1<'_, f64>,
    ) -> Result<(f64, Array1<f64>), ModelError> {
        let b = self.check_beta(beta)?;
        let n = self.n() as f64;
        let mut grad = vec![0.0_f64; self.d];
        let mut sq = 0.0_f64;
        match &self.storage {
            Storage::Dense(entries) => {
                let mut u = vec![0.0_f64; self.d];
                for (mat, &yi) in entries.chunks_exact(self.d * self.d).zip(&self.y) {
                    mat_vec(mat, self.d, b, &mut u);
                    let r = dot(&u, b) - yi;
                    sq += r * r;
                    axpy(r, &u, &mut grad);
                }
            }
            Storage::RankOne(factors) => {
                for (z, &yi) in factors.chunks_exact(self.d).zip(&self.y) {
                    let t = dot(z, b);
                    let r = t * t - yi;
                    sq += r * r;
                    axpy(r * t, z, &mut grad);
                }
            }
        }
        for g in &mut grad {
            *g /= n;
        }
        Ok((sq / (4.0 * n), Array1::from_vec(grad)))
    }

    /// Curvature of the loss along `g`:
    /// `g' hess L(b) g = (2/n) sum_i (b' Z_i g)^2 + (1/n) sum_i r_i (g' Z_i g)`.
    pub fn curvature_form(
        &self,
        beta: ArrayView1<'_, f64>,
        dir: ArrayView1<'_, f64>,
    ) -> Result<f64, ModelError> {
        let b = self.check_beta(beta)?;
        let g = self.check_beta(dir)?;
        let n = self.n() as f64;
        let mut acc = 0.0;
        match &self.storage {
            Storage::Dense(entries) => {
                let mut u = vec![0.0_f64; self.d];
                for (mat, &yi) in entries.chunks_exact(self.d * self.d).zip(&self.y) {
                    mat_vec(mat, self.d, g, &mut u);
                    let bzg = dot(&u, b);
                    let gzg = dot(&u, g);
                    let r = quad_form(mat, self.d, b) - yi;
                    acc += 2.0 * bzg * bzg + r * gzg;
                }
            }
            Storage::RankOne(factors) => {
                for (z, &yi) in factors.chunks_exact(self.d).zip(&self.y) {
                    let tb = dot(z, b);
                    let tg = dot(z, g);
                    let r = tb * tb - yi;
                    acc += 2.0 * (tb * tg) * (tb * tg) + r * tg * tg;
                }
            }
        }
        Ok(acc / n)
    }

    /// The loss Hessian restricted to a coordinate subset:
    /// `H[j, l] = (2/n) sum_i (Z_i b)_j (Z_i b)_l + (1/n) sum_i r_i Z_i[j, l]`
    /// for `j, l` in `support`.
    pub fn hessian_restricted(
        &self,
        beta: ArrayView1<'_, f64>,
        support: &[usize],
    ) -> Result<Array2<f64>, ModelError> {
        let b = self.check_beta(beta)?;
        for &j in support {
            if j >= self.d {
                return Err(ModelError::IndexOutOfRange { index: j, d: self.d });
            }
        }
        let s = support.len();
        let n = self.n() as f64;
        let mut h = Array2::zeros((s, s));
        match &self.storage {
            Storage::Dense(entries) => {
                let mut u = vec![0.0_f64; self.d];
                for (mat, &yi) in entries.chunks_exact(self.d * self.d).zip(&self.y) {
                    mat_vec(mat, self.d, b, &mut u);
                    let r = dot(&u, b) - yi;
                    for (a, &ja) in support.iter().enumerate() {
                        for (c, &jc) in support.iter().enumerate() {
                            h[[a, c]] += 2.0 * u[ja] * u[jc] + r * mat[ja * self.d + jc];
                        }
                    }
                }
            }
            Storage::RankOne(factors) => {
                for (z, &yi) in factors.chunks_exact(self.d).zip(&self.y) {
                    let t = dot(z, b);
                    let r = t * t - yi;
                    // (Z b)_j = t z_j and Z[j, l] = z_j z_l, so the sample
                    // contributes (2 t^2 + r) z_j z_l.
                    let w = 2.0 * t * t + r;
                    for (a, &ja) in support.iter().enumerate() {
                        for (c, &jc) in support.iter().enumerate() {
                            h[[a, c]] += w * z[ja] * z[jc];
                        }
                    }
                }
            }
        }
        h.mapv_inplace(|v| v / n);
        Ok(h)
    }

    /// A new set holding only the selected samples (clones the rows). Used by
    /// cross-validation splits.
    pub fn subset(&self, samples: &[usize]) -> Result<MeasurementSet, ModelError> {
        for &i in samples {
            if i >= self.n() {
                return Err(ModelError::IndexOutOfRange {
                    index: i,
                    d: self.n(),
                });
            }
        }
        if samples.is_empty() {
            return Err(ModelError::Empty);
        }
        let y: Vec<f64> = samples.iter().map(|&i| self.y[i]).collect();
        let storage = match &self.storage {
            Storage::Dense(entries) => {
                let dd = self.d * self.d;
                let mut out = Vec::with_capacity(samples.len() * dd);
                for &i in samples {
                    out.extend_from_slice(&entries[i * dd..(i + 1) * dd]);
                }
                Storage::Dense(out)
            }
            Storage::RankOne(factors) => {
                let mut out = Vec::with_capacity(samples.len() * self.d);
                for &i in samples {
                    out.extend_from_slice(&factors[i * self.d..(i + 1) * self.d]);
                }
                Storage::RankOne(out)
            }
        };
        Ok(MeasurementSet {
            d: self.d,
            y,
            storage,
        })
    }

    /// A new set restricted to a coordinate subset: responses unchanged,
    /// matrices replaced by the principal submatrices `Z_i[support, support]`
    /// (factors by `z_i[support]`). Used by the restricted "oracle" solve.
    pub fn restrict_coordinates(&self, support: &[usize]) -> Result<MeasurementSet, ModelError> {
        for &j in support {
            if j >= self.d {
                return Err(ModelError::IndexOutOfRange { index: j, d: self.d });
            }
        }
        if support.is_empty() {
            return Err(ModelError::Degenerate(
                "cannot restrict to an empty coordinate set".into(),
            ));
        }
        let s = support.len();
        let storage = match &self.storage {
            Storage::Dense(entries) => {
                let dd = self.d * self.d;
                let mut out = Vec::with_capacity(self.n() * s * s);
                for mat in entries.chunks_exact(dd) {
                    for &r in support {
                        for &c in support {
                            out.push(mat[r * self.d + c]);
                        }
                    }
                }
                Storage::Dense(out)
            }
            Storage::RankOne(factors) => {
                let mut out = Vec::with_capacity(self.n() * s);
                for z in factors.chunks_exact(self.d) {
                    out.extend(support.iter().map(|&j| z[j]));
                }
                Storage::RankOne(out)
            }
        };
        Ok(MeasurementSet {
            d: s,
            y: self.y.clone(),
            storage,
        })
    }

    fn check_beta<'a>(&self, beta: ArrayView1<'a, f64>) -> Result<&'a [f64], ModelError> {
        if beta.len() != self.d {
            return Err(ModelError::DimensionMismatch {
                what: "coefficients",
                expected: self.d,
                got: beta.len(),
            });
        }
        beta.to_slice().ok_or(ModelError::NonFinite {
            // Views produced by this crate are always contiguous; a
            // non-contiguous view is a caller bug surfaced as an error
            // rather than a silent copy.
            what: "non-contiguous coefficient view",
        })
    }
}

fn check_common(d: usize, y: &[f64]) -> Result<usize, ModelError> {
    if d == 0 || y.is_empty() {
        return Err(ModelError::Empty);
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::NonFinite { what: "responses" });
    }
    Ok(y.len())
}

/// Dot product with four-lane accumulation (auto-vectorizes; fixed order).
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let quads = a.len() / 4 * 4;
    let mut acc = [0.0_f64; 4];
    let (a4, a_tail) = a.split_at(quads);
    let (b4, b_tail) = b.split_at(quads);
    for (ca, cb) in a4.chunks_exact(4).zip(b4.chunks_exact(4)) {
        acc[0] += ca[0] * cb[0];
        acc[1] += ca[1] * cb[1];
        acc[2] += ca[2] * cb[2];
        acc[3] += ca[3] * cb[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in a_tail.iter().zip(b_tail) {
        s += x * y;
    }
    s
}

/// `out = M v` for a row-major `d x d` matrix stored flat.
#[inline]
fn mat_vec(mat: &[f64], d: usize, v: &[f64], out: &mut [f64]) {
    for (row, o) in mat.chunks_exact(d).zip(out.iter_mut()) {
        *o = dot(row, v);
    }
}

/// `v' M v` without materializing `M v`.
#[inline]
fn quad_form(mat: &[f64], d: usize, v: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (row, &vi) in mat.chunks_exact(d).zip(v.iter()) {
        acc += vi * dot(row, v);
    }
    acc
}

/// `acc += a * x`.
#[inline]
fn axpy(a: f64, x: &[f64], acc: &mut [f64]) {
    for (s, &xi) in acc.iter_mut().zip(x.iter()) {
        *s += a * xi;
    }
}

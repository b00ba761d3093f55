//! Scalar sparsity penalties and their proximal operators.
//!
//! A penalty is a function `p: [0, inf) -> [0, inf)` applied coordinatewise to
//! `|b_j|`. All families here are folded concave: `p(0) = 0`, `p` is
//! nondecreasing and concave on `(0, inf)`, and `p(t)/t` is nonincreasing.
//! Except for the l1/2 baseline, each family is weakly convex with a known
//! modulus `mu` (`p + (mu/2) t^2` convex) and a finite slope at the origin
//! `lim_{t -> 0+} p'(t) = lambda * rho`. Those two constants drive the step
//! cap of the proximal solver and the zero-coordinate weights of the
//! reweighted-l1 solver.
//!
//! Supported families, with `shape` interpretation and closed-form prox:
//!
//! | family | p(t) for t >= 0                          | shape    | prox |
//! |--------|------------------------------------------|----------|------|
//! | L1     | `l*t`                                    | unused   | soft threshold |
//! | LHalf  | `l*sqrt(t)`                              | unused   | half threshold |
//! | Scad   | three-piece quadratic spline             | `a > 2`  | per-piece candidates |
//! | Mcp    | `l*t - t^2/(2g)` capped at `g*l^2/2`     | `g > 0`  | per-piece candidates |
//! | Firm   | `l*t - l*t^2/(2c)` capped at `c*l/2`     | `c > 0`  | per-piece candidates |
//! | Log    | `l*ln(c*t + 1)`                          | `c > 0`  | root comparison |
//! | Exp    | `l*(1 - exp(-c*t))`                      | `c > 0`  | unsupported |
//!
//! Firm is Mcp reparametrized: `Firm(l, c) == Mcp(l, g = c/l)`. Exp has no
//! practical closed-form prox, so it is only usable through the reweighted-l1
//! path. `lambda == 0` is accepted and degenerates every family to the zero
//! penalty (useful for unpenalized solves).

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default shape for [`PenaltyFamily::Scad`].
pub const DEFAULT_SCAD_A: f64 = 3.7;
/// Default shape for [`PenaltyFamily::Mcp`].
pub const DEFAULT_MCP_GAMMA: f64 = 2.0;
/// Default shape for the Firm, Log and Exp families.
pub const DEFAULT_RATE_C: f64 = 1.0;

/// Near-ties between prox candidates are broken toward the smaller magnitude;
/// two candidates are "tied" when their objectives differ by less than this.
const PROX_TIE_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum PenaltyError {
    #[error("penalty value requires t >= 0, got {0}")]
    NegativeArgument(f64),
    #[error("penalty derivative requires t > 0, got {0}")]
    NonpositiveArgument(f64),
    #[error("{family:?} does not define {what}")]
    Unsupported {
        family: PenaltyFamily,
        what: &'static str,
    },
    #[error("prox step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("prox is single-valued only for tau * mu < 1, got tau * mu = {0}")]
    StepTooLarge(f64),
    #[error("invalid penalty parameters: {0}")]
    InvalidSpec(String),
}

/// The penalty families understood by the solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyFamily {
    L1,
    LHalf,
    Scad,
    Mcp,
    Firm,
    Log,
    Exp,
}

impl PenaltyFamily {
    pub const ALL: [PenaltyFamily; 7] = [
        PenaltyFamily::L1,
        PenaltyFamily::LHalf,
        PenaltyFamily::Scad,
        PenaltyFamily::Mcp,
        PenaltyFamily::Firm,
        PenaltyFamily::Log,
        PenaltyFamily::Exp,
    ];

    /// Canonical lowercase name, matching CLI and CSV spellings.
    pub fn name(self) -> &'static str {
        match self {
            PenaltyFamily::L1 => "l1",
            PenaltyFamily::LHalf => "lhalf",
            PenaltyFamily::Scad => "scad",
            PenaltyFamily::Mcp => "mcp",
            PenaltyFamily::Firm => "firm",
            PenaltyFamily::Log => "log",
            PenaltyFamily::Exp => "exp",
        }
    }

    pub fn parse(name: &str) -> Result<Self, PenaltyError> {
        match name.to_ascii_lowercase().as_str() {
            "l1" => Ok(PenaltyFamily::L1),
            "lhalf" | "l1/2" | "l0.5" => Ok(PenaltyFamily::LHalf),
            "scad" => Ok(PenaltyFamily::Scad),
            "mcp" => Ok(PenaltyFamily::Mcp),
            "firm" => Ok(PenaltyFamily::Firm),
            "log" => Ok(PenaltyFamily::Log),
            "exp" => Ok(PenaltyFamily::Exp),
            other => Err(PenaltyError::InvalidSpec(format!(
                "unknown penalty family '{other}'"
            ))),
        }
    }

    /// Default shape parameter, used when a caller provides none.
    pub fn default_shape(self) -> f64 {
        match self {
            PenaltyFamily::Scad => DEFAULT_SCAD_A,
            PenaltyFamily::Mcp => DEFAULT_MCP_GAMMA,
            PenaltyFamily::Firm | PenaltyFamily::Log | PenaltyFamily::Exp => DEFAULT_RATE_C,
            PenaltyFamily::L1 | PenaltyFamily::LHalf => 0.0,
        }
    }

    /// Whether the family has a usable closed-form prox (the proximal-gradient
    /// solver requires this).
    pub fn has_prox(self) -> bool {
        !matches!(self, PenaltyFamily::Exp)
    }

    /// Whether the family supports reweighted-l1 iterations (requires a finite
    /// slope at the origin).
    pub fn has_weights(self) -> bool {
        !matches!(self, PenaltyFamily::LHalf)
    }
}

impl std::fmt::Display for PenaltyFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A fully parametrized penalty: family, level `lambda`, and shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltySpec {
    family: PenaltyFamily,
    lambda: f64,
    shape: f64,
}

impl PenaltySpec {
    /// Builds and validates a penalty. `shape = None` selects the family
    /// default (`a = 3.7` for Scad, `gamma = 2` for Mcp, `c = 1` for
    /// Firm/Log/Exp). `lambda = 0` is allowed and yields the zero penalty.
    pub fn new(
        family: PenaltyFamily,
        lambda: f64,
        shape: Option<f64>,
    ) -> Result<Self, PenaltyError> {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(PenaltyError::InvalidSpec(format!(
                "lambda must be finite and >= 0, got {lambda}"
            )));
        }
        let shape = shape.unwrap_or_else(|| family.default_shape());
        if !shape.is_finite() {
            return Err(PenaltyError::InvalidSpec(format!(
                "shape must be finite, got {shape}"
            )));
        }
        match family {
            PenaltyFamily::Scad if shape <= 2.0 => {
                return Err(PenaltyError::InvalidSpec(format!(
                    "scad requires a > 2, got {shape}"
                )));
            }
            PenaltyFamily::Mcp | PenaltyFamily::Firm | PenaltyFamily::Log | PenaltyFamily::Exp
                if shape <= 0.0 =>
            {
                return Err(PenaltyError::InvalidSpec(format!(
                    "{} requires a positive shape, got {shape}",
                    family.name()
                )));
            }
            _ => {}
        }
        Ok(PenaltySpec {
            family,
            lambda,
            shape,
        })
    }

    pub fn family(&self) -> PenaltyFamily {
        self.family
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    /// Same penalty with a different level.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self, PenaltyError> {
        PenaltySpec::new(self.family, lambda, Some(self.shape))
    }

    /// `p(t)` for `t >= 0`.
    pub fn value(&self, t: f64) -> Result<f64, PenaltyError> {
        if !(t >= 0.0) {
            return Err(PenaltyError::NegativeArgument(t));
        }
        Ok(self.value_at(t))
    }

    /// `p'(t)` for `t > 0`. Every supported family has a continuous
    /// derivative away from the origin, so no one-sided convention is needed.
    pub fn derivative(&self, t: f64) -> Result<f64, PenaltyError> {
        if !(t > 0.0) {
            return Err(PenaltyError::NonpositiveArgument(t));
        }
        Ok(self.derivative_at(t))
    }

    /// Origin slope factor `rho`, defined by `lim_{t->0+} p'(t) = lambda * rho`.
    pub fn rho(&self) -> Result<f64, PenaltyError> {
        match self.family {
            PenaltyFamily::L1
            | PenaltyFamily::Scad
            | PenaltyFamily::Mcp
            | PenaltyFamily::Firm => Ok(1.0),
            PenaltyFamily::Log | PenaltyFamily::Exp => Ok(self.shape),
            PenaltyFamily::LHalf => Err(PenaltyError::Unsupported {
                family: self.family,
                what: "a finite slope at the origin",
            }),
        }
    }

    /// Weak-convexity modulus `mu`: the smallest value making `p + (mu/2) t^2`
    /// convex on `(0, inf)`.
    pub fn mu(&self) -> Result<f64, PenaltyError> {
        if self.lambda == 0.0 {
            // Zero penalty: convex already.
            return Ok(0.0);
        }
        match self.family {
            PenaltyFamily::L1 => Ok(0.0),
            PenaltyFamily::Scad => Ok(1.0 / (self.shape - 1.0)),
            PenaltyFamily::Mcp => Ok(1.0 / self.shape),
            PenaltyFamily::Firm => Ok(self.lambda / self.shape),
            PenaltyFamily::Log | PenaltyFamily::Exp => Ok(self.lambda * self.shape * self.shape),
            PenaltyFamily::LHalf => Err(PenaltyError::Unsupported {
                family: self.family,
                what: "a weak-convexity modulus",
            }),
        }
    }

    /// Sum of the penalty over a coefficient vector: `sum_j p(|b_j|)`.
    pub fn total(&self, beta: ArrayView1<'_, f64>) -> f64 {
        beta.iter().map(|&b| self.value_at(b.abs())).sum()
    }

    /// Scalar proximal operator: the minimizer of
    /// `h(u) = (u - v)^2 / 2 + tau * p(|u|)`.
    ///
    /// Requires `tau > 0` and `tau * mu < 1` (which makes `h` strictly convex
    /// on each piece, hence the minimizer unique up to exact ties; ties are
    /// broken toward the smaller magnitude). Errors for Exp, which has no
    /// workable closed form — route those solves through reweighted l1.
    pub fn prox(&self, v: f64, tau: f64) -> Result<f64, PenaltyError> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(PenaltyError::InvalidStep(tau));
        }
        match self.family {
            PenaltyFamily::Exp => {
                return Err(PenaltyError::Unsupported {
                    family: self.family,
                    what: "a closed-form prox",
                })
            }
            PenaltyFamily::LHalf => {} // not weakly convex; closed form exists anyway
            _ => {
                let tm = tau * self.mu().expect("mu defined for this family");
                if tm >= 1.0 {
                    return Err(PenaltyError::StepTooLarge(tm));
                }
            }
        }
        Ok(self.prox_at(v, tau))
    }

    /// Componentwise prox of `sum_j tau * p(|u_j|)` at `v`.
    pub fn prox_vec(&self, v: ArrayView1<'_, f64>, tau: f64) -> Result<Array1<f64>, PenaltyError> {
        // Validate once, then run the infallible scalar kernel.
        if let Some(&first) = v.first() {
            self.prox(first, tau)?;
        } else {
            self.prox(0.0, tau)?;
        }
        Ok(v.mapv(|x| self.prox_at(x, tau)))
    }

    /// Reweighted-l1 weights at a point: `w_j = max(p'(|b_j|), eps)` for
    /// nonzero coordinates and `lambda * rho` (the origin slope) for zero
    /// ones. The floor `eps` keeps weights of active coordinates strictly
    /// positive even deep in a flat region of the penalty.
    pub fn weights(
        &self,
        beta: ArrayView1<'_, f64>,
        eps: f64,
    ) -> Result<Array1<f64>, PenaltyError> {
        let origin_slope = self.lambda * self.rho()?;
        Ok(beta.mapv(|b| {
            let t = b.abs();
            if t > 0.0 {
                self.derivative_at(t).max(eps)
            } else {
                origin_slope
            }
        }))
    }

    /// Infimum of the penalty's second derivative in a neighborhood of
    /// `t > 0`; at a piece boundary this takes the more negative side. Always
    /// `>= -mu` for the weakly convex families. Used by the second-order
    /// stationarity check.
    pub fn curvature_infimum(&self, t: f64) -> Result<f64, PenaltyError> {
        if !(t > 0.0) {
            return Err(PenaltyError::NonpositiveArgument(t));
        }
        let l = self.lambda;
        let s = self.shape;
        Ok(match self.family {
            PenaltyFamily::L1 => 0.0,
            PenaltyFamily::LHalf => -l / (4.0 * t.powi(3).sqrt()),
            PenaltyFamily::Scad => {
                if l > 0.0 && t >= l && t <= s * l {
                    -1.0 / (s - 1.0)
                } else {
                    0.0
                }
            }
            PenaltyFamily::Mcp => {
                if l > 0.0 && t <= s * l {
                    -1.0 / s
                } else {
                    0.0
                }
            }
            PenaltyFamily::Firm => {
                if t <= s {
                    -l / s
                } else {
                    0.0
                }
            }
            PenaltyFamily::Log => {
                let d = s * t + 1.0;
                -l * s * s / (d * d)
            }
            PenaltyFamily::Exp => -l * s * s * (-s * t).exp(),
        })
    }

    fn value_at(&self, t: f64) -> f64 {
        let l = self.lambda;
        let s = self.shape;
        match self.family {
            PenaltyFamily::L1 => l * t,
            PenaltyFamily::LHalf => l * t.sqrt(),
            PenaltyFamily::Scad => {
                if t <= l {
                    l * t
                } else if t <= s * l {
                    (2.0 * s * l * t - t * t - l * l) / (2.0 * (s - 1.0))
                } else {
                    l * l * (s + 1.0) / 2.0
                }
            }
            PenaltyFamily::Mcp => {
                if t <= s * l {
                    l * t - t * t / (2.0 * s)
                } else {
                    s * l * l / 2.0
                }
            }
            PenaltyFamily::Firm => {
                if t < s {
                    l * t - l * t * t / (2.0 * s)
                } else {
                    s * l / 2.0
                }
            }
            PenaltyFamily::Log => l * (s * t).ln_1p(),
            PenaltyFamily::Exp => -l * (-s * t).exp_m1(),
        }
    }

    fn derivative_at(&self, t: f64) -> f64 {
        let l = self.lambda;
        let s = self.shape;
        match self.family {
            PenaltyFamily::L1 => l,
            PenaltyFamily::LHalf => l / (2.0 * t.sqrt()),
            PenaltyFamily::Scad => {
                if t <= l {
                    l
                } else if t <= s * l {
                    (s * l - t) / (s - 1.0)
                } else {
                    0.0
                }
            }
            PenaltyFamily::Mcp => {
                if t <= s * l {
                    l - t / s
                } else {
                    0.0
                }
            }
            PenaltyFamily::Firm => {
                if t < s {
                    l * (1.0 - t / s)
                } else {
                    0.0
                }
            }
            PenaltyFamily::Log => l * s / (s * t + 1.0),
            PenaltyFamily::Exp => l * s * (-s * t).exp(),
        }
    }

    /// Infallible scalar prox kernel; preconditions checked by [`Self::prox`].
    /// Crate-internal callers (the solvers) validate the step once up front.
    pub(crate) fn prox_at(&self, v: f64, tau: f64) -> f64 {
        let x = v.abs();
        if x == 0.0 {
            return 0.0;
        }
        let l = self.lambda;
        let s = self.shape;
        let u = match self.family {
            PenaltyFamily::L1 => (x - tau * l).max(0.0),
            PenaltyFamily::LHalf => half_threshold(x, tau * l),
            PenaltyFamily::Scad => {
                // Minimize piecewise: the objective restricted to each piece of
                // p is strictly convex under tau * mu < 1, so the global
                // minimizer is one of the per-piece clamped stationary points.
                let c1 = (x - tau * l).max(0.0).min(l);
                let c2 = (((s - 1.0) * x - tau * s * l) / (s - 1.0 - tau)).clamp(l, s * l);
                let c3 = x.max(s * l);
                self.pick_smallest(x, tau, &[c1, c2, c3])
            }
            PenaltyFamily::Mcp => {
                let c1 = (s * (x - tau * l) / (s - tau)).clamp(0.0, s * l);
                let c2 = x.max(s * l);
                self.pick_smallest(x, tau, &[c1, c2])
            }
            PenaltyFamily::Firm => {
                let c1 = ((x - tau * l) / (1.0 - tau * l / s)).clamp(0.0, s);
                let c2 = x.max(s);
                self.pick_smallest(x, tau, &[c1, c2])
            }
            PenaltyFamily::Log => {
                // Interior stationary points solve
                //   s*u^2 + (1 - s*x)*u + (tau*l*s - x) = 0;
                // compare the objective at 0 and at each nonnegative real root.
                let b = 1.0 - s * x;
                let c0 = tau * l * s - x;
                let disc = b * b - 4.0 * s * c0;
                if disc < 0.0 {
                    self.pick_smallest(x, tau, &[0.0])
                } else {
                    let sq = disc.sqrt();
                    let r1 = (-b - sq) / (2.0 * s);
                    let r2 = (-b + sq) / (2.0 * s);
                    let mut cands = [0.0_f64; 3];
                    let mut n = 1;
                    for r in [r1, r2] {
                        if r > 0.0 {
                            cands[n] = r;
                            n += 1;
                        }
                    }
                    self.pick_smallest(x, tau, &cands[..n])
                }
            }
            PenaltyFamily::Exp => unreachable!("exp prox rejected in prox()"),
        };
        u.copysign(v)
    }

    /// Argmin of `h(u) = (u - x)^2 / 2 + tau * p(u)` over the candidates,
    /// scanned in ascending order so near-ties resolve to the smaller
    /// magnitude.
    fn pick_smallest(&self, x: f64, tau: f64, candidates: &[f64]) -> f64 {
        let mut order: [f64; 4] = [f64::INFINITY; 4];
        order[..candidates.len()].copy_from_slice(candidates);
        order[..candidates.len()].sort_by(|a, b| a.total_cmp(b));
        let mut best = order[0];
        let mut best_h = prox_objective(self, x, tau, best);
        for &u in &order[1..candidates.len()] {
            let h = prox_objective(self, x, tau, u);
            if h < best_h - PROX_TIE_TOL {
                best = u;
                best_h = h;
            }
        }
        best
    }
}

fn prox_objective(spec: &PenaltySpec, x: f64, tau: f64, u: f64) -> f64 {
    let d = u - x;
    0.5 * d * d + tau * spec.value_at(u)
}

/// Soft threshold `S(v, w) = sign(v) * max(|v| - w, 0)` for `w >= 0`.
pub fn soft_threshold(v: f64, w: f64) -> f64 {
    let shrunk = v.abs() - w;
    if shrunk > 0.0 {
        shrunk.copysign(v)
    } else {
        0.0
    }
}

/// Half-threshold operator: minimizer of `(u - x)^2 / 2 + w * sqrt(u)` over
/// `u >= 0`, for `x >= 0`. Zero iff `x <= (3/2) w^(2/3)`; otherwise the
/// largest root of `u^(3/2) - x*u^(1/2) + w/2`, expressed trigonometrically.
fn half_threshold(x: f64, w: f64) -> f64 {
    if w == 0.0 {
        return x;
    }
    let threshold = 1.5 * w.powf(2.0 / 3.0);
    if x <= threshold {
        return 0.0;
    }
    // Substituting u = q^2 turns stationarity into the depressed cubic
    // q^3 - x q + w/2 = 0; beyond the threshold all roots are real and the
    // largest one (k = 0 branch) is the local minimum.
    let arg = (-0.75 * 3.0_f64.sqrt() * w / x.powi(3).sqrt()).clamp(-1.0, 1.0);
    let theta = arg.acos();
    let cos = (theta / 3.0).cos();
    (4.0 * x / 3.0) * cos * cos
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn spec(family: PenaltyFamily, lambda: f64, shape: f64) -> PenaltySpec {
        PenaltySpec::new(family, lambda, Some(shape)).unwrap()
    }

    /// Piece boundaries of the penalty in t, for keeping finite-difference
    /// probes away from kinks.
    fn kinks(s: &PenaltySpec) -> Vec<f64> {
        match s.family() {
            PenaltyFamily::Scad => vec![s.lambda(), s.shape() * s.lambda()],
            PenaltyFamily::Mcp => vec![s.shape() * s.lambda()],
            PenaltyFamily::Firm => vec![s.shape()],
            _ => vec![],
        }
    }

    #[test]
    fn scad_piecewise_values() {
        let p = spec(PenaltyFamily::Scad, 1.0, 3.7);
        assert_eq!(p.value(0.0).unwrap(), 0.0);
        assert_eq!(p.value(0.5).unwrap(), 0.5);
        let mid = p.value(2.0).unwrap();
        assert!((mid - (2.0 * 3.7 * 2.0 - 4.0 - 1.0) / (2.0 * 2.7)).abs() < 1e-15);
        assert!((p.value(10.0).unwrap() - 4.7 / 2.0).abs() < 1e-15);
        // Constant tail: no further growth.
        assert_eq!(p.value(10.0).unwrap(), p.value(100.0).unwrap());
    }

    #[test]
    fn mcp_and_firm_agree_under_reparametrization() {
        let lambda = 0.7;
        let c = 1.9;
        let firm = spec(PenaltyFamily::Firm, lambda, c);
        let mcp = spec(PenaltyFamily::Mcp, lambda, c / lambda);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let t = rng.random::<f64>() * 4.0;
            let dv = (firm.value(t).unwrap() - mcp.value(t).unwrap()).abs();
            assert!(dv < 1e-14, "value mismatch at t = {t}: {dv}");
            if t > 0.0 {
                let dd = (firm.derivative(t).unwrap() - mcp.derivative(t).unwrap()).abs();
                assert!(dd < 1e-14, "derivative mismatch at t = {t}");
            }
            let tau = 0.9 / firm.mu().unwrap().max(1.0);
            let v = rng.random::<f64>() * 6.0 - 3.0;
            let df = (firm.prox(v, tau).unwrap() - mcp.prox(v, tau).unwrap()).abs();
            assert!(df < 1e-12, "prox mismatch at v = {v}");
        }
        assert_eq!(firm.mu().unwrap(), lambda / c);
        assert_eq!(mcp.mu().unwrap(), lambda / c);
    }

    #[test]
    fn mcp_values_and_cap() {
        let p = spec(PenaltyFamily::Mcp, 1.0, 2.0);
        assert!((p.value(1.0).unwrap() - 0.75).abs() < 1e-15);
        assert!((p.value(3.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((p.derivative(1.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(p.derivative(2.5).unwrap(), 0.0);
    }

    #[test]
    fn log_and_exp_values() {
        let p = spec(PenaltyFamily::Log, 1.0, 1.0);
        let t = std::f64::consts::E - 1.0;
        assert!((p.value(t).unwrap() - 1.0).abs() < 1e-14);
        let q = spec(PenaltyFamily::Exp, 2.0, 1.0);
        assert!((q.value(1.0).unwrap() - 2.0 * (1.0 - (-1.0_f64).exp())).abs() < 1e-14);
        // Saturates at lambda.
        assert!((q.value(1e3).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn lhalf_value_and_derivative() {
        let p = spec(PenaltyFamily::LHalf, 1.0, 0.0);
        assert_eq!(p.value(4.0).unwrap(), 2.0);
        assert!((p.derivative(4.0).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn origin_slope_and_modulus_table() {
        let cases: Vec<(PenaltySpec, f64, f64)> = vec![
            (spec(PenaltyFamily::L1, 0.8, 0.0), 1.0, 0.0),
            (spec(PenaltyFamily::Scad, 0.8, 3.7), 1.0, 1.0 / 2.7),
            (spec(PenaltyFamily::Mcp, 0.8, 2.0), 1.0, 0.5),
            (spec(PenaltyFamily::Firm, 0.8, 2.0), 1.0, 0.4),
            (spec(PenaltyFamily::Log, 0.8, 3.0), 3.0, 0.8 * 9.0),
            (spec(PenaltyFamily::Exp, 0.8, 3.0), 3.0, 0.8 * 9.0),
        ];
        for (p, rho, mu) in cases {
            assert!((p.rho().unwrap() - rho).abs() < 1e-15, "{:?}", p.family());
            assert!((p.mu().unwrap() - mu).abs() < 1e-15, "{:?}", p.family());
            // rho matches the actual slope just right of the origin.
            let slope = p.derivative(1e-9).unwrap();
            let expected = p.lambda() * rho;
            assert!(
                (slope - expected).abs() <= 1e-6 * expected,
                "{:?}: slope {slope} vs {expected}",
                p.family()
            );
        }
        let lhalf = spec(PenaltyFamily::LHalf, 1.0, 0.0);
        assert!(matches!(lhalf.rho(), Err(PenaltyError::Unsupported { .. })));
        assert!(matches!(lhalf.mu(), Err(PenaltyError::Unsupported { .. })));
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let specs = vec![
            spec(PenaltyFamily::L1, 1.3, 0.0),
            spec(PenaltyFamily::LHalf, 0.9, 0.0),
            spec(PenaltyFamily::Scad, 0.7, 3.7),
            spec(PenaltyFamily::Mcp, 1.1, 2.0),
            spec(PenaltyFamily::Firm, 1.1, 1.5),
            spec(PenaltyFamily::Log, 0.8, 2.0),
            spec(PenaltyFamily::Exp, 0.8, 2.0),
        ];
        for p in &specs {
            let bounds = kinks(p);
            let mut checked = 0;
            while checked < 50 {
                let t = 0.05 + rng.random::<f64>() * 5.0;
                let h = 1e-6 * t.max(1.0);
                if bounds.iter().any(|&k| (t - k).abs() < 2.0 * h) {
                    continue;
                }
                let fd = (p.value(t + h).unwrap() - p.value(t - h).unwrap()) / (2.0 * h);
                let an = p.derivative(t).unwrap();
                let tol = 1e-7 * (1.0 + an.abs());
                assert!(
                    (fd - an).abs() < tol,
                    "{:?} at t = {t}: fd {fd} vs analytic {an}",
                    p.family()
                );
                checked += 1;
            }
        }
    }

    #[test]
    fn l1_prox_is_soft_threshold() {
        let p = spec(PenaltyFamily::L1, 2.0, 0.0);
        assert_eq!(p.prox(5.0, 1.0).unwrap(), 3.0);
        assert_eq!(p.prox(-5.0, 1.0).unwrap(), -3.0);
        assert_eq!(p.prox(1.5, 1.0).unwrap(), 0.0);
        assert_eq!(p.prox(0.0, 1.0).unwrap(), 0.0);
        assert_eq!(soft_threshold(5.0, 2.0), 3.0);
        assert_eq!(soft_threshold(-1.0, 2.0), 0.0);
    }

    #[test]
    fn scad_prox_reduces_to_textbook_three_branch_form_at_unit_step() {
        let lambda = 0.9;
        let a = 3.7;
        let p = spec(PenaltyFamily::Scad, lambda, a);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let v = rng.random::<f64>() * 10.0 - 5.0;
            let x = v.abs();
            let expected = if x <= 2.0 * lambda {
                soft_threshold(v, lambda)
            } else if x <= a * lambda {
                ((a - 1.0) * v - v.signum() * a * lambda) / (a - 2.0)
            } else {
                v
            };
            let got = p.prox(v, 1.0).unwrap();
            assert!(
                (got - expected).abs() < 1e-12,
                "v = {v}: got {got}, expected {expected}"
            );
        }
    }

    #[test]
    fn prox_is_odd_and_shrinks_toward_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let specs = vec![
            spec(PenaltyFamily::L1, 0.6, 0.0),
            spec(PenaltyFamily::LHalf, 0.6, 0.0),
            spec(PenaltyFamily::Scad, 0.6, 3.7),
            spec(PenaltyFamily::Mcp, 0.6, 2.0),
            spec(PenaltyFamily::Firm, 0.6, 1.2),
            spec(PenaltyFamily::Log, 0.6, 2.0),
        ];
        for p in &specs {
            let cap = match p.mu() {
                Ok(mu) if mu > 0.0 => (0.9 / mu).min(1.0),
                _ => 1.0,
            };
            for _ in 0..200 {
                let v = rng.random::<f64>() * 12.0 - 6.0;
                let tau = cap * (0.1 + 0.9 * rng.random::<f64>());
                let u = p.prox(v, tau).unwrap();
                let m = p.prox(-v, tau).unwrap();
                assert_eq!(u, -m, "{:?} odd symmetry at v = {v}", p.family());
                assert!(u.abs() <= v.abs() + 1e-15, "{:?} expansion at v = {v}", p.family());
                assert!(u * v >= 0.0, "{:?} sign flip at v = {v}", p.family());
            }
        }
    }

    /// Fine argmin scan used as an independent check of the closed forms.
    fn grid_prox(p: &PenaltySpec, v: f64, tau: f64, step: f64) -> f64 {
        let x = v.abs();
        let n = (x / step).ceil() as usize;
        let mut best = 0.0;
        let mut best_h = 0.5 * x * x;
        for i in 1..=n {
            let u = (i as f64 * step).min(x);
            let h = 0.5 * (u - x) * (u - x) + tau * p.value(u).unwrap();
            if h < best_h {
                best = u;
                best_h = h;
            }
        }
        best.copysign(v)
    }

    #[test]
    fn closed_form_prox_matches_grid_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let specs = vec![
            spec(PenaltyFamily::L1, 0.9, 0.0),
            spec(PenaltyFamily::LHalf, 0.9, 0.0),
            spec(PenaltyFamily::Scad, 0.9, 3.0),
            spec(PenaltyFamily::Mcp, 0.9, 2.5),
            spec(PenaltyFamily::Firm, 0.9, 1.4),
            spec(PenaltyFamily::Log, 0.9, 1.8),
        ];
        for p in &specs {
            let cap = match p.mu() {
                Ok(mu) if mu > 0.0 => (0.9 / mu).min(1.0),
                _ => 1.0,
            };
            for _ in 0..25 {
                let v = rng.random::<f64>() * 8.0 - 4.0;
                let tau = cap * (0.2 + 0.8 * rng.random::<f64>());
                let closed = p.prox(v, tau).unwrap();
                let scanned = grid_prox(p, v, tau, 1e-4);
                assert!(
                    (closed - scanned).abs() <= 1e-3,
                    "{:?} at v = {v}, tau = {tau}: closed {closed} vs grid {scanned}",
                    p.family()
                );
            }
        }
    }

    #[test]
    fn log_prox_is_continuous_and_monotone_under_step_bound() {
        // With tau * mu < 1 the prox subproblem is strictly convex, so the
        // map must be single-valued: continuous across the zero/nonzero
        // switch and nondecreasing in the input.
        let p = spec(PenaltyFamily::Log, 4.0, 2.0);
        let tau = 0.9 / p.mu().unwrap();
        // Locate the switch by bisection on the prox output.
        let (mut lo, mut hi) = (0.0, 10.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if p.prox(mid, tau).unwrap() == 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert_eq!(p.prox(lo, tau).unwrap(), 0.0);
        let just_above = p.prox(hi, tau).unwrap();
        assert!(just_above.abs() < 1e-3, "jump of size {just_above} at the switch");
        let mut prev = 0.0;
        let mut v = 0.0;
        while v <= 6.0 {
            let u = p.prox(v, tau).unwrap();
            assert!(u >= prev - 1e-12, "prox decreased at v = {v}");
            prev = u;
            v += 1e-3;
        }
    }

    #[test]
    fn half_threshold_boundary() {
        let p = spec(PenaltyFamily::LHalf, 1.0, 0.0);
        let w: f64 = 0.7; // tau * lambda with tau = 0.7
        let thr = 1.5 * w.powf(2.0 / 3.0);
        assert_eq!(p.prox(thr * 0.999, 0.7).unwrap(), 0.0);
        let just_above = p.prox(thr * 1.001, 0.7).unwrap();
        // Lands near the tie point u = w^(2/3) = (2/3) * threshold.
        assert!(
            (just_above - w.powf(2.0 / 3.0)).abs() < 0.05,
            "got {just_above}"
        );
    }

    #[test]
    fn step_preconditions_are_enforced() {
        let p = spec(PenaltyFamily::Mcp, 1.0, 2.0); // mu = 0.5
        assert!(matches!(p.prox(1.0, 2.0), Err(PenaltyError::StepTooLarge(_))));
        assert!(matches!(p.prox(1.0, 0.0), Err(PenaltyError::InvalidStep(_))));
        assert!(p.prox(1.0, 1.9).is_ok());
        let e = spec(PenaltyFamily::Exp, 1.0, 1.0);
        assert!(matches!(e.prox(1.0, 0.1), Err(PenaltyError::Unsupported { .. })));
    }

    #[test]
    fn weights_clamp_flat_regions_and_fill_zeros() {
        let p = spec(PenaltyFamily::Scad, 1.0, 3.7);
        let beta = array![10.0, 0.0, -0.5];
        let w = p.weights(beta.view(), 1e-8).unwrap();
        assert_eq!(w[0], 1e-8); // flat region, clamped to the floor
        assert_eq!(w[1], 1.0); // origin slope lambda * rho
        assert_eq!(w[2], 1.0); // inner linear piece
        let log = spec(PenaltyFamily::Log, 2.0, 3.0);
        let w = log.weights(array![0.0].view(), 1e-8).unwrap();
        assert_eq!(w[0], 6.0);
        let lhalf = spec(PenaltyFamily::LHalf, 1.0, 0.0);
        assert!(lhalf.weights(beta.view(), 1e-8).is_err());
    }

    #[test]
    fn zero_lambda_degenerates_to_no_penalty() {
        for family in PenaltyFamily::ALL {
            let p = PenaltySpec::new(family, 0.0, None).unwrap();
            assert_eq!(p.value(2.3).unwrap(), 0.0);
            assert_eq!(p.derivative(2.3).unwrap(), 0.0);
            if family.has_prox() {
                let u = p.prox(-1.7, 0.5).unwrap();
                assert!((u + 1.7).abs() < 1e-12, "{family:?}: prox {u}");
            }
            if !matches!(family, PenaltyFamily::LHalf) {
                assert_eq!(p.mu().unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn spec_validation_rejects_bad_parameters() {
        assert!(PenaltySpec::new(PenaltyFamily::Scad, 1.0, Some(2.0)).is_err());
        assert!(PenaltySpec::new(PenaltyFamily::Mcp, 1.0, Some(0.0)).is_err());
        assert!(PenaltySpec::new(PenaltyFamily::L1, -1.0, None).is_err());
        assert!(PenaltySpec::new(PenaltyFamily::Log, 1.0, Some(-2.0)).is_err());
        assert!(PenaltySpec::new(PenaltyFamily::Scad, 1.0, None).is_ok());
    }

    #[test]
    fn value_and_derivative_domains() {
        let p = spec(PenaltyFamily::L1, 1.0, 0.0);
        assert!(matches!(p.value(-0.1), Err(PenaltyError::NegativeArgument(_))));
        assert!(matches!(p.derivative(0.0), Err(PenaltyError::NonpositiveArgument(_))));
    }

    #[test]
    fn curvature_infimum_bounded_by_modulus() {
        let specs = vec![
            spec(PenaltyFamily::Scad, 0.8, 3.7),
            spec(PenaltyFamily::Mcp, 0.8, 2.0),
            spec(PenaltyFamily::Firm, 0.8, 1.5),
            spec(PenaltyFamily::Log, 0.8, 2.0),
            spec(PenaltyFamily::Exp, 0.8, 2.0),
        ];
        for p in &specs {
            let mu = p.mu().unwrap();
            for &t in &[1e-6, 0.3, 0.8, 1.6, 4.0, 50.0] {
                let c = p.curvature_infimum(t).unwrap();
                assert!(c >= -mu - 1e-15, "{:?} at t = {t}: {c} < -mu", p.family());
                assert!(c <= 0.0);
            }
        }
        // At a kink the more negative side wins: scad at t = lambda.
        let scad = spec(PenaltyFamily::Scad, 1.0, 3.7);
        assert!((scad.curvature_infimum(1.0).unwrap() + 1.0 / 2.7).abs() < 1e-15);
        assert_eq!(scad.curvature_infimum(0.5).unwrap(), 0.0);
    }

    #[test]
    fn family_name_round_trip() {
        for family in PenaltyFamily::ALL {
            assert_eq!(PenaltyFamily::parse(family.name()).unwrap(), family);
        }
        assert!(PenaltyFamily::parse("ridge").is_err());
    }
}

//! Wasserstein-DRO quantities for inverse covariance estimation.
//!
//! Samples are lifted to matrices `W_i = X_i X_iᵀ` and transported under the
//! cost `c(U, V) = ‖vec(U) − vec(V)‖_q^ρ`. Under that cost:
//!
//! * the worst-case expected graphical loss over a ball of radius `δ` is
//!   `trace(K·A_n) − log|K| + δ^{1/ρ}‖vec(K)‖_p` with `1/p + 1/q = 1`;
//! * the robust Wasserstein profile of `K` (distance from the empirical
//!   measure to the nearest measure with mean `K⁻¹`) is
//!   `‖vec(A_n − K⁻¹)‖_q^ρ`.
//!
//! [`coupling`] holds explicit finite transport plans used to certify both
//! identities; [`montecarlo`] holds the sampling routines for the oracle
//! radius and the asymptotic law.

pub mod coupling;
pub mod montecarlo;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{vec_norm, NormOrder, SpdMatrix, SymMatrix};

pub use coupling::{translation_plan_cost, Coupling, Move};
pub use montecarlo::{limit_law_sample, oracle_radius, truth_profile_sample};

/// Transport-cost parameters `(q, ρ)`; the penalty order `p` is derived.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRwpConfig", into = "RawRwpConfig")]
pub struct RwpConfig {
    q: NormOrder,
    rho: f64,
}

#[derive(Serialize, Deserialize)]
struct RawRwpConfig {
    q: NormOrder,
    rho: f64,
}

impl TryFrom<RawRwpConfig> for RwpConfig {
    type Error = Error;
    fn try_from(raw: RawRwpConfig) -> Result<Self> {
        RwpConfig::new(raw.q, raw.rho)
    }
}

impl From<RwpConfig> for RawRwpConfig {
    fn from(c: RwpConfig) -> Self {
        RawRwpConfig { q: c.q, rho: c.rho }
    }
}

impl Default for RwpConfig {
    /// `q = ∞, ρ = 1`: the graphical lasso case.
    fn default() -> Self {
        RwpConfig { q: NormOrder::INFINITY, rho: 1.0 }
    }
}

impl RwpConfig {
    pub fn new(q: NormOrder, rho: f64) -> Result<Self> {
        if !(rho >= 1.0) || !rho.is_finite() {
            return Err(Error::InvalidInput(format!("rho must be finite and >= 1, got {rho}")));
        }
        Ok(RwpConfig { q, rho })
    }

    pub fn q(&self) -> NormOrder {
        self.q
    }

    pub fn p(&self) -> NormOrder {
        self.q.dual()
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Transport cost between two matrices.
    pub fn cost(&self, u: &SymMatrix, v: &SymMatrix) -> f64 {
        vec_norm(&u.sub(v), self.q).powf(self.rho)
    }
}

/// Wasserstein budget `δ` together with its regularization level `λ = δ^{1/ρ}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AmbiguityRadius {
    delta: f64,
    lambda: f64,
}

impl AmbiguityRadius {
    pub fn from_delta(delta: f64, cfg: &RwpConfig) -> Result<Self> {
        Ok(AmbiguityRadius { delta, lambda: radius_to_lambda(delta, cfg)? })
    }

    pub fn from_lambda(lambda: f64, cfg: &RwpConfig) -> Result<Self> {
        Ok(AmbiguityRadius { delta: lambda_to_radius(lambda, cfg)?, lambda })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// `λ = δ^{1/ρ}`.
pub fn radius_to_lambda(delta: f64, cfg: &RwpConfig) -> Result<f64> {
    if !(delta >= 0.0) {
        return Err(Error::NegativeInput(delta));
    }
    Ok(if cfg.rho == 1.0 { delta } else { delta.powf(1.0 / cfg.rho) })
}

/// `δ = λ^ρ`.
pub fn lambda_to_radius(lambda: f64, cfg: &RwpConfig) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::NegativeInput(lambda));
    }
    Ok(if cfg.rho == 1.0 { lambda } else { lambda.powf(cfg.rho) })
}

/// Robust Wasserstein profile `R_n(K) = ‖vec(A_n − K⁻¹)‖_q^ρ`.
pub fn rwp(a_n: &SymMatrix, k: &SpdMatrix, cfg: &RwpConfig) -> Result<f64> {
    let s = k.inverse()?;
    Ok(vec_norm(&a_n.sub(s.as_sym()), cfg.q).powf(cfg.rho))
}

/// Unit-`q`-norm symmetric `Δ` with `Σ k_ij Δ_ij = ‖vec(K)‖_p`, i.e. a
/// direction attaining equality in Hölder's inequality against `K`.
pub fn tight_holder_direction(k: &SymMatrix, cfg: &RwpConfig) -> Result<SymMatrix> {
    let max = k.max_abs();
    if max == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    let q = cfg.q;
    let d = k.dim();
    let raw = if q.is_infinite() {
        SymMatrix::from_fn(d, |i, j| sign_or_zero(k.get(i, j)))
    } else if q == NormOrder::ONE {
        // all mass on the entries of largest magnitude (symmetric pairs tie exactly)
        SymMatrix::from_fn(d, |i, j| {
            let v = k.get(i, j);
            if v.abs() == max {
                v.signum()
            } else {
                0.0
            }
        })
    } else {
        let exponent = cfg.p().value() - 1.0;
        SymMatrix::from_fn(d, |i, j| {
            let v = k.get(i, j);
            sign_or_zero(v) * (v.abs() / max).powf(exponent)
        })
    };
    let norm = vec_norm(&raw, q);
    Ok(raw.scale(1.0 / norm))
}

fn sign_or_zero(v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v.signum()
    }
}

/// Graphical loss `trace(K·A) − log|K|` at a (possibly empirical) second moment `A`.
pub fn graphical_loss(a: &SymMatrix, k: &SpdMatrix) -> f64 {
    k.as_sym().inner(a) - k.log_det()
}

/// Worst-case expected graphical loss over the Wasserstein ball:
/// `trace(K·A_n) − log|K| + δ^{1/ρ}‖vec(K)‖_p`.
pub fn worst_case_objective(
    a_n: &SymMatrix,
    k: &SpdMatrix,
    radius: &AmbiguityRadius,
    cfg: &RwpConfig,
) -> f64 {
    graphical_loss(a_n, k) + radius.lambda * vec_norm(k.as_sym(), cfg.p())
}

//! Robust selection of the regularization level by bootstrapping the sample
//! covariance.
//!
//! For `b = 1..B` the rows are resampled with replacement and the bootstrap
//! profile statistic `R*_b = ‖vec(A*_b − A_n)‖_q` is recorded; λ is the
//! `(B+1)(1−α)`-th order statistic. No graphical lasso fit is involved.

use ndarray::Axis;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{sample_covariance, vec_norm, Dataset, NormOrder, SymMatrix};
use crate::seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobselConfig {
    pub alpha: f64,
    pub b: usize,
    pub q: NormOrder,
    pub seed: u64,
}

impl RobselConfig {
    pub fn new(alpha: f64, b: usize, q: NormOrder, seed: u64) -> Result<Self> {
        let cfg = RobselConfig { alpha, b, q, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidAlpha(self.alpha));
        }
        if self.b == 0 {
            return Err(Error::Config("bootstrap count must be positive".into()));
        }
        Ok(())
    }

    /// Whether `(B+1)(1−α)` is an integer, so no rounding is needed.
    pub fn index_is_exact(&self) -> bool {
        let x = (self.b as f64 + 1.0) * (1.0 - self.alpha);
        (x - x.round()).abs() < 1e-9
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RobselResult {
    pub lambda: f64,
    /// `R*_{n,b}` in replicate order.
    pub bootstrap_stats: Vec<f64>,
    /// 1-based order statistic used for λ.
    pub order_index: usize,
    /// Every bootstrap statistic was zero (e.g. all rows identical).
    pub degenerate: bool,
}

impl RobselResult {
    /// λ for another α from the same bootstrap draws.
    pub fn lambda_at(&self, alpha: f64) -> f64 {
        let idx = order_statistic_index(self.bootstrap_stats.len(), alpha);
        nth_smallest(&self.bootstrap_stats, idx)
    }
}

/// `(B+1)(1−α)` when integral; otherwise its ceiling, clamped to `[1, B]`.
/// Rounding up picks the larger λ.
pub fn order_statistic_index(b: usize, alpha: f64) -> usize {
    let x = (b as f64 + 1.0) * (1.0 - alpha);
    let r = x.round();
    let idx = if (x - r).abs() < 1e-9 { r } else { x.ceil() };
    (idx as usize).clamp(1, b.max(1))
}

fn nth_smallest(values: &[f64], index: usize) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted[index - 1]
}

/// `B` bootstrap statistics `‖vec(A*_b − A_n)‖_q`. Replicate `b` draws its
/// row indices from an RNG seeded by `(seed, b)`.
pub fn bootstrap_stats(data: &Dataset, b: usize, q: NormOrder, seed: u64) -> Result<Vec<f64>> {
    let n = data.n();
    if n < 2 {
        return Err(Error::InvalidInput(format!("bootstrap needs at least 2 rows, got {n}")));
    }
    let a_n = sample_covariance(data);
    let rows = data.rows();
    let stats = (0..b)
        .into_par_iter()
        .map(|rep| {
            let mut rng = seed::rng_for(seed, &[seed::stream::BOOTSTRAP, rep as u64]);
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let x = rows.select(Axis(0), &idx);
            let a_star = SymMatrix::symmetrized(x.t().dot(&x) / n as f64);
            vec_norm(&a_star.sub(&a_n), q)
        })
        .collect();
    Ok(stats)
}

pub fn robsel_lambda(data: &Dataset, cfg: &RobselConfig) -> Result<RobselResult> {
    cfg.validate()?;
    let stats = bootstrap_stats(data, cfg.b, cfg.q, cfg.seed)?;
    let order_index = order_statistic_index(cfg.b, cfg.alpha);
    let lambda = nth_smallest(&stats, order_index);
    let degenerate = stats.iter().all(|&s| s == 0.0);
    if degenerate {
        log::warn!("all bootstrap statistics are zero; the data has no variability and lambda = 0");
    }
    Ok(RobselResult { lambda, bootstrap_stats: stats, order_index, degenerate })
}

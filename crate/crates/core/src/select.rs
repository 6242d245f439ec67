//! Choosing λ: k-fold cross-validation on the graphical loss, plus a common
//! result type for the bootstrap and oracle rules.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glasso::{lambda_max, solve, GlassoProblem, SolverOptions};
use crate::linalg::{sample_covariance, Dataset, NormOrder, SpdMatrix, SymMatrix};
use crate::robsel::{robsel_lambda, RobselConfig};
use crate::rwp::{graphical_loss, oracle_radius, RwpConfig};
use crate::seed;

pub const DEFAULT_GRID_LEN: usize = 50;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub folds: usize,
    /// Candidate λ values, strictly decreasing.
    pub grid: Vec<f64>,
    pub seed: u64,
    pub penalize_diagonal: bool,
}

impl CvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::Config(format!("need at least 2 folds, got {}", self.folds)));
        }
        if self.grid.is_empty() {
            return Err(Error::Config("lambda grid is empty".into()));
        }
        if self.grid.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::Config("lambda grid values must be positive and finite".into()));
        }
        if self.grid.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config("lambda grid must be strictly decreasing".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Robsel,
    Cv,
    RwpOracle,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Robsel => "robsel",
            Method::Cv => "cv",
            Method::RwpOracle => "rwp_oracle",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Diagnostics {
    /// Mean validation loss per grid value.
    CvLosses { grid: Vec<f64>, losses: Vec<f64> },
    BootstrapStats(Vec<f64>),
    None,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelectionResult {
    pub lambda: f64,
    pub method: Method,
    pub alpha: Option<f64>,
    pub diagnostics: Diagnostics,
}

/// Log-spaced descending grid from `lambda_max(a_n)` down to a thousandth of it.
pub fn default_grid(a_n: &SymMatrix, length: usize) -> Result<Vec<f64>> {
    if length < 2 {
        return Err(Error::Config(format!("grid length must be at least 2, got {length}")));
    }
    let top = lambda_max(a_n, true);
    if !(top > 0.0) {
        return Err(Error::InvalidInput("covariance has no off-diagonal signal; lambda_max = 0".into()));
    }
    let (hi, lo) = (top.ln(), (top / 1000.0).ln());
    let step = (hi - lo) / (length - 1) as f64;
    Ok((0..length)
        .map(|i| if i == length - 1 { top / 1000.0 } else { (hi - step * i as f64).exp() })
        .collect())
}

/// Seeded shuffle of `0..n` cut into `folds` contiguous blocks; the first
/// `n % folds` blocks get one extra row.
pub fn fold_partition(n: usize, folds: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seed::rng_for(seed, &[seed::stream::CV_SHUFFLE]));
    let base = n / folds;
    let extra = n % folds;
    let mut out = Vec::with_capacity(folds);
    let mut start = 0;
    for f in 0..folds {
        let len = base + usize::from(f < extra);
        out.push(idx[start..start + len].to_vec());
        start += len;
    }
    out
}

/// Mean validation loss per grid value. With `warm_start`, each fold walks the
/// grid in order and starts from the previous fit.
pub fn cv_losses(data: &Dataset, cfg: &CvConfig, warm_start: bool) -> Result<Vec<f64>> {
    cfg.validate()?;
    let n = data.n();
    if n < cfg.folds {
        return Err(Error::FoldTooSmall(format!("{n} rows cannot fill {} folds", cfg.folds)));
    }
    let parts = fold_partition(n, cfg.folds, cfg.seed);
    let largest = parts.iter().map(Vec::len).max().unwrap_or(0);
    if n - largest < 2 {
        return Err(Error::FoldTooSmall(format!("training folds would have {} rows", n - largest)));
    }

    let per_fold: Vec<Vec<f64>> = parts
        .par_iter()
        .enumerate()
        .map(|(f, val_idx)| {
            let train_idx: Vec<usize> = parts
                .iter()
                .enumerate()
                .filter(|&(g, _)| g != f)
                .flat_map(|(_, p)| p.iter().copied())
                .collect();
            let a_train = sample_covariance(&data.select(&train_idx)?);
            let a_val = sample_covariance(&data.select(val_idx)?);
            fold_path(f, &a_train, &a_val, cfg, warm_start)
        })
        .collect::<Result<_>>()?;

    let k = cfg.folds as f64;
    Ok((0..cfg.grid.len())
        .map(|j| per_fold.iter().map(|l| l[j]).sum::<f64>() / k)
        .collect())
}

fn fold_path(
    fold: usize,
    a_train: &SymMatrix,
    a_val: &SymMatrix,
    cfg: &CvConfig,
    warm_start: bool,
) -> Result<Vec<f64>> {
    let mut losses = Vec::with_capacity(cfg.grid.len());
    let mut prev: Option<SpdMatrix> = None;
    for &lambda in &cfg.grid {
        let problem = GlassoProblem::new(a_train.clone(), lambda, NormOrder::ONE, cfg.penalize_diagonal)?;
        let mut opts = SolverOptions::default();
        if warm_start {
            opts.warm_start = prev.take();
        }
        let fit = solve(&problem, &opts).and_then(|s| s.require_converged());
        match fit {
            Ok(sol) => {
                losses.push(graphical_loss(a_val, &sol.k_hat));
                prev = Some(sol.k_hat);
            }
            Err(Error::NoSolution(_)) | Err(Error::NotPositiveDefinite { .. }) => {
                losses.push(f64::INFINITY);
            }
            Err(e) => return Err(Error::SolverFailure { fold, lambda, source: Box::new(e) }),
        }
    }
    Ok(losses)
}

pub fn cv_select(data: &Dataset, cfg: &CvConfig) -> Result<SelectionResult> {
    let losses = cv_losses(data, cfg, true)?;
    // strict comparison keeps the earliest, i.e. largest, λ on ties
    let mut best = 0;
    for j in 1..losses.len() {
        if losses[j] < losses[best] {
            best = j;
        }
    }
    if !losses[best].is_finite() {
        return Err(Error::NoSolution("every grid value failed on some fold".into()));
    }
    Ok(SelectionResult {
        lambda: cfg.grid[best],
        method: Method::Cv,
        alpha: None,
        diagnostics: Diagnostics::CvLosses { grid: cfg.grid.clone(), losses },
    })
}

pub fn robsel_select(data: &Dataset, cfg: &RobselConfig) -> Result<SelectionResult> {
    let r = robsel_lambda(data, cfg)?;
    Ok(SelectionResult {
        lambda: r.lambda,
        method: Method::Robsel,
        alpha: Some(cfg.alpha),
        diagnostics: Diagnostics::BootstrapStats(r.bootstrap_stats),
    })
}

pub fn oracle_select(
    sigma: &SpdMatrix,
    n: usize,
    alpha: f64,
    cfg: &RwpConfig,
    reps: usize,
    seed: u64,
) -> Result<SelectionResult> {
    Ok(SelectionResult {
        lambda: oracle_radius(sigma, n, alpha, cfg, reps, seed)?,
        method: Method::RwpOracle,
        alpha: Some(alpha),
        diagnostics: Diagnostics::None,
    })
}

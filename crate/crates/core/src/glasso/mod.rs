//! Penalized Gaussian log-likelihood estimation of a precision matrix:
//!
//! ```text
//! minimize  trace(K·A) − log|K| + λ‖vec(K)‖_p   over K ≻ 0
//! ```
//!
//! `p = 1` is the graphical lasso and is solved by exact block coordinate
//! descent over the rows/columns of `K` (see [`coordinate`]). `p ∈ {2, ∞}`
//! is solved by proximal gradient with a positive-definiteness safeguard
//! (see [`proximal`]).

mod coordinate;
mod proximal;

use crate::error::{Error, Result};
use crate::linalg::{vec_norm, NormOrder, SpdMatrix, SymMatrix};

/// Entries at or below this magnitude count as zero in the KKT certificate.
pub const ZERO_THRESHOLD: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct GlassoProblem {
    a: SymMatrix,
    lambda: f64,
    p: NormOrder,
    penalize_diagonal: bool,
}

impl GlassoProblem {
    pub fn new(a: SymMatrix, lambda: f64, p: NormOrder, penalize_diagonal: bool) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidInput(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        if !(p == NormOrder::ONE || p == NormOrder::TWO || p.is_infinite()) {
            return Err(Error::InvalidInput(format!("penalty order must be 1, 2 or inf, got {p}")));
        }
        if p != NormOrder::ONE && !penalize_diagonal {
            return Err(Error::InvalidInput(
                "an unpenalized diagonal is only defined for the l1 penalty".into(),
            ));
        }
        if !a.is_finite() {
            return Err(Error::InvalidInput("covariance has non-finite entries".into()));
        }
        Ok(GlassoProblem { a, lambda, p, penalize_diagonal })
    }

    /// The graphical lasso: `p = 1` with the diagonal penalized.
    pub fn graphical_lasso(a: SymMatrix, lambda: f64) -> Result<Self> {
        Self::new(a, lambda, NormOrder::ONE, true)
    }

    pub fn a(&self) -> &SymMatrix {
        &self.a
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn p(&self) -> NormOrder {
        self.p
    }

    pub fn penalize_diagonal(&self) -> bool {
        self.penalize_diagonal
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    /// Same problem at a different λ.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.a.clone(), lambda, self.p, self.penalize_diagonal)
    }

    pub fn penalty(&self, k: &SymMatrix) -> f64 {
        if self.p == NormOrder::ONE && !self.penalize_diagonal {
            let d = k.dim();
            let mut s = 0.0;
            for i in 0..d {
                for j in 0..d {
                    if i != j {
                        s += k.get(i, j).abs();
                    }
                }
            }
            s
        } else {
            vec_norm(k, self.p)
        }
    }

    /// Penalty weight on entry `(i, j)` for the `p = 1` problem.
    fn l1_weight(&self, i: usize, j: usize) -> f64 {
        if i == j && !self.penalize_diagonal {
            0.0
        } else {
            self.lambda
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    /// Bound on both the max-entry change of `K` and the KKT residual.
    pub tol: f64,
    pub max_iter: usize,
    /// Stopping tolerance for the inner per-column lasso.
    pub inner_tol: f64,
    pub inner_max_iter: usize,
    pub warm_start: Option<SpdMatrix>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-6,
            max_iter: 500,
            inner_tol: 1e-12,
            inner_max_iter: 10_000,
            warm_start: None,
        }
    }
}

impl SolverOptions {
    pub fn with_warm_start(mut self, k: SpdMatrix) -> Self {
        self.warm_start = Some(k);
        self
    }
}

#[derive(Clone, Debug)]
pub struct GlassoSolution {
    pub k_hat: SpdMatrix,
    pub objective: f64,
    pub iterations: usize,
    pub kkt_residual: f64,
    pub converged: bool,
    /// Objective after each outer iteration, starting with the initial point.
    pub history: Vec<f64>,
}

impl GlassoSolution {
    /// Turns a non-converged solution into [`Error::MaxIterationsExceeded`].
    pub fn require_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::MaxIterationsExceeded {
                iterations: self.iterations,
                kkt_residual: self.kkt_residual,
            })
        }
    }
}

/// `trace(K·A) − log|K| + λ·penalty(K)`.
pub fn objective(problem: &GlassoProblem, k: &SpdMatrix) -> f64 {
    let s = k.as_sym();
    s.inner(&problem.a) - k.log_det() + problem.lambda * problem.penalty(s)
}

/// Smallest λ at which the `p = 1` estimate is diagonal: `max_{i≠j} |a_ij|`.
/// The value is the same whether or not the diagonal is penalized.
pub fn lambda_max(a: &SymMatrix, _penalize_diagonal: bool) -> f64 {
    a.max_abs_off_diagonal()
}

/// Stationarity residual of `A − K⁻¹ + λG = 0`, `G ∈ ∂penalty(K)`, given
/// `s = K⁻¹`.
///
/// For `p = 1` this is the entrywise certificate: `|a_ij − s_ij + λ sign(k_ij)|`
/// on the support and `(|a_ij − s_ij| − λ)₊` off it. For `p ∈ {2, ∞}` it is
/// the max-entry norm of the unit-step gradient mapping
/// `K − prox_λ(K − (A − S))`, which vanishes exactly at optima.
pub fn kkt_residual(problem: &GlassoProblem, k: &SymMatrix, s: &SymMatrix) -> f64 {
    let d = k.dim();
    if problem.p == NormOrder::ONE {
        let mut worst = 0.0_f64;
        for i in 0..d {
            for j in 0..d {
                let g = problem.a.get(i, j) - s.get(i, j);
                let w = problem.l1_weight(i, j);
                let kij = k.get(i, j);
                let r = if kij.abs() > ZERO_THRESHOLD {
                    (g + w * kij.signum()).abs()
                } else {
                    (g.abs() - w).max(0.0)
                };
                worst = worst.max(r);
            }
        }
        worst
    } else {
        let grad = problem.a.sub(s);
        let step = k.sub(&grad);
        let next = proximal::prox(&step, problem.lambda, problem.p);
        k.sub(&next).max_abs()
    }
}

/// Minimizes the penalized objective.
///
/// A run that hits `opts.max_iter` is returned with `converged = false`; use
/// [`GlassoSolution::require_converged`] to turn that into an error.
pub fn solve(problem: &GlassoProblem, opts: &SolverOptions) -> Result<GlassoSolution> {
    let d = problem.dim();
    if let Some(k0) = &opts.warm_start {
        if k0.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: k0.dim() });
        }
    }
    if problem.lambda == 0.0 && SpdMatrix::new(problem.a.clone()).is_err() {
        return Err(Error::NoSolution(
            "lambda = 0 requires a positive definite covariance".into(),
        ));
    }
    if problem.p == NormOrder::ONE {
        coordinate::solve(problem, opts)
    } else {
        proximal::solve(problem, opts)
    }
}

/// Diagonal starting point `diag(1 / (a_jj + w_jj))`.
fn diagonal_start(problem: &GlassoProblem) -> Result<SpdMatrix> {
    let d = problem.dim();
    let mut diag = Vec::with_capacity(d);
    for j in 0..d {
        let denom = problem.a.get(j, j) + problem.l1_weight(j, j);
        if !(denom > 0.0) {
            return Err(Error::NoSolution(format!(
                "variable {j} has zero variance and an unpenalized diagonal"
            )));
        }
        diag.push(1.0 / denom);
    }
    SpdMatrix::new(SymMatrix::from_diag(&diag))
}

//! Block coordinate descent for the `p = 1` problem.
//!
//! Each block is one row/column `j` of `K`. Writing `K₁₁` for `K` without
//! row/column `j` and `c = k_jj − k₁₂ᵀK₁₁⁻¹k₁₂` for the Schur complement, the
//! objective restricted to the block separates into
//!
//! ```text
//! c·ã − log c            ⇒ c = 1/ã,           ã = a_jj + w_jj
//! ½ xᵀ(ã·K₁₁⁻¹)x + a₁₂ᵀx + λ‖x‖₁   over x = k₁₂   (a lasso)
//! ```
//!
//! so every block update is an exact minimization (the lasso is solved by
//! cyclic coordinate descent), `K` stays positive definite, and the
//! objective never increases. `W = K⁻¹` is kept in sync by rank-one updates
//! and refreshed from scratch after every sweep.

use ndarray::{Array1, Array2};

use super::{diagonal_start, kkt_residual, objective, GlassoProblem, GlassoSolution, SolverOptions};
use crate::error::{Error, Result};
use crate::linalg::{SpdMatrix, SymMatrix};

fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Cyclic coordinate descent for `min ½xᵀQx + bᵀx + λ‖x‖₁`, warm-started at `x`.
fn lasso_cd(q: &Array2<f64>, b: &Array1<f64>, lambda: f64, x: &mut Array1<f64>, tol: f64, max_iter: usize) {
    let m = x.len();
    let mut qx = q.dot(x);
    for _ in 0..max_iter {
        let mut max_delta = 0.0_f64;
        let mut max_x = 0.0_f64;
        for i in 0..m {
            let qii = q[[i, i]];
            let old = x[i];
            let partial = qx[i] - qii * old + b[i];
            let new = soft_threshold(-partial, lambda) / qii;
            let delta = new - old;
            if delta != 0.0 {
                x[i] = new;
                qx.scaled_add(delta, &q.column(i));
                max_delta = max_delta.max(delta.abs());
            }
            max_x = max_x.max(new.abs());
        }
        if max_delta <= tol * max_x.max(1.0) {
            break;
        }
    }
}

pub(super) fn solve(problem: &GlassoProblem, opts: &SolverOptions) -> Result<GlassoSolution> {
    let d = problem.dim();
    let a = problem.a().as_array();
    let lambda = problem.lambda();

    let start = match &opts.warm_start {
        Some(k0) => k0.clone(),
        None => diagonal_start(problem)?,
    };
    let diag_scale: Vec<f64> = (0..d).map(|j| a[[j, j]] + problem.l1_weight(j, j)).collect();
    if let Some(j) = diag_scale.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::NoSolution(format!(
            "variable {j} has zero variance and an unpenalized diagonal"
        )));
    }

    let mut k = start.as_sym().as_array().clone();
    let mut w = start.inverse()?.into_sym().into_array();
    let mut current = start;
    let mut history = vec![objective(problem, &current)];
    let mut kkt = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    if d == 1 {
        let k_hat = SpdMatrix::new(SymMatrix::from_diag(&[1.0 / diag_scale[0]]))?;
        let s = k_hat.inverse()?;
        let obj = objective(problem, &k_hat);
        history.push(obj);
        return Ok(GlassoSolution {
            kkt_residual: kkt_residual(problem, k_hat.as_sym(), s.as_sym()),
            k_hat,
            objective: obj,
            iterations: 1,
            converged: true,
            history,
        });
    }

    let mut q = Array2::<f64>::zeros((d - 1, d - 1));
    let mut b = Array1::<f64>::zeros(d - 1);
    let mut x = Array1::<f64>::zeros(d - 1);
    let mut idx = Vec::with_capacity(d - 1);

    while iterations < opts.max_iter {
        iterations += 1;
        let previous = k.clone();

        for j in 0..d {
            idx.clear();
            idx.extend((0..d).filter(|&i| i != j));
            let scale = diag_scale[j];
            let wjj = w[[j, j]];
            // Q = ã · K₁₁⁻¹, with K₁₁⁻¹ = W₁₁ − w₁₂w₁₂ᵀ / w_jj
            for (r, &ir) in idx.iter().enumerate() {
                b[r] = a[[ir, j]];
                x[r] = k[[ir, j]];
                for (c, &ic) in idx.iter().enumerate() {
                    q[[r, c]] = scale * (w[[ir, ic]] - w[[ir, j]] * w[[ic, j]] / wjj);
                }
            }
            lasso_cd(&q, &b, lambda, &mut x, opts.inner_tol, opts.inner_max_iter);

            // u = K₁₁⁻¹ x
            let u = q.dot(&x) / scale;
            let kjj = 1.0 / scale + x.dot(&u);
            for (r, &ir) in idx.iter().enumerate() {
                k[[ir, j]] = x[r];
                k[[j, ir]] = x[r];
            }
            k[[j, j]] = kjj;
            // block inverse with Schur complement 1/ã
            for (r, &ir) in idx.iter().enumerate() {
                for (c, &ic) in idx.iter().enumerate() {
                    w[[ir, ic]] = w[[ir, ic]] - w[[ir, j]] * w[[ic, j]] / wjj + scale * u[r] * u[c];
                }
            }
            for (r, &ir) in idx.iter().enumerate() {
                w[[ir, j]] = -scale * u[r];
                w[[j, ir]] = -scale * u[r];
            }
            w[[j, j]] = scale;
        }

        current = SpdMatrix::new(SymMatrix::symmetrized(k.clone()))?;
        let s = current.inverse()?;
        w = s.as_sym().as_array().clone();
        history.push(objective(problem, &current));

        let change = (&k - &previous).iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        kkt = kkt_residual(problem, current.as_sym(), s.as_sym());
        if change < opts.tol && kkt < opts.tol {
            converged = true;
            break;
        }
    }

    if !converged {
        let s = current.inverse()?;
        kkt = kkt_residual(problem, current.as_sym(), s.as_sym());
        log::debug!("graphical lasso stopped after {iterations} sweeps, kkt residual {kkt:e}");
    }
    let objective = *history.last().expect("history is non-empty");
    Ok(GlassoSolution {
        k_hat: current,
        objective,
        iterations,
        kkt_residual: kkt,
        converged,
        history,
    })
}

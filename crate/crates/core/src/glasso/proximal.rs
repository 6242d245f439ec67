//! Proximal gradient for the `p ∈ {2, ∞}` penalties.
//!
//! Steps start from a Barzilai–Borwein estimate and are halved until the
//! candidate is positive definite and satisfies a sufficient-decrease test on
//! the full objective, so the objective sequence is monotone.

use super::{diagonal_start, kkt_residual, objective, GlassoProblem, GlassoSolution, SolverOptions};
use crate::error::{Error, Result};
use crate::linalg::{vec_norm, NormOrder, SpdMatrix, SymMatrix};

const SUFFICIENT_DECREASE: f64 = 1e-4;
const MIN_STEP: f64 = 1e-14;

/// Euclidean projection of `v` onto the ℓ1 ball of the given radius.
fn project_l1_ball(v: &[f64], radius: f64) -> Vec<f64> {
    let l1: f64 = v.iter().map(|x| x.abs()).sum();
    if l1 <= radius {
        return v.to_vec();
    }
    if radius <= 0.0 {
        return vec![0.0; v.len()];
    }
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &m) in mags.iter().enumerate() {
        cumsum += m;
        let t = (cumsum - radius) / (i + 1) as f64;
        if m > t {
            theta = t;
        } else {
            break;
        }
    }
    v.iter()
        .map(|x| x.signum() * (x.abs() - theta).max(0.0))
        .collect()
}

/// `prox_{t‖vec(·)‖_p}(m)` for `p ∈ {2, ∞}`.
pub(super) fn prox(m: &SymMatrix, t: f64, p: NormOrder) -> SymMatrix {
    if p == NormOrder::TWO {
        let norm = vec_norm(m, NormOrder::TWO);
        if norm <= t {
            SymMatrix::zeros(m.dim())
        } else {
            m.scale(1.0 - t / norm)
        }
    } else if p.is_infinite() {
        // Moreau: prox of t‖·‖∞ is the residual of projecting onto the ℓ1 ball
        let v: Vec<f64> = m.as_array().iter().copied().collect();
        let proj = project_l1_ball(&v, t);
        let d = m.dim();
        SymMatrix::from_fn(d, |i, j| v[i * d + j] - proj[i * d + j])
    } else {
        unreachable!("proximal path only handles p = 2 and p = inf")
    }
}

pub(super) fn solve(problem: &GlassoProblem, opts: &SolverOptions) -> Result<GlassoSolution> {
    let lambda = problem.lambda();
    let p = problem.p();
    let mut current = match &opts.warm_start {
        Some(k0) => k0.clone(),
        None => diagonal_start(problem)?,
    };
    let mut s = current.inverse()?;
    let mut grad = problem.a().sub(s.as_sym());
    let mut f = objective(problem, &current);
    let mut history = vec![f];
    let mut step = 1.0;
    let mut kkt = kkt_residual(problem, current.as_sym(), s.as_sym());
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        iterations += 1;
        let (next, f_next) = loop {
            let trial = prox(&current.as_sym().sub(&grad.scale(step)), step * lambda, p);
            if let Ok(candidate) = SpdMatrix::new(trial) {
                let f_trial = objective(problem, &candidate);
                let moved = vec_norm(&candidate.as_sym().sub(current.as_sym()), NormOrder::TWO);
                if f_trial <= f - SUFFICIENT_DECREASE / (2.0 * step) * moved * moved {
                    break (candidate, f_trial);
                }
            }
            step *= 0.5;
            if step < MIN_STEP {
                return Err(Error::NoSolution("proximal line search failed to find a descent step".into()));
            }
        };

        let s_next = next.inverse()?;
        let grad_next = problem.a().sub(s_next.as_sym());
        let ds = next.as_sym().sub(current.as_sym());
        let dg = grad_next.sub(&grad);
        let change = ds.max_abs();
        let curvature = ds.inner(&dg);
        step = if curvature > 0.0 {
            (ds.inner(&ds) / curvature).clamp(1e-10, 1e10)
        } else {
            step * 2.0
        };

        current = next;
        s = s_next;
        grad = grad_next;
        f = f_next;
        history.push(f);
        kkt = kkt_residual(problem, current.as_sym(), s.as_sym());
        if change < opts.tol && kkt < opts.tol {
            converged = true;
            break;
        }
    }

    Ok(GlassoSolution {
        k_hat: current,
        objective: f,
        iterations,
        kkt_residual: kkt,
        converged,
        history,
    })
}

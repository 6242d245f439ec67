//! Finite transport plans from the empirical measure of `W_1..W_n`.

use crate::error::{Error, Result};
use crate::linalg::{SpdMatrix, SymMatrix};

use super::{graphical_loss, RwpConfig};

/// One piece of a plan: `mass` moved from source `source` to `target`.
#[derive(Clone, Debug)]
pub struct Move {
    pub source: usize,
    pub mass: f64,
    pub target: SymMatrix,
}

/// A coupling whose first marginal is the uniform empirical measure on
/// `sources` (each source carries mass `1/n`).
#[derive(Clone, Debug)]
pub struct Coupling {
    sources: Vec<SymMatrix>,
    moves: Vec<Move>,
}

impl Coupling {
    /// Validates that each source ships exactly its `1/n` mass.
    pub fn new(sources: Vec<SymMatrix>, moves: Vec<Move>) -> Result<Self> {
        let n = sources.len();
        if n == 0 {
            return Err(Error::InvalidInput("coupling needs at least one source".into()));
        }
        let mut shipped = vec![0.0; n];
        for m in &moves {
            if m.source >= n || !(m.mass >= 0.0) {
                return Err(Error::InvalidInput(format!("invalid move from source {}", m.source)));
            }
            shipped[m.source] += m.mass;
        }
        let each = 1.0 / n as f64;
        if let Some(i) = shipped.iter().position(|s| (s - each).abs() > 1e-12) {
            return Err(Error::InvalidInput(format!(
                "source {i} ships mass {} instead of {each}",
                shipped[i]
            )));
        }
        Ok(Coupling { sources, moves })
    }

    /// Moves every source by the same `shift`.
    pub fn translation(sources: Vec<SymMatrix>, shift: &SymMatrix) -> Result<Self> {
        let mass = 1.0 / sources.len().max(1) as f64;
        let moves = sources
            .iter()
            .enumerate()
            .map(|(i, w)| Move { source: i, mass, target: w.add(shift) })
            .collect();
        Coupling::new(sources, moves)
    }

    /// Moves source `i` by `shifts[i]`.
    pub fn per_source(sources: Vec<SymMatrix>, shifts: &[SymMatrix]) -> Result<Self> {
        if shifts.len() != sources.len() {
            return Err(Error::DimensionMismatch { expected: sources.len(), got: shifts.len() });
        }
        let mass = 1.0 / sources.len().max(1) as f64;
        let moves = sources
            .iter()
            .zip(shifts)
            .enumerate()
            .map(|(i, (w, s))| Move { source: i, mass, target: w.add(s) })
            .collect();
        Coupling::new(sources, moves)
    }

    pub fn sources(&self) -> &[SymMatrix] {
        &self.sources
    }

    pub fn moves(&self) -> &[Move] {
        &self.moves
    }

    /// `E_π[c(U, V)]`.
    pub fn cost(&self, cfg: &RwpConfig) -> f64 {
        self.moves
            .iter()
            .map(|m| m.mass * cfg.cost(&m.target, &self.sources[m.source]))
            .sum()
    }

    pub fn source_mean(&self) -> SymMatrix {
        let d = self.sources[0].dim();
        let w = 1.0 / self.sources.len() as f64;
        self.sources
            .iter()
            .fold(SymMatrix::zeros(d), |acc, s| acc.add(&s.scale(w)))
    }

    /// Mean of the second marginal.
    pub fn target_mean(&self) -> SymMatrix {
        let d = self.sources[0].dim();
        self.moves
            .iter()
            .fold(SymMatrix::zeros(d), |acc, m| acc.add(&m.target.scale(m.mass)))
    }

    /// Expected graphical loss under the second marginal.
    pub fn target_expected_loss(&self, k: &SpdMatrix) -> f64 {
        graphical_loss(&self.target_mean(), k)
    }
}

/// Cost of the plan that shifts every `W_i` by `K⁻¹ − A_n`, making `K`
/// loss-optimal for the transported measure. This plan is feasible for the
/// profile problem, so its cost bounds `R_n(K)` from above; for `ρ = 1` it is
/// also optimal by Jensen's inequality.
pub fn translation_plan_cost(data_w: &[SymMatrix], k: &SpdMatrix, cfg: &RwpConfig) -> Result<f64> {
    if data_w.is_empty() {
        return Err(Error::InvalidInput("no samples".into()));
    }
    let s = k.inverse()?;
    let n = data_w.len() as f64;
    let a_n = data_w
        .iter()
        .fold(SymMatrix::zeros(k.dim()), |acc, w| acc.add(&w.scale(1.0 / n)));
    let shift = s.as_sym().sub(&a_n);
    let plan = Coupling::translation(data_w.to_vec(), &shift)?;
    debug_assert!(plan.target_mean().sub(s.as_sym()).max_abs() <= 1e-9 * s.as_sym().max_abs().max(1.0));
    Ok(plan.cost(cfg))
}

//! Ground-truth generation: sparse precision matrices from Erdős–Rényi graphs
//! and zero-mean Gaussian samples with covariance `Ω⁻¹`.

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Dataset, SpdMatrix, SymMatrix};
use crate::seed::{self, Rng as SeededRng};

/// Row-sum level rows are rescaled to when they exceed it.
const DOMINANCE_TARGET: f64 = 2.0 / 3.0;
const MAX_DOMINANCE_PASSES: usize = 50;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrecisionSpec {
    pub d: usize,
    pub edge_prob: f64,
    #[serde(default = "default_weight_low")]
    pub weight_low: f64,
    #[serde(default = "default_weight_high")]
    pub weight_high: f64,
    pub seed: u64,
}

fn default_weight_low() -> f64 {
    0.5
}

fn default_weight_high() -> f64 {
    1.0
}

impl PrecisionSpec {
    pub fn new(d: usize, edge_prob: f64, seed: u64) -> Result<Self> {
        let spec = PrecisionSpec {
            d,
            edge_prob,
            weight_low: default_weight_low(),
            weight_high: default_weight_high(),
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::Config("dimension must be positive".into()));
        }
        if !(self.edge_prob > 0.0 && self.edge_prob < 1.0) {
            return Err(Error::Config(format!("edge_prob must lie in (0, 1), got {}", self.edge_prob)));
        }
        if !(self.weight_low > 0.0 && self.weight_low <= self.weight_high && self.weight_high.is_finite()) {
            return Err(Error::Config(format!(
                "edge weights need 0 < low <= high, got [{}, {}]",
                self.weight_low, self.weight_high
            )));
        }
        Ok(())
    }
}

/// Symmetric boolean mask over off-diagonal entries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupportMask {
    d: usize,
    bits: Vec<bool>,
}

impl SupportMask {
    pub fn empty(d: usize) -> Self {
        SupportMask { d, bits: vec![false; d * d] }
    }

    /// Off-diagonal entries with `|m_ij| > tol`.
    pub fn from_matrix(m: &SymMatrix, tol: f64) -> Self {
        let d = m.dim();
        let mut mask = SupportMask::empty(d);
        for i in 0..d {
            for j in 0..d {
                if i != j && m.get(i, j).abs() > tol {
                    mask.bits[i * d + j] = true;
                }
            }
        }
        mask
    }

    pub fn from_edges(d: usize, edges: &[(usize, usize)]) -> Self {
        let mut mask = SupportMask::empty(d);
        for &(i, j) in edges {
            if i != j {
                mask.bits[i * d + j] = true;
                mask.bits[j * d + i] = true;
            }
        }
        mask
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.d + j]
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        (0..self.d)
            .flat_map(|i| ((i + 1)..self.d).map(move |j| (i, j)))
            .filter(|&(i, j)| self.get(i, j))
            .count()
    }
}

#[derive(Clone, Debug)]
pub struct GroundTruth {
    pub omega: SpdMatrix,
    pub sigma: SpdMatrix,
    pub support: SupportMask,
}

impl GroundTruth {
    pub fn dim(&self) -> usize {
        self.omega.dim()
    }
}

/// Weighted Erdős–Rényi graph → unit-diagonal, strictly diagonally dominant
/// precision matrix.
pub fn generate_precision(spec: &PrecisionSpec) -> Result<GroundTruth> {
    spec.validate()?;
    let mut rng = seed::rng_for(spec.seed, &[seed::stream::PRECISION]);
    let mut edges = Vec::new();
    for i in 0..spec.d {
        for j in (i + 1)..spec.d {
            if rng.random::<f64>() < spec.edge_prob {
                let magnitude = rng.random_range(spec.weight_low..=spec.weight_high);
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                edges.push((i, j, sign * magnitude));
            }
        }
    }
    precision_from_edges(spec.d, &edges)
}

/// Applies the diagonal-dominance construction to explicit weighted edges.
///
/// Rows whose absolute off-diagonal sum `s_i` exceeds 2/3 are scaled by
/// `1/(1.5·s_i)`, the matrix is symmetrized by averaging with its transpose,
/// and the diagonal is reset to 1. Averaging can push a row back above 1
/// when a node has many lightly-connected neighbours, so the pass is
/// repeated until every row sum is below 1.
pub fn precision_from_edges(d: usize, edges: &[(usize, usize, f64)]) -> Result<GroundTruth> {
    let mut m = Array2::<f64>::zeros((d, d));
    for &(i, j, w) in edges {
        if i >= d || j >= d || i == j {
            return Err(Error::InvalidInput(format!("invalid edge ({i}, {j})")));
        }
        m[[i, j]] = w;
        m[[j, i]] = w;
    }
    let row_sum = |m: &Array2<f64>, i: usize| -> f64 {
        (0..d).filter(|&j| j != i).map(|j| m[[i, j]].abs()).sum()
    };
    let max_row_sum = |m: &Array2<f64>| (0..d).map(|i| row_sum(m, i)).fold(0.0_f64, f64::max);

    let mut passes = 0;
    loop {
        for i in 0..d {
            let s = row_sum(&m, i);
            if s > DOMINANCE_TARGET {
                let f = 1.0 / (1.5 * s);
                for j in 0..d {
                    if j != i {
                        m[[i, j]] *= f;
                    }
                }
            }
        }
        m = (&m + &m.t()) * 0.5;
        passes += 1;
        if max_row_sum(&m) < 1.0 || passes >= MAX_DOMINANCE_PASSES {
            break;
        }
    }
    let worst = max_row_sum(&m);
    if worst >= 1.0 {
        m *= DOMINANCE_TARGET / worst;
    }
    for i in 0..d {
        m[[i, i]] = 1.0;
    }
    if passes > 1 {
        log::debug!("diagonal dominance needed {passes} passes");
    }

    let omega_sym = SymMatrix::symmetrized(m);
    let support = SupportMask::from_matrix(&omega_sym, 0.0);
    let omega = SpdMatrix::new(omega_sym)?;
    let sigma = omega.inverse()?;
    Ok(GroundTruth { omega, sigma, support })
}

/// `n` rows `X = L·z` with `L·Lᵀ` the Cholesky factorization of the
/// covariance and `z` standard normal.
pub fn gaussian_rows(factor: &Array2<f64>, n: usize, rng: &mut SeededRng) -> Array2<f64> {
    let d = factor.nrows();
    let z = Array2::from_shape_simple_fn((n, d), || rng.sample::<f64, _>(StandardNormal));
    z.dot(&factor.t())
}

/// `n` iid draws from `N(0, Σ)`.
pub fn sample_gaussian(truth: &GroundTruth, n: usize, seed: u64) -> Result<Dataset> {
    sample_from_covariance(&truth.sigma, n, seed)
}

pub fn sample_from_covariance(sigma: &SpdMatrix, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidInput("sample size must be positive".into()));
    }
    let mut rng = seed::rng_for(seed, &[seed::stream::DATASET]);
    Dataset::new(gaussian_rows(sigma.factor(), n, &mut rng))
}

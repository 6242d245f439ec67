//! Dense symmetric-matrix primitives: Cholesky, log-determinant, inverse,
//! entrywise ℓq norms over the full vectorization, and sample covariance.
//!
//! Matrices are stored full-square. Every constructor that can introduce
//! floating-point asymmetry (solves, products) symmetrizes its output so the
//! `entries[i][j] == entries[j][i]` invariant holds exactly.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Relative asymmetry tolerated when importing a raw array.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Order of an entrywise vector norm, `q ∈ [1, ∞]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct NormOrder(f64);

impl NormOrder {
    pub const ONE: NormOrder = NormOrder(1.0);
    pub const TWO: NormOrder = NormOrder(2.0);
    pub const INFINITY: NormOrder = NormOrder(f64::INFINITY);

    pub fn new(q: f64) -> Result<Self> {
        if q.is_nan() || q < 1.0 {
            return Err(Error::InvalidOrder(q));
        }
        Ok(NormOrder(q))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    /// Hölder conjugate: `1/p + 1/q = 1`, with `1 ↔ ∞`.
    pub fn dual(self) -> NormOrder {
        if self.0.is_infinite() {
            NormOrder::ONE
        } else if self.0 == 1.0 {
            NormOrder::INFINITY
        } else {
            NormOrder(self.0 / (self.0 - 1.0))
        }
    }
}

impl fmt::Display for NormOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_infinite() {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl FromStr for NormOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(NormOrder::INFINITY),
            other => {
                let q: f64 = other
                    .parse()
                    .map_err(|_| Error::Parse(format!("invalid norm order '{s}'")))?;
                NormOrder::new(q)
            }
        }
    }
}

impl Serialize for NormOrder {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            serializer.serialize_str("inf")
        } else {
            serializer.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for NormOrder {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(q) => NormOrder::new(q).map_err(serde::de::Error::custom),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Dense symmetric `d × d` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    entries: Array2<f64>,
}

impl SymMatrix {
    /// Builds a matrix from its upper triangle; `f(i, j)` is called for `i <= j`.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(dim >= 1, "dimension must be positive");
        let mut entries = Array2::zeros((dim, dim));
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                entries[[i, j]] = v;
                entries[[j, i]] = v;
            }
        }
        SymMatrix { entries }
    }

    /// Imports a square array, rejecting asymmetry beyond [`SYMMETRY_TOL`]
    /// (relative to the largest entry) and averaging away what remains.
    pub fn from_array(a: Array2<f64>) -> Result<Self> {
        let (r, c) = a.dim();
        if r != c {
            return Err(Error::DimensionMismatch { expected: r, got: c });
        }
        if r == 0 {
            return Err(Error::InvalidInput("empty matrix".into()));
        }
        let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
        let mut worst = 0.0_f64;
        for i in 0..r {
            for j in (i + 1)..r {
                worst = worst.max((a[[i, j]] - a[[j, i]]).abs());
            }
        }
        if worst > SYMMETRY_TOL * scale {
            return Err(Error::NotSymmetric(worst));
        }
        Ok(Self::symmetrized(a))
    }

    /// Averages `a` with its transpose. No tolerance check.
    pub fn symmetrized(a: Array2<f64>) -> Self {
        let d = a.nrows();
        assert_eq!(d, a.ncols(), "matrix must be square");
        Self::from_fn(d, |i, j| {
            if i == j {
                a[[i, i]]
            } else {
                0.5 * (a[[i, j]] + a[[j, i]])
            }
        })
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_fn(dim, |_, _| 0.0)
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        Self::from_fn(diag.len(), |i, j| if i == j { diag[i] } else { 0.0 })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[[i, j]]
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.entries.view()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.entries
    }

    pub fn into_array(self) -> Array2<f64> {
        self.entries
    }

    pub fn diag(&self) -> Array1<f64> {
        self.entries.diag().to_owned()
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix {
            entries: &self.entries + &other.entries,
        }
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix {
            entries: &self.entries - &other.entries,
        }
    }

    pub fn scale(&self, c: f64) -> SymMatrix {
        SymMatrix {
            entries: &self.entries * c,
        }
    }

    /// `Σ_ij a_ij b_ij`, which equals `trace(A·B)` for symmetric operands.
    pub fn inner(&self, other: &SymMatrix) -> f64 {
        self.entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn trace(&self) -> f64 {
        self.entries.diag().sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_off_diagonal(&self) -> f64 {
        let d = self.dim();
        let mut m = 0.0_f64;
        for i in 0..d {
            for j in (i + 1)..d {
                m = m.max(self.entries[[i, j]].abs());
            }
        }
        m
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|v| v.is_finite())
    }
}

/// A symmetric matrix certified positive definite by a successful Cholesky
/// factorization, which is kept alongside.
#[derive(Clone, Debug)]
pub struct SpdMatrix {
    matrix: SymMatrix,
    factor: Array2<f64>,
}

impl SpdMatrix {
    pub fn new(matrix: SymMatrix) -> Result<Self> {
        let factor = cholesky(&matrix)?;
        Ok(SpdMatrix { matrix, factor })
    }

    pub fn identity(dim: usize) -> Self {
        SpdMatrix {
            matrix: SymMatrix::identity(dim),
            factor: Array2::eye(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn as_sym(&self) -> &SymMatrix {
        &self.matrix
    }

    pub fn into_sym(self) -> SymMatrix {
        self.matrix
    }

    /// Lower-triangular `L` with `L·Lᵀ = self`.
    pub fn factor(&self) -> &Array2<f64> {
        &self.factor
    }

    pub fn log_det(&self) -> f64 {
        2.0 * self.factor.diag().iter().map(|v| v.ln()).sum::<f64>()
    }

    pub fn inverse(&self) -> Result<SpdMatrix> {
        let d = self.dim();
        let mut inv = Array2::<f64>::zeros((d, d));
        let mut e = Array1::<f64>::zeros(d);
        for col in 0..d {
            e.fill(0.0);
            e[col] = 1.0;
            let x = cholesky_solve(&self.factor, e.view());
            inv.column_mut(col).assign(&x);
        }
        SpdMatrix::new(SymMatrix::symmetrized(inv))
    }

    /// Solves `self · x = b`.
    pub fn solve(&self, b: ArrayView1<'_, f64>) -> Array1<f64> {
        cholesky_solve(&self.factor, b)
    }
}

impl AsRef<SymMatrix> for SpdMatrix {
    fn as_ref(&self) -> &SymMatrix {
        &self.matrix
    }
}

/// Cholesky factorization `m = L·Lᵀ`. Fails with
/// [`Error::NotPositiveDefinite`] on the first pivot that is not strictly
/// positive.
pub fn cholesky(m: &SymMatrix) -> Result<Array2<f64>> {
    let d = m.dim();
    let a = m.view();
    let mut l = Array2::<f64>::zeros((d, d));
    for j in 0..d {
        let mut pivot = a[[j, j]];
        for k in 0..j {
            pivot -= l[[j, k]] * l[[j, k]];
        }
        if !(pivot > 0.0) || !pivot.is_finite() {
            return Err(Error::NotPositiveDefinite { index: j, pivot });
        }
        let ljj = pivot.sqrt();
        l[[j, j]] = ljj;
        for i in (j + 1)..d {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / ljj;
        }
    }
    Ok(l)
}

fn cholesky_solve(l: &Array2<f64>, b: ArrayView1<'_, f64>) -> Array1<f64> {
    let d = l.nrows();
    let mut y = b.to_owned();
    for i in 0..d {
        let mut s = y[i];
        for k in 0..i {
            s -= l[[i, k]] * y[k];
        }
        y[i] = s / l[[i, i]];
    }
    for i in (0..d).rev() {
        let mut s = y[i];
        for k in (i + 1)..d {
            s -= l[[k, i]] * y[k];
        }
        y[i] = s / l[[i, i]];
    }
    y
}

pub fn log_det(m: &SpdMatrix) -> f64 {
    m.log_det()
}

pub fn inverse(m: &SpdMatrix) -> Result<SpdMatrix> {
    m.inverse()
}

/// ℓq norm of the full row-major vectorization (both triangles counted).
pub fn vec_norm(m: &SymMatrix, q: NormOrder) -> f64 {
    slice_norm(m.as_array().iter().copied(), q)
}

pub(crate) fn slice_norm(values: impl Iterator<Item = f64> + Clone, q: NormOrder) -> f64 {
    let q = q.value();
    if q.is_infinite() {
        return values.fold(0.0_f64, |m, v| m.max(v.abs()));
    }
    if q == 1.0 {
        return values.map(f64::abs).sum();
    }
    if q == 2.0 {
        return values.map(|v| v * v).sum::<f64>().sqrt();
    }
    let scale = values.clone().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    scale
        * values
            .map(|v| (v.abs() / scale).powf(q))
            .sum::<f64>()
            .powf(1.0 / q)
}

/// `n × d` observation matrix with finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    rows: Array2<f64>,
}

impl Dataset {
    pub fn new(rows: Array2<f64>) -> Result<Self> {
        let (n, d) = rows.dim();
        if n == 0 || d == 0 {
            return Err(Error::InvalidInput(format!("dataset must be non-empty, got {n}x{d}")));
        }
        if let Some(pos) = rows.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite value in row {}, column {}",
                pos / d,
                pos % d
            )));
        }
        Ok(Dataset { rows })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        let mut a = Array2::zeros((n, d));
        for (i, r) in rows.iter().enumerate() {
            if r.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: r.len() });
            }
            for (j, v) in r.iter().enumerate() {
                a[[i, j]] = *v;
            }
        }
        Dataset::new(a)
    }

    pub fn n(&self) -> usize {
        self.rows.nrows()
    }

    pub fn d(&self) -> usize {
        self.rows.ncols()
    }

    pub fn rows(&self) -> ArrayView2<'_, f64> {
        self.rows.view()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.rows.row(i)
    }

    /// Subset of rows, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<Dataset> {
        Dataset::new(self.rows.select(Axis(0), indices))
    }

    /// Copy with each column's mean subtracted.
    pub fn centered(&self) -> Dataset {
        let mean = self.rows.mean_axis(Axis(0)).expect("non-empty");
        Dataset {
            rows: &self.rows - &mean,
        }
    }

    /// Matrices `W_i = X_i X_iᵀ`.
    pub fn outer_products(&self) -> Vec<SymMatrix> {
        (0..self.n())
            .map(|i| {
                let x = self.row(i);
                SymMatrix::from_fn(self.d(), |a, b| x[a] * x[b])
            })
            .collect()
    }
}

/// `A_n = (1/n) Σ X_i X_iᵀ`, without mean-centering.
pub fn sample_covariance(data: &Dataset) -> SymMatrix {
    let x = data.rows();
    let gram = x.t().dot(&x) / data.n() as f64;
    SymMatrix::symmetrized(gram)
}

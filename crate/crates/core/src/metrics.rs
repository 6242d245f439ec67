//! Edge-recovery scores for an estimated precision matrix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glasso::ZERO_THRESHOLD;
use crate::linalg::SymMatrix;
use crate::simgen::SupportMask;

/// Default magnitude below which an estimated entry counts as zero.
pub const DEFAULT_ZERO_TOL: f64 = ZERO_THRESHOLD;

/// Counts over the strictly upper off-diagonal entries.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn predicted_positive(&self) -> u64 {
        self.tp + self.fp
    }

    /// `TP/(TP+FP)`, absent when nothing was predicted.
    pub fn precision(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fp)
    }
}

pub fn confusion(k_hat: &SymMatrix, truth: &SupportMask, zero_tol: f64) -> Result<ConfusionCounts> {
    let d = k_hat.dim();
    if truth.dim() != d {
        return Err(Error::DimensionMismatch { expected: truth.dim(), got: d });
    }
    if !(zero_tol >= 0.0) {
        return Err(Error::NegativeInput(zero_tol));
    }
    let mut c = ConfusionCounts::default();
    for i in 0..d {
        for j in i + 1..d {
            let predicted = k_hat.get(i, j).abs() > zero_tol;
            match (predicted, truth.get(i, j)) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
    }
    Ok(c)
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// `TP/(TP+FN)`; absent when the truth has no edges.
pub fn tpr(c: &ConfusionCounts) -> Option<f64> {
    ratio(c.tp, c.tp + c.fn_)
}

/// `FP/(FP+TP)`; absent when nothing was predicted.
pub fn fdr(c: &ConfusionCounts) -> Option<f64> {
    ratio(c.fp, c.fp + c.tp)
}

/// Value reported by [`mcc_with`] when any margin is empty.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ZeroDenominator {
    /// MCC = 0, i.e. no better than chance.
    Zero,
    /// Replace the denominator by one.
    UnitDenominator,
}

pub fn mcc(c: &ConfusionCounts) -> f64 {
    mcc_with(c, ZeroDenominator::Zero)
}

pub fn mcc_with(c: &ConfusionCounts, convention: ZeroDenominator) -> f64 {
    let (tp, tn, fp, fn_) = (c.tp as f64, c.tn as f64, c.fp as f64, c.fn_ as f64);
    let num = tp * tn - fp * fn_;
    let den = ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt();
    if den > 0.0 {
        num / den
    } else {
        match convention {
            ZeroDenominator::Zero => 0.0,
            ZeroDenominator::UnitDenominator => num,
        }
    }
}

/// TPR, FDR and MCC of one estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub counts: ConfusionCounts,
    pub tpr: Option<f64>,
    pub fdr: Option<f64>,
    pub mcc: f64,
}

pub fn score(k_hat: &SymMatrix, truth: &SupportMask, zero_tol: f64) -> Result<Scores> {
    let counts = confusion(k_hat, truth, zero_tol)?;
    Ok(Scores { counts, tpr: tpr(&counts), fdr: fdr(&counts), mcc: mcc(&counts) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn counts(tp: u64, tn: u64, fp: u64, fn_: u64) -> ConfusionCounts {
        ConfusionCounts { tp, tn, fp, fn_ }
    }

    fn omega() -> SymMatrix {
        SymMatrix::from_fn(4, |i, j| match (i.min(j), i.max(j)) {
            (a, b) if a == b => 1.0,
            (0, 1) => 0.3,
            (2, 3) => -0.2,
            _ => 0.0,
        })
    }

    #[test]
    fn exact_and_diagonal_estimates() {
        let om = omega();
        let mask = SupportMask::from_matrix(&om, 0.0);
        let c = confusion(&om, &mask, DEFAULT_ZERO_TOL).unwrap();
        assert_eq!(c, counts(2, 4, 0, 0));
        let c = confusion(&SymMatrix::identity(4), &mask, DEFAULT_ZERO_TOL).unwrap();
        assert_eq!(c, counts(0, 4, 0, 2));
        assert_eq!(c.total(), 6);
        assert!(matches!(
            confusion(&SymMatrix::identity(3), &mask, 1e-8),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rate_examples() {
        assert_eq!(tpr(&counts(4, 3, 0, 0)), Some(1.0));
        assert_eq!(tpr(&counts(0, 3, 0, 4)), Some(0.0));
        assert_eq!(tpr(&counts(3, 0, 0, 1)), Some(0.75));
        assert_eq!(tpr(&counts(0, 5, 1, 0)), None);
        assert_eq!(fdr(&counts(0, 5, 0, 2)), None);
        assert_eq!(fdr(&counts(3, 0, 1, 0)), Some(0.25));
        assert_eq!(fdr(&counts(0, 2, 3, 1)), Some(1.0));
    }

    #[test]
    fn mcc_examples() {
        assert_eq!(mcc(&counts(3, 7, 0, 0)), 1.0);
        assert_eq!(mcc(&counts(0, 0, 7, 3)), -1.0);
        assert_eq!(mcc(&counts(5, 5, 5, 5)), 0.0);
        assert_eq!(mcc(&counts(0, 6, 0, 0)), 0.0);
        assert_eq!(mcc_with(&counts(0, 6, 0, 0), ZeroDenominator::UnitDenominator), 0.0);
        assert_eq!(mcc_with(&counts(2, 0, 0, 0), ZeroDenominator::UnitDenominator), 0.0);
        // (2·3 − 1·1)/√(3·3·4·4) = 5/12
        assert!((mcc(&counts(2, 3, 1, 1)) - 5.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn random_masks_match_pairwise_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let d = 5;
            let mut edges = Vec::new();
            for i in 0..d {
                for j in i + 1..d {
                    if rng.random_bool(0.4) {
                        edges.push((i, j));
                    }
                }
            }
            let mask = SupportMask::from_edges(d, &edges);
            let vals: Vec<f64> = (0..d * d).map(|_| if rng.random_bool(0.5) { 0.0 } else { rng.random_range(-1.0..1.0) }).collect();
            let k = SymMatrix::from_fn(d, |i, j| if i == j { 1.0 } else { vals[i.min(j) * d + i.max(j)] });
            let c = confusion(&k, &mask, 1e-8).unwrap();

            let (mut tp, mut tn, mut fp, mut fn_) = (0, 0, 0, 0);
            for i in 0..d {
                for j in 0..d {
                    if i >= j {
                        continue;
                    }
                    let est = k.get(i, j) != 0.0;
                    let tru = edges.contains(&(i, j));
                    tp += (est && tru) as u64;
                    fp += (est && !tru) as u64;
                    fn_ += (!est && tru) as u64;
                    tn += (!est && !tru) as u64;
                }
            }
            assert_eq!(c, counts(tp, tn, fp, fn_));
        }
    }

    proptest! {
        #[test]
        fn scaling_up_never_loses_discoveries(
            vals in proptest::collection::vec(-1e-6f64..1e-6, 10),
            c in 1.0f64..1e4,
        ) {
            let k = SymMatrix::from_fn(5, |i, j| if i == j { 1.0 } else {
                let (a, b) = (i.min(j), i.max(j));
                vals[a * (9 - a) / 2 + b - a - 1]
            });
            let mask = SupportMask::empty(5);
            let before = confusion(&k, &mask, 1e-8).unwrap().predicted_positive();
            let after = confusion(&k.scale(c), &mask, 1e-8).unwrap().predicted_positive();
            prop_assert!(after >= before);
        }

        #[test]
        fn fdr_and_precision_sum_to_one(tp in 0u64..50, tn in 0u64..50, fp in 0u64..50, fn_ in 0u64..50) {
            let c = counts(tp, tn, fp, fn_);
            if let (Some(f), Some(p)) = (fdr(&c), c.precision()) {
                prop_assert!((f + p - 1.0).abs() < 1e-12);
            }
            let m = mcc(&c);
            prop_assert!((-1.0..=1.0).contains(&m));
        }
    }
}

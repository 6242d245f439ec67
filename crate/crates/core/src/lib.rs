//! Distributionally robust graphical lasso.
//!
//! The crate provides a solver for the ℓp-penalized graphical lasso, the
//! robust Wasserstein profile function that links the penalty level to an
//! ambiguity radius, the bootstrap rule (RobSel) that picks the penalty
//! without fitting, cross-validation, and a simulation harness.

pub mod error;
pub mod experiment;
pub mod glasso;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod robsel;
pub mod rwp;
pub mod seed;
pub mod select;
pub mod simgen;

pub use error::{Error, Result};
pub use linalg::{Dataset, NormOrder, SpdMatrix, SymMatrix};

//! Generalized-mean (f-mean) quantum Cramér-Rao bounds for multiparameter
//! estimation.
//!
//! The crate computes SLD and RLD quantum Fisher information matrices,
//! weighted f-means of positive matrices for the power family
//! `f(x) = x^s` (`s ∈ [-1, 1]`, with `s = 0` the logarithm), the plain and
//! refined f-mean bounds built from them, and the f-mean QFI resource
//! measures for asymmetry and coherence. A Monte Carlo module checks the
//! bounds against simulated measurement data.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod coherent;
pub mod error;
pub mod estimation;
pub mod hermitian;
pub mod mean;
pub mod qfi;
pub mod resource;
pub mod states;

pub use error::{Error, Result};
pub use estimation::{EstimatorTable, Povm};
pub use hermitian::{HermitianMatrix, MatrixJson};
pub use mean::{MeanSpec, WeightMatrix};
pub use qfi::{QfiKind, QfiMatrix};
pub use resource::{EnsembleDecomposition, ReferenceBasis};
pub use states::{DensityOperator, KrausChannel, ParametricFamily};

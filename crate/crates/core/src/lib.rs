//! Sliding- and disjoint-blocks estimators of cluster indices for regularly
//! varying time series, with tail-process oracles and a Monte Carlo harness.

pub mod error;
pub mod estimators;
pub mod experiment;
pub mod functionals;
pub mod mc;
pub mod oracle;
pub mod series;
pub mod simulate;

pub use error::{Error, Result};
pub use estimators::{estimate, EstimateResult, EstimatorMode};
pub use functionals::{BlockFunctional, Functional};
pub use series::{validate_scheme, BlockScheme, NormKind, Series};
pub use simulate::{generate, ProcessKind, ProcessSpec};

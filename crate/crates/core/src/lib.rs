//! Estimation of a finite-population variance `S_y^2` under simple random
//! sampling without replacement, using a binary auxiliary attribute whose
//! population parameters are known.
//!
//! - [`population`]: populations, moments, parameter bundles, SRSWOR draws, CSV input.
//! - [`estimators`]: the ratio, regression, exponential, KC, t_S, t_RS and t_M families.
//! - [`mse_theory`]: first-order MSEs, optimum constants, PRE, comparisons.
//! - [`montecarlo`]: replicated-sampling checks of the theory.
//! - [`tables`]: efficiency tables against registered reference values.
//! - [`cli`]: the `attrvar` command-line interface.

pub mod catalog;
pub mod cli;
pub mod error;
pub mod estimators;
pub mod fixtures;
pub mod montecarlo;
pub mod mse_theory;
pub mod population;
pub mod tables;

pub use error::{Error, Result};
pub use estimators::{CoefficientMode, Coefficients, EstimatorSpec, KcVariant, Tuned};
pub use population::{ParameterSet, Population, Sample};

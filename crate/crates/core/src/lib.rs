//! Extreme-value tail-risk analysis.
//!
//! Univariate tools fit the upper tail of a sample through its top order
//! statistics: Hill and generalized-Pareto maximum-likelihood estimators,
//! data-driven choice of the number `k` of order statistics, simulated
//! confidence bands for Pareto and GPD quantile plots, and tail risk measures
//! (excess-of-loss premiums, value at risk). Bivariate tools estimate the
//! coefficient of tail dependence and the joint-exceedance function `d` of the
//! Ledford–Tawn model from rank-standardized pairs.

pub mod distributions;
pub mod error;
pub mod io;
pub mod optim;
pub mod quad;
pub mod risk_measures;
pub mod rng;
pub mod sample;
pub mod tail_dependence;
pub mod tail_estimators;
pub mod threshold_selection;
pub mod validation;

pub use error::{Error, Result};
pub use sample::Sample;

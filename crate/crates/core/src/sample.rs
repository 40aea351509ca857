use crate::error::{Error, Result};

/// An immutable sample of observations, kept in ascending order.
///
/// The original input order is retained so that bivariate code can recover
/// ranks; univariate estimators only ever look at the sorted view.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    sorted: Vec<f64>,
    original: Vec<f64>,
}

impl Sample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("sample must not be empty".into()));
        }
        if let Some(bad) = values.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sample contains non-finite value {bad}"
            )));
        }
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        Ok(Self {
            sorted,
            original: values,
        })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Ascending order statistics `X_{1:n} <= ... <= X_{n:n}`.
    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// Observations in the order they were supplied.
    pub fn original(&self) -> &[f64] {
        &self.original
    }

    /// `X_{i:n}`, 1-based.
    pub fn order_stat(&self, i: usize) -> f64 {
        self.sorted[i - 1]
    }

    /// Number of strictly positive observations.
    pub fn n_positive(&self) -> usize {
        self.sorted.len() - self.sorted.partition_point(|&x| x <= 0.0)
    }

    /// Applies `x -> a * x + b` to every observation.
    pub fn affine(&self, a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "affine scale must be positive, got {a}"
            )));
        }
        Self::new(self.original.iter().map(|&x| a * x + b).collect())
    }
}

//! Bivariate tail dependence under the Ledford–Tawn model: rank
//! standardization to Pareto margins, the coefficient of tail dependence
//! `eta`, and the homogeneous limit function `d`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::risk_measures::{normal_upper_quantile, Interval};
use crate::sample::Sample;
use crate::tail_estimators::{gpd_ml_fit, hill, tail_view, Estimator};

/// Paired observations `(x1, x2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BivariateSample(Vec<(f64, f64)>);

impl BivariateSample {
    pub fn new(pairs: Vec<(f64, f64)>) -> Result<Self> {
        if pairs.len() < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 pairs, got {}", pairs.len())));
        }
        if let Some(i) = pairs.iter().position(|(a, b)| !a.is_finite() || !b.is_finite()) {
            return Err(Error::InvalidParameter(format!("pair {i} is not finite")));
        }
        Ok(Self(pairs))
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Margins mapped to `(n+1)/(n+1-R)` and the componentwise minima.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankTransformed {
    pub y: Vec<(f64, f64)>,
    pub t: Vec<f64>,
}

/// Ordinal ranks `1..=n`; equal values are ranked in input order.
pub fn ordinal_ranks(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    // sort_by is stable, so ties keep their input order
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0; values.len()];
    for (r, i) in idx.into_iter().enumerate() {
        ranks[i] = r + 1;
    }
    ranks
}

pub fn rank_transform(b: &BivariateSample) -> RankTransformed {
    let n = b.len();
    let np1 = (n + 1) as f64;
    let x1: Vec<f64> = b.0.iter().map(|p| p.0).collect();
    let x2: Vec<f64> = b.0.iter().map(|p| p.1).collect();
    let r1 = ordinal_ranks(&x1);
    let r2 = ordinal_ranks(&x2);
    let y: Vec<(f64, f64)> = r1
        .iter()
        .zip(&r2)
        .map(|(&a, &c)| (np1 / (np1 - a as f64), np1 / (np1 - c as f64)))
        .collect();
    let t = y.iter().map(|&(a, c)| a.min(c)).collect();
    RankTransformed { y, t }
}

/// Estimate of `eta` from the tail of the `T` sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailDepFit {
    pub eta_hat: f64,
    pub k: usize,
    pub ci: Interval,
    pub estimator: Estimator,
    /// `eta_hat > 1`, which the model excludes.
    pub exceeds_one: bool,
}

/// Fits `eta` with Hill or GPD-ML at `k`. The interval uses the iid
/// asymptotic variance (`eta^2` for Hill, `(1+eta)^2` for ML), which is only
/// approximate when the margins are estimated by ranks.
pub fn eta_fit(b: &BivariateSample, k: usize, estimator: Estimator, alpha: f64) -> Result<TailDepFit> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0,1), got {alpha}")));
    }
    let rt = rank_transform(b);
    let sample = Sample::new(rt.t)?;
    let view = tail_view(&sample, k)?;
    let (eta_hat, sd) = match estimator {
        Estimator::Hill => {
            let e = hill(&view)?;
            (e, e.abs())
        }
        Estimator::GpdMl => {
            let e = gpd_ml_fit(&view)?.gamma_hat;
            (e, (1.0 + e).abs())
        }
    };
    let half = normal_upper_quantile(alpha / 2.0) * sd / (k as f64).sqrt();
    Ok(TailDepFit {
        eta_hat,
        k,
        ci: Interval {
            lower: eta_hat - half,
            upper: eta_hat + half,
            alpha,
        },
        estimator,
        exceeds_one: eta_hat > 1.0,
    })
}

/// Precomputed ranks for repeated evaluation of `d_hat` at one `m`.
#[derive(Debug, Clone)]
pub struct DEstimator {
    y: Vec<(f64, f64)>,
    level: f64,
    m: usize,
}

impl DEstimator {
    pub fn new(b: &BivariateSample, m: usize) -> Result<Self> {
        let n = b.len();
        if m == 0 || m >= n {
            return Err(Error::InvalidParameter(format!("m must satisfy 1 <= m <= n-1 (m={m}, n={n})")));
        }
        let rt = rank_transform(b);
        let mut t = rt.t;
        t.sort_by(f64::total_cmp);
        Ok(Self {
            y: rt.y,
            level: t[n - m - 1],
            m,
        })
    }

    /// `T_{n-m:n}`.
    pub fn level(&self) -> f64 {
        self.level
    }

    /// `(1/m) #{i : y_i1 > T y1, y_i2 > T y2}`.
    pub fn eval(&self, y1: f64, y2: f64) -> f64 {
        let (a, c) = (self.level * y1, self.level * y2);
        let count = self.y.iter().filter(|&&(u, v)| u > a && v > c).count();
        count as f64 / self.m as f64
    }
}

pub fn d_estimate(b: &BivariateSample, m: usize, y1: f64, y2: f64) -> Result<f64> {
    if !(y1 > 0.0 && y2 > 0.0) {
        return Err(Error::Domain(format!("d is evaluated at positive arguments, got ({y1}, {y2})")));
    }
    Ok(DEstimator::new(b, m)?.eval(y1, y2))
}

/// Extends `d` from the boundary `{min(y1, y2) = 1}` by homogeneity of order `-1/eta`.
pub fn d_extend<F: Fn(f64, f64) -> f64>(boundary: F, eta: f64, y1: f64, y2: f64) -> Result<f64> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidParameter(format!("eta must lie in (0,1], got {eta}")));
    }
    let s = y1.min(y2);
    if !(s > 0.0) {
        return Err(Error::Domain(format!("min(y1, y2) must be positive, got {s}")));
    }
    if s == 1.0 {
        return Ok(boundary(y1, y2));
    }
    Ok(s.powf(-1.0 / eta) * boundary(y1 / s, y2 / s))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DProfilePoint {
    pub x: f64,
    pub d: f64,
    pub lower: f64,
    pub upper: f64,
}

/// `x -> d_hat(1/x, 1)` on `(0, 1]` and `x -> d_hat(1, 1/(2-x))` on `[1, 2)`,
/// with pointwise normal-approximation binomial intervals of effective size `m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DProfile {
    pub m: usize,
    pub alpha: f64,
    pub level: f64,
    pub points: Vec<DProfilePoint>,
}

/// Profile on the grid `x = j/grid`, `j = 1..2 grid - 1`.
pub fn d_profile(b: &BivariateSample, m: usize, grid: usize, alpha: f64) -> Result<DProfile> {
    if grid < 2 {
        return Err(Error::InvalidParameter(format!("grid must be at least 2, got {grid}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0,1), got {alpha}")));
    }
    let est = DEstimator::new(b, m)?;
    let z = normal_upper_quantile(alpha / 2.0);
    let g = grid as f64;
    let points = (1..2 * grid)
        .map(|j| {
            let x = j as f64 / g;
            let d = if j <= grid { est.eval(1.0 / x, 1.0) } else { est.eval(1.0, 1.0 / (2.0 - x)) };
            let half = z * (d * (1.0 - d) / m as f64).sqrt();
            DProfilePoint {
                x,
                d,
                lower: (d - half).max(0.0),
                upper: (d + half).min(1.0),
            }
        })
        .collect();
    Ok(DProfile {
        m,
        alpha,
        level: est.level,
        points,
    })
}

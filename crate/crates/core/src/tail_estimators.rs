//! Estimators written as functionals of the tail empirical quantile function
//! `Q_n(t) = X_{n-[k t]:n}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim;
use crate::sample::Sample;

/// The top `k + 1` order statistics of a sample, in descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct TailView {
    n: usize,
    k: usize,
    order_stats: Vec<f64>,
}

/// Builds the tail view for `1 <= k <= n - 1`.
pub fn tail_view(sample: &Sample, k: usize) -> Result<TailView> {
    let n = sample.len();
    if k == 0 || k >= n {
        return Err(Error::InvalidParameter(format!(
            "k must satisfy 1 <= k <= n-1 (k={k}, n={n})"
        )));
    }
    let order_stats = sample.sorted()[n - k - 1..].iter().rev().copied().collect();
    Ok(TailView { n, k, order_stats })
}

impl TailView {
    /// Builds a view directly from descending order statistics; mainly for
    /// tests and synthetic traces. `n` is the size of the parent sample.
    pub fn from_descending(order_stats: Vec<f64>, n: usize) -> Result<Self> {
        let k = order_stats.len().saturating_sub(1);
        if k == 0 || k >= n {
            return Err(Error::InvalidParameter(format!(
                "need 2 <= len <= n (len={}, n={n})",
                order_stats.len()
            )));
        }
        if order_stats.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidParameter("order statistics must be non-increasing".into()));
        }
        Ok(Self { n, k, order_stats })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `X_{n:n}, ..., X_{n-k:n}`.
    pub fn order_stats(&self) -> &[f64] {
        &self.order_stats
    }

    /// `Q_n(1) = X_{n-k:n}`.
    pub fn threshold(&self) -> f64 {
        self.order_stats[self.k]
    }

    /// `Q_n(t)` for `t` in `[0, 1]`.
    pub fn q(&self, t: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Domain(format!("Q_n is defined on [0,1], got t={t}")));
        }
        let idx = ((self.k as f64) * t).floor() as usize;
        Ok(self.order_stats[idx.min(self.k)])
    }

    /// The `k` excesses `X_{n-i+1:n} - X_{n-k:n}`, `i = 1..k`.
    pub fn excesses(&self) -> Vec<f64> {
        let u = self.threshold();
        self.order_stats[..self.k].iter().map(|&x| x - u).collect()
    }

    fn log_ratios(&self) -> Result<impl Iterator<Item = f64> + '_> {
        let u = self.threshold();
        if !(u > 0.0) {
            return Err(Error::Domain(format!(
                "log-ratio estimators need a positive threshold, got X_(n-k)={u}"
            )));
        }
        Ok(self.order_stats[..self.k].iter().map(move |&x| (x / u).ln()))
    }
}

/// Hill estimator `(1/k) sum_{i=1}^k log(X_{n-i+1:n} / X_{n-k:n})`.
pub fn hill(view: &TailView) -> Result<f64> {
    Ok(view.log_ratios()?.sum::<f64>() / view.k as f64)
}

/// `M_{n,k} = (1/k) sum_{i=1}^k log^2(X_{n-i+1:n} / X_{n-k:n})`.
pub fn m_nk(view: &TailView) -> Result<f64> {
    Ok(view.log_ratios()?.map(|l| l * l).sum::<f64>() / view.k as f64)
}

/// Hill estimates for `k = 1..=k_max` via prefix sums.
///
/// `out[k-1]` is the estimate at `k`. Requires `X_{n-k_max:n} > 0`.
pub fn hill_curve(sorted_ascending: &[f64], k_max: usize) -> Result<Vec<f64>> {
    Ok(log_moment_curves(sorted_ascending, k_max)?.0)
}

/// Hill and `M_{n,k}` for `k = 1..=k_max` in one pass.
pub fn log_moment_curves(sorted_ascending: &[f64], k_max: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = sorted_ascending.len();
    if k_max == 0 || k_max >= n {
        return Err(Error::InvalidParameter(format!(
            "k_max must satisfy 1 <= k_max <= n-1 (k_max={k_max}, n={n})"
        )));
    }
    let thr = sorted_ascending[n - k_max - 1];
    if !(thr > 0.0) {
        return Err(Error::Domain(format!(
            "log-ratio estimators need a positive threshold, got X_(n-k)={thr}"
        )));
    }
    let top = sorted_ascending[n - 1].ln();
    // logs relative to the maximum keep the prefix sums small
    let rel = |i: usize| sorted_ascending[n - i].ln() - top;
    let mut hill = Vec::with_capacity(k_max);
    let mut mom = Vec::with_capacity(k_max);
    let (mut s1, mut s2) = (0.0, 0.0);
    for k in 1..=k_max {
        let l = rel(k);
        s1 += l;
        s2 += l * l;
        let u = rel(k + 1);
        let kf = k as f64;
        let h = s1 / kf - u;
        let m = s2 / kf - 2.0 * u * s1 / kf + u * u;
        hill.push(h);
        mom.push(m.max(0.0));
    }
    Ok((hill, mom))
}

/// Asymptotic covariance of `sqrt(k) (gamma_hat - gamma, sigma_hat/a - 1)` for
/// the GPD maximum-likelihood estimator.
pub fn asymptotic_cov(gamma: f64) -> [[f64; 2]; 2] {
    let g1 = 1.0 + gamma;
    [[g1 * g1, -g1], [-g1, 2.0 + 2.0 * gamma + gamma * gamma]]
}

/// How far the covariance formula can be trusted at a fitted shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CovRegime {
    /// `gamma >= 0`.
    Supported,
    /// `-1/2 < gamma < 0`: the formula holds but lies outside the focus range.
    NegativeShape,
    /// `gamma <= -1/2`: no asymptotic normality.
    Invalid,
}

/// Result of a GPD maximum-likelihood fit to the excesses over `X_{n-k:n}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpdFit {
    pub gamma_hat: f64,
    pub sigma_hat: f64,
    pub k: usize,
    pub n: usize,
    pub threshold: f64,
    pub cov: [[f64; 2]; 2],
    pub log_likelihood: f64,
    pub max_excess: f64,
}

impl GpdFit {
    pub fn cov_regime(&self) -> CovRegime {
        if self.gamma_hat >= 0.0 {
            CovRegime::Supported
        } else if self.gamma_hat > -0.5 {
            CovRegime::NegativeShape
        } else {
            CovRegime::Invalid
        }
    }
}

/// Shapes with modulus below this are reported through the exponential branch.
const ZERO_SHAPE: f64 = 1e-8;
const GRID_POINTS: usize = 400;
const MAX_ITER: usize = 500;
/// Closest approach of `theta * max Y` to -1 (the support boundary).
const U_FLOOR: f64 = 1e-12;
/// Score norm (per excess, in units of the largest excess) accepted as stationary.
pub const SCORE_TOLERANCE: f64 = 1e-7;

/// GPD log-likelihood of `excesses` at `(gamma, sigma)`; `-inf` off the support.
pub fn gpd_log_likelihood(excesses: &[f64], gamma: f64, sigma: f64) -> f64 {
    if !(sigma > 0.0) {
        return f64::NEG_INFINITY;
    }
    let k = excesses.len() as f64;
    if gamma.abs() < ZERO_SHAPE {
        return -k * sigma.ln() - excesses.iter().sum::<f64>() / sigma;
    }
    let mut s = 0.0;
    for &y in excesses {
        let x = gamma * y / sigma;
        if 1.0 + x <= 0.0 {
            return f64::NEG_INFINITY;
        }
        s += x.ln_1p();
    }
    -k * sigma.ln() - (1.0 / gamma + 1.0) * s
}

/// `log(1+x) - x/(1+x)`, accurate for small `x`.
fn log1p_minus_ratio(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        // sum_{j>=2} (-1)^j (j-1)/j x^j
        let x2 = x * x;
        x2 * (0.5 - x * (2.0 / 3.0) + x2 * 0.75 - x2 * x * 0.8 + x2 * x2 * (5.0 / 6.0))
    } else {
        x.ln_1p() - x / (1.0 + x)
    }
}

/// Score of the excess log-likelihood w.r.t. `(gamma, log sigma)`, divided by `k`.
fn normalized_score(excesses: &[f64], gamma: f64, sigma: f64) -> (f64, f64) {
    let k = excesses.len() as f64;
    let (mut dg, mut ds) = (0.0, 0.0);
    for &y in excesses {
        let a = y / sigma;
        let x = gamma * a;
        if gamma.abs() < 1e-300 {
            dg += 0.5 * a * a - a;
        } else {
            dg += log1p_minus_ratio(x) / (gamma * gamma) - a / (1.0 + x);
        }
        ds += (1.0 + gamma) * a / (1.0 + x);
    }
    (dg / k, ds / k - 1.0)
}

/// Maximum-likelihood fit of `GPD(gamma, sigma)` to the excesses of `view`.
///
/// The likelihood is profiled over `theta = gamma / sigma`: for fixed theta
/// the optimal shape is `mean(log(1 + theta*Y))`, which leaves a smooth
/// one-dimensional problem. It is scanned on a grid over the admissible set
/// `{gamma > -1, sigma > -gamma * max Y}` and refined with Brent's method.
pub fn gpd_ml_fit(view: &TailView) -> Result<GpdFit> {
    let excesses = view.excesses();
    let k = excesses.len();
    if k < 2 {
        return Err(Error::InvalidParameter("ML fit needs k >= 2".into()));
    }
    let (gamma_hat, sigma_hat, log_likelihood) = fit_excesses(&excesses)?;
    let max_excess = excesses.iter().copied().fold(0.0, f64::max);
    Ok(GpdFit {
        gamma_hat,
        sigma_hat,
        k: view.k,
        n: view.n,
        threshold: view.threshold(),
        cov: asymptotic_cov(gamma_hat),
        log_likelihood,
        max_excess,
    })
}

/// Fits raw excesses, returning `(gamma, sigma, log-likelihood)`.
pub fn fit_excesses(excesses: &[f64]) -> Result<(f64, f64, f64)> {
    let k = excesses.len();
    if excesses.iter().any(|y| !(*y >= 0.0) || !y.is_finite()) {
        return Err(Error::InvalidParameter("excesses must be finite and non-negative".into()));
    }
    let ymax = excesses.iter().copied().fold(0.0, f64::max);
    let ymin = excesses.iter().copied().fold(f64::INFINITY, f64::min);
    if !(ymax > ymin) {
        return Err(Error::DegenerateInput(format!(
            "all {k} excesses equal {ymax}; the GPD likelihood has no interior maximum"
        )));
    }
    let z: Vec<f64> = excesses.iter().map(|&y| y / ymax).collect();
    let kf = k as f64;
    let mean_z = z.iter().sum::<f64>() / kf;

    // S(u)/u with u = theta * ymax, continuous at u = 0
    let s_over_u = |u: f64| -> f64 {
        if u.abs() < 1e-10 {
            z.iter().map(|&zi| zi * (1.0 - 0.5 * u * zi)).sum()
        } else {
            z.iter().map(|&zi| (u * zi).ln_1p()).sum::<f64>() / u
        }
    };
    let shape = |u: f64| u * s_over_u(u) / kf;
    // profile log-likelihood in units of ymax: -k log sigma - S - k
    let profile = |u: f64| -> f64 {
        let sigma = s_over_u(u) / kf;
        if !(sigma > 0.0) {
            return f64::NEG_INFINITY;
        }
        -kf * sigma.ln() - u * sigma * kf - kf
    };

    // shape(u) increases in u and tends to -inf as u -> -1
    // for larger k the shape stays above -1 until u is within rounding of -1
    let u_min = if shape(-1.0 + U_FLOOR) + 1.0 > 0.0 {
        -1.0 + U_FLOOR
    } else {
        optim::bisect_increasing(|u| shape(u) + 1.0, -1.0 + U_FLOOR, 0.0, 200)
    };
    let v_lo = (1.0 + u_min).ln();
    let v_hi = (1.0f64 + 1e8).ln();
    let to_u = |v: f64| v.exp_m1();
    let objective = |v: f64| profile(to_u(v));

    let step = (v_hi - v_lo) / GRID_POINTS as f64;
    let mut best_j = 1;
    let mut best_val = f64::NEG_INFINITY;
    for j in 1..GRID_POINTS {
        let val = objective(v_lo + step * j as f64);
        if val > best_val {
            best_val = val;
            best_j = j;
        }
    }
    // exponential model as an explicit candidate
    let exp_val = profile(0.0);
    let centre = if exp_val > best_val { 0.0 } else { v_lo + step * best_j as f64 };
    let a = (centre - step).max(v_lo + 1e-3 * step);
    let b = (centre + step).min(v_hi);
    let m = optim::maximize(objective, a, b, 1e-13, MAX_ITER);

    let u = to_u(m.x);
    let (mut gamma, mut sigma_z) = (shape(u), s_over_u(u) / kf);
    if gamma.abs() < ZERO_SHAPE {
        gamma = 0.0;
        sigma_z = mean_z;
    }
    let sigma = sigma_z * ymax;
    let (dg, ds) = normalized_score(&z, gamma, sigma_z);
    let score = dg.hypot(ds);
    if !m.converged || !(score <= SCORE_TOLERANCE) || !gamma.is_finite() {
        return Err(Error::Convergence {
            message: format!(
                "profile likelihood search stopped after {} iterations with score norm {score:e}",
                m.iterations
            ),
            best_gamma: gamma,
            best_sigma: sigma,
        });
    }
    Ok((gamma, sigma, gpd_log_likelihood(excesses, gamma, sigma)))
}

/// Which estimator a trace or fit uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Estimator {
    Hill,
    GpdMl,
}

/// Estimates for a range of `k`; missing entries mark failed fits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorTrace {
    pub ks: Vec<usize>,
    pub estimates: Vec<Option<f64>>,
}

/// Evaluates `estimator` at every `k` in `k_min..=k_max`.
pub fn trace(sample: &Sample, estimator: Estimator, k_min: usize, k_max: usize) -> Result<EstimatorTrace> {
    let n = sample.len();
    if k_min == 0 || k_min > k_max || k_max >= n {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= k_min <= k_max <= n-1 (k_min={k_min}, k_max={k_max}, n={n})"
        )));
    }
    let ks: Vec<usize> = (k_min..=k_max).collect();
    let estimates = ks
        .iter()
        .map(|&k| {
            let view = tail_view(sample, k).ok()?;
            match estimator {
                Estimator::Hill => hill(&view).ok(),
                Estimator::GpdMl => gpd_ml_fit(&view).ok().map(|f| f.gamma_hat),
            }
        })
        .collect();
    Ok(EstimatorTrace { ks, estimates })
}

//! Excess-of-loss premium and value at risk from a GPD fit to the top `k`
//! order statistics.

use serde::{Deserialize, Serialize};

use crate::distributions::psi;
use crate::error::{Error, Result};
use crate::sample::Sample;
use crate::tail_estimators::{gpd_ml_fit, tail_view, GpdFit};

/// A layer of `cover` in excess of `retention`; the cover may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XlContract {
    retention: f64,
    cover: f64,
}

impl XlContract {
    pub fn new(retention: f64, cover: f64) -> Result<Self> {
        if !(retention >= 0.0) || !retention.is_finite() {
            return Err(Error::InvalidParameter(format!("retention must be finite and >= 0, got {retention}")));
        }
        if !(cover > 0.0) {
            return Err(Error::InvalidParameter(format!("cover must be > 0, got {cover}")));
        }
        Ok(Self { retention, cover })
    }

    pub fn unlimited(retention: f64) -> Result<Self> {
        Self::new(retention, f64::INFINITY)
    }

    pub fn retention(&self) -> f64 {
        self.retention
    }

    pub fn cover(&self) -> f64 {
        self.cover
    }
}

/// Confidence interval with its level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
    pub alpha: f64,
}

/// Estimated net premium per claim for one layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PremiumEstimate {
    pub value: f64,
    pub k: usize,
    pub n: usize,
    pub gamma_hat: f64,
    pub sigma_hat: f64,
    pub threshold: f64,
    pub contract: XlContract,
    pub ci: Option<Interval>,
    pub tau_hat: Option<f64>,
    pub warnings: Vec<String>,
}

/// Plug-in premium `(k/n) sigma [psi((t+c-u)/sigma) - psi((t-u)/sigma)]` for
/// given tail parameters.
pub fn premium_from_params(
    k: usize,
    n: usize,
    threshold: f64,
    gamma: f64,
    sigma: f64,
    contract: XlContract,
) -> Result<PremiumEstimate> {
    if !(sigma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidParameter(format!("need sigma > 0 and finite gamma (gamma={gamma}, sigma={sigma})")));
    }
    let t = contract.retention;
    let c = contract.cover;
    let mut warnings = Vec::new();
    if t < threshold {
        warnings.push(format!(
            "retention {t} lies below the GPD threshold Q_n(1)={threshold}; the tail approximation is extrapolated downwards"
        ));
    }
    let lo = (t - threshold) / sigma;
    let hi = if c.is_infinite() { f64::INFINITY } else { (t + c - threshold) / sigma };
    if 1.0 + gamma * lo <= 0.0 {
        return Err(Error::Domain(format!(
            "retention bound violates 1 + gamma (t - u)/sigma > 0 (gamma={gamma}, sigma={sigma}, t={t}, u={threshold})"
        )));
    }
    if hi.is_infinite() && gamma >= 1.0 {
        return Err(Error::Domain(format!("an unlimited layer has infinite premium for gamma={gamma} >= 1")));
    }
    if hi.is_infinite() && gamma < 0.0 {
        return Err(Error::Domain(format!(
            "upper bound t + c = inf violates the finite endpoint for gamma={gamma}"
        )));
    }
    if hi.is_finite() && 1.0 + gamma * hi <= 0.0 {
        return Err(Error::Domain(format!(
            "upper bound t + c = {} violates 1 + gamma (t + c - u)/sigma > 0 (gamma={gamma}, sigma={sigma})",
            t + c
        )));
    }
    let diff = psi(hi, gamma)? - psi(lo, gamma)?;
    let value = (k as f64 / n as f64) * sigma * diff.max(0.0);
    Ok(PremiumEstimate {
        value,
        k,
        n,
        gamma_hat: gamma,
        sigma_hat: sigma,
        threshold,
        contract,
        ci: None,
        tau_hat: None,
        warnings,
    })
}

/// Premium estimate from the GPD-ML fit at `k`.
pub fn xl_premium(sample: &Sample, k: usize, contract: XlContract) -> Result<PremiumEstimate> {
    let fit = gpd_ml_fit(&tail_view(sample, k)?)?;
    premium_from_fit(&fit, contract)
}

pub fn premium_from_fit(fit: &GpdFit, contract: XlContract) -> Result<PremiumEstimate> {
    premium_from_params(fit.k, fit.n, fit.threshold, fit.gamma_hat, fit.sigma_hat, contract)
}

/// Standard normal upper quantile `z_{1-p}`.
pub fn normal_upper_quantile(p: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    Normal::standard().inverse_cdf(1.0 - p)
}

/// Attaches the interval `value * [1 - z tau sigma_T / sqrt(k), 1 + z tau sigma_T / sqrt(k)]`
/// with `tau = log(t / Q_n(1)) / gamma^2` and `sigma_T = 1 + gamma`; the lower
/// bound is clipped at zero.
pub fn premium_ci(est: &PremiumEstimate, alpha: f64) -> Result<PremiumEstimate> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0,1], got {alpha}")));
    }
    let g = est.gamma_hat;
    if !(g > 0.0) {
        return Err(Error::Unsupported(format!("premium intervals need gamma_hat > 0, got {g}")));
    }
    let t = est.contract.retention;
    if !(t > est.threshold) || !(est.threshold > 0.0) {
        return Err(Error::Unsupported(format!(
            "premium intervals need a retention above a positive threshold (t={t}, Q_n(1)={})",
            est.threshold
        )));
    }
    let tau = (t / est.threshold).ln() / (g * g);
    let z = if alpha >= 1.0 { 0.0 } else { normal_upper_quantile(alpha / 2.0) };
    let rel = z * tau * (1.0 + g) / (est.k as f64).sqrt();
    let mut out = est.clone();
    out.tau_hat = Some(tau);
    out.ci = Some(Interval {
        lower: (est.value * (1.0 - rel)).max(0.0),
        upper: est.value * (1.0 + rel),
        alpha,
    });
    Ok(out)
}

/// Extreme quantile estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarEstimate {
    pub value: f64,
    pub alpha: f64,
    pub k: usize,
    pub n: usize,
    pub gamma_hat: f64,
    pub sigma_hat: f64,
    pub threshold: f64,
    pub warnings: Vec<String>,
}

/// `Q_n(1) + sigma ((n alpha / k)^{-gamma} - 1) / gamma`.
pub fn var_from_params(k: usize, n: usize, threshold: f64, gamma: f64, sigma: f64, alpha: f64) -> Result<VarEstimate> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("VaR level alpha must lie in (0,1), got {alpha}")));
    }
    let mut warnings = Vec::new();
    let ratio = k as f64 / n as f64;
    let mut x = alpha / ratio;
    if (x - 1.0).abs() <= 4.0 * f64::EPSILON {
        // alpha = k/n up to the rounding of k/n itself
        x = 1.0;
    }
    if x >= 1.0 {
        warnings.push(format!(
            "alpha={alpha} >= k/n={ratio}: interpolation regime, the empirical quantile is usually preferable"
        ));
    }
    let l = -x.ln();
    let z = if gamma.abs() < crate::distributions::SHAPE_SERIES_CUTOFF {
        l * (1.0 + 0.5 * gamma * l)
    } else {
        (gamma * l).exp_m1() / gamma
    };
    Ok(VarEstimate {
        value: threshold + sigma * z,
        alpha,
        k,
        n,
        gamma_hat: gamma,
        sigma_hat: sigma,
        threshold,
        warnings,
    })
}

pub fn var_estimate(sample: &Sample, k: usize, alpha: f64) -> Result<VarEstimate> {
    let fit = gpd_ml_fit(&tail_view(sample, k)?)?;
    var_from_params(fit.k, fit.n, fit.threshold, fit.gamma_hat, fit.sigma_hat, alpha)
}

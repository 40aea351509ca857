//! Generalized Pareto machinery and synthetic samplers.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::sample::Sample;

/// Below this distance from 0 (resp. 1) the shape-dependent formulas switch
/// to their series expansions.
pub const SHAPE_SERIES_CUTOFF: f64 = 1e-8;

/// Parameters of the generalized Pareto distribution `H_{gamma,sigma}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpdParams {
    gamma: f64,
    sigma: f64,
}

impl GpdParams {
    pub fn new(gamma: f64, sigma: f64) -> Result<Self> {
        if !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!("gamma must be finite, got {gamma}")));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sigma must be positive and finite, got {sigma}"
            )));
        }
        Ok(Self { gamma, sigma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Right endpoint of the support.
    pub fn upper_endpoint(&self) -> f64 {
        if self.gamma < 0.0 {
            -self.sigma / self.gamma
        } else {
            f64::INFINITY
        }
    }
}

/// `log(1 + gamma*y) / gamma`, continuous through `gamma = 0`.
fn log1p_over_gamma(gamma: f64, y: f64) -> f64 {
    if gamma.abs() < SHAPE_SERIES_CUTOFF {
        y * (1.0 - 0.5 * gamma * y)
    } else {
        (gamma * y).ln_1p() / gamma
    }
}

/// Cumulative distribution function `H_{gamma,sigma}(x)`.
pub fn gpd_cdf(x: f64, p: &GpdParams) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let y = x / p.sigma;
    if p.gamma < 0.0 && 1.0 + p.gamma * y <= 0.0 {
        return 1.0;
    }
    if y.is_infinite() {
        return 1.0;
    }
    -(-log1p_over_gamma(p.gamma, y)).exp_m1()
}

/// Survival function `1 - H_{gamma,sigma}(x)`, computed without cancellation.
pub fn gpd_survival(x: f64, p: &GpdParams) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let y = x / p.sigma;
    if p.gamma < 0.0 && 1.0 + p.gamma * y <= 0.0 {
        return 0.0;
    }
    (-log1p_over_gamma(p.gamma, y)).exp()
}

/// Quantile function `H^{<-}_{gamma,sigma}(q)` for `q` in `[0, 1)`.
pub fn gpd_quantile(q: f64, p: &GpdParams) -> Result<f64> {
    if !(0.0..1.0).contains(&q) {
        return Err(Error::Domain(format!("quantile level must lie in [0,1), got {q}")));
    }
    // L = -log(1-q) >= 0
    let l = -(-q).ln_1p();
    let g = p.gamma;
    let z = if g.abs() < SHAPE_SERIES_CUTOFF {
        l * (1.0 + 0.5 * g * l)
    } else {
        (g * l).exp_m1() / g
    };
    Ok(p.sigma * z)
}

/// `psi(t; gamma) = int_0^t (1 + gamma x)^{-1/gamma} dx`.
///
/// Valid for any `t` with `1 + gamma t > 0` (negative `t` included); `t = +inf`
/// is accepted for `gamma < 1` and returns `1 / (1 - gamma)`.
pub fn psi(t: f64, gamma: f64) -> Result<f64> {
    if t.is_nan() || gamma.is_nan() {
        return Err(Error::Domain("psi called with NaN".into()));
    }
    if t == f64::INFINITY {
        return if gamma < 0.0 {
            Err(Error::Domain(format!(
                "psi(inf; {gamma}) lies outside the support"
            )))
        } else if gamma < 1.0 {
            Ok(1.0 / (1.0 - gamma))
        } else {
            Ok(f64::INFINITY)
        };
    }
    if 1.0 + gamma * t <= 0.0 {
        return Err(Error::Domain(format!(
            "psi requires 1 + gamma*t > 0 (gamma={gamma}, t={t})"
        )));
    }
    if gamma.abs() < SHAPE_SERIES_CUTOFF {
        let e = (-t).exp();
        let base = -(-t).exp_m1();
        return Ok(base + gamma * (base - e * (t + 0.5 * t * t)));
    }
    let l = (gamma * t).ln_1p();
    let delta = 1.0 - gamma;
    if delta.abs() < SHAPE_SERIES_CUTOFF {
        // (1 - exp(-delta*L/gamma)) / delta expanded in delta
        let a = l / gamma;
        return Ok(a - 0.5 * delta * a * a);
    }
    // (1 - (1+gamma t)^{1-1/gamma}) / (1-gamma)
    let exponent = -delta / gamma * l;
    Ok(-exponent.exp_m1() / delta)
}

/// Families available to the synthetic sampler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    /// `F(x) = exp(-x^{-1/gamma})`, sampled as `(-log U)^{-gamma}`.
    Frechet,
    /// Quantile function `F^{<-}(1-t) = (t / |log t|)^{-gamma}`.
    LogDisturbedPareto,
    /// Deterministic midpoint quantile grid `((i - 1/2)/n)^{-gamma}` of the
    /// standard Pareto law. Ignores the seed.
    ExactPareto,
    /// Random draws from the standard Pareto law, `U^{-gamma}`.
    Pareto,
    /// Random draws from `GPD(gamma, 1)`.
    ExactGpd,
    /// Random draws from the unit exponential.
    UnitExponential,
}

/// Description of a synthetic sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub family: Family,
    pub gamma: f64,
    pub n: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(family: Family, gamma: f64, n: usize, seed: u64) -> Result<Self> {
        let spec = Self {
            family,
            gamma,
            n,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("sample size must be at least 1".into()));
        }
        if !self.gamma.is_finite() {
            return Err(Error::InvalidParameter("gamma must be finite".into()));
        }
        let needs_positive = matches!(
            self.family,
            Family::Frechet | Family::LogDisturbedPareto | Family::ExactPareto | Family::Pareto
        );
        if needs_positive && !(self.gamma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "{:?} requires gamma > 0, got {}",
                self.family, self.gamma
            )));
        }
        Ok(())
    }
}

/// Quantile function of the log-disturbed Pareto law at `1 - t`.
pub fn log_disturbed_pareto_upper_quantile(t: f64, gamma: f64) -> f64 {
    (t / t.ln().abs()).powf(-gamma)
}

/// Draws the synthetic sample described by `spec`; a pure function of `spec`.
pub fn sample(spec: &SyntheticSpec) -> Result<Sample> {
    Sample::new(sample_values(spec)?)
}

/// Same as [`sample`] but returns the raw draws in generation order.
pub fn sample_values(spec: &SyntheticSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let n = spec.n;
    let g = spec.gamma;
    if spec.family == Family::ExactPareto {
        return Ok(exact_pareto_grid(g, n));
    }
    let mut r = rng::stream(spec.seed, 0);
    let values = (0..n)
        .map(|_| {
            let u = rng::open01(&mut r);
            match spec.family {
                Family::Frechet => (-u.ln()).powf(-g),
                // U is uniform, so F^{<-}(1-U) has the right law
                Family::LogDisturbedPareto => log_disturbed_pareto_upper_quantile(u, g),
                Family::Pareto => u.powf(-g),
                Family::ExactGpd => {
                    let l = -u.ln();
                    if g.abs() < SHAPE_SERIES_CUTOFF {
                        l * (1.0 + 0.5 * g * l)
                    } else {
                        (g * l).exp_m1() / g
                    }
                }
                Family::UnitExponential => -u.ln(),
                Family::ExactPareto => unreachable!(),
            }
        })
        .collect();
    Ok(values)
}

/// `((i - 1/2)/n)^{-gamma}` for `i = 1..n` (descending).
pub fn exact_pareto_grid(gamma: f64, n: usize) -> Vec<f64> {
    let nf = n as f64;
    (1..=n)
        .map(|i| ((i as f64 - 0.5) / nf).powf(-gamma))
        .collect()
}

/// GPD quantiles at the midpoint levels `1 - (i - 1/2)/n`, `i = 1..n`.
pub fn gpd_quantile_grid(p: &GpdParams, n: usize) -> Vec<f64> {
    let nf = n as f64;
    (1..=n)
        .map(|i| {
            let q = 1.0 - (i as f64 - 0.5) / nf;
            gpd_quantile(q, p).expect("midpoint levels lie in [0,1)")
        })
        .collect()
}

/// Dependence structures for synthetic bivariate samples.
///
/// Only ranks matter downstream, so both margins are standard normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PairModel {
    Independent,
    Comonotone,
    /// Gaussian copula with correlation `rho` in (-1, 1); its coefficient of
    /// tail dependence is `(1 + rho) / 2`.
    GaussianCopula { rho: f64 },
}

/// Draws `n` pairs under `model`.
pub fn sample_pairs(model: PairModel, n: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample size must be at least 1".into()));
    }
    if let PairModel::GaussianCopula { rho } = model {
        if !(rho > -1.0 && rho < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "copula correlation must lie in (-1,1), got {rho}"
            )));
        }
    }
    let mut r = rng::stream(seed, 0);
    Ok((0..n)
        .map(|_| {
            let z1: f64 = r.sample(StandardNormal);
            match model {
                PairModel::Comonotone => (z1, z1),
                PairModel::Independent => (z1, r.sample(StandardNormal)),
                PairModel::GaussianCopula { rho } => {
                    let z2: f64 = r.sample(StandardNormal);
                    (z1, rho * z1 + (1.0 - rho * rho).sqrt() * z2)
                }
            }
        })
        .collect())
}

//! Data-driven choice of the number `k` of upper order statistics for the
//! Hill estimator: a bootstrap selector built on the auxiliary statistic
//! `A_{n,k} = (M_{n,k} - 2 hill_k^2)^2`, and a sequential selector that stops
//! when the Hill trace drifts further than its random error allows.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::sample::Sample;
use crate::tail_estimators::{hill_curve, log_moment_curves};

/// Tuning of the sequential selector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SequentialConfig {
    /// `r_n = r_factor * gamma_pilot * n^{1/4}`.
    pub r_factor: f64,
    pub xi: f64,
    pub lambda: f64,
}

impl Default for SequentialConfig {
    fn default() -> Self {
        Self {
            r_factor: 2.5,
            xi: 0.7,
            lambda: 0.8,
        }
    }
}

impl SequentialConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_factor > 0.0) {
            return Err(Error::InvalidParameter(format!("r_factor must be positive, got {}", self.r_factor)));
        }
        for (name, v) in [("xi", self.xi), ("lambda", self.lambda)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidParameter(format!("{name} must lie in (0,1), got {v}")));
            }
        }
        Ok(())
    }
}

/// Smallest sample size accepted by the sequential selector.
pub const SEQUENTIAL_MIN_N: usize = 50;

/// Outcome of the stopping rule `kbar(r)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Kbar {
    pub k: usize,
    pub found: bool,
}

/// `max_{1<=i<=k} sqrt(i) |h_i - h_k|` on a Hill curve (`curve[i-1] = h_i`).
pub fn drift_statistic(curve: &[f64], k: usize) -> f64 {
    let hk = curve[k - 1];
    curve[..k]
        .iter()
        .enumerate()
        .map(|(i, &hi)| ((i + 1) as f64).sqrt() * (hi - hk).abs())
        .fold(0.0, f64::max)
}

/// Smallest `k` whose drift statistic exceeds `r`. When no `k` on the curve
/// qualifies the result is `not_found_k` with `found = false`.
pub fn kbar_from_curve(curve: &[f64], r: f64, not_found_k: usize) -> Kbar {
    (1..=curve.len())
        .find(|&k| drift_statistic(curve, k) > r)
        .map(|k| Kbar { k, found: true })
        .unwrap_or(Kbar {
            k: not_found_k,
            found: false,
        })
}

/// Largest `k` for which the Hill estimator is defined (positive threshold).
fn usable_k_max(sample: &Sample) -> usize {
    let n = sample.len();
    (n - 1).min(sample.n_positive().saturating_sub(1))
}

/// `kbar_n(r)` on the Hill trace of `sample`.
pub fn kbar(sample: &Sample, r: f64) -> Result<Kbar> {
    let n = sample.len();
    if n < 3 {
        return Err(Error::InvalidParameter(format!("kbar needs n >= 3, got {n}")));
    }
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("r must be positive, got {r}")));
    }
    let k_max = usable_k_max(sample);
    if k_max == 0 {
        return Err(Error::Domain("sample has fewer than two positive observations".into()));
    }
    let curve = hill_curve(sample.sorted(), k_max)?;
    Ok(kbar_from_curve(&curve, r, n - 1))
}

/// Diagnostics of a sequential selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequentialSelection {
    pub k: usize,
    pub pilot_k: usize,
    pub gamma_pilot: f64,
    pub r: f64,
    pub kbar_r: usize,
    pub kbar_r_xi: usize,
    pub rho_hat: f64,
    /// True when the second-order estimate was unusable and `rho = 1` was used.
    pub rho_fallback: bool,
    pub config: SequentialConfig,
}

/// Second-order parameter estimate from the drift statistics at `kbar` and
/// `[lambda * kbar]`.
pub fn rho_estimate(curve: &[f64], kbar_r: usize, lambda: f64) -> f64 {
    let kl = (lambda * kbar_r as f64).floor() as usize;
    if kl == 0 || kbar_r > curve.len() {
        return f64::NAN;
    }
    let num = drift_statistic(curve, kl);
    let den = drift_statistic(curve, kbar_r);
    (num / den).ln() / lambda.ln() - 0.5
}

/// Sequential selection of `k` for the Hill estimator.
pub fn select_k_sequential(sample: &Sample, cfg: &SequentialConfig) -> Result<SequentialSelection> {
    cfg.validate()?;
    let n = sample.len();
    if n < SEQUENTIAL_MIN_N {
        return Err(Error::InvalidParameter(format!(
            "sequential selection needs n >= {SEQUENTIAL_MIN_N}, got {n}"
        )));
    }
    let k_max = usable_k_max(sample);
    if k_max < 2 {
        return Err(Error::SelectionFailed("too few positive observations".into()));
    }
    let curve = hill_curve(sample.sorted(), k_max)?;
    let n_pos = sample.n_positive() as f64;
    let pilot_k = ((2.0 * n_pos.sqrt()).floor() as usize).clamp(1, k_max);
    let gamma_pilot = curve[pilot_k - 1];
    if !(gamma_pilot > 0.0) {
        return Err(Error::SelectionFailed(format!(
            "pilot Hill estimate {gamma_pilot} at k={pilot_k} is not positive"
        )));
    }
    let r = cfg.r_factor * gamma_pilot * (n as f64).powf(0.25);
    let kb = kbar_from_curve(&curve, r, n - 1);
    let kb_xi = kbar_from_curve(&curve, r.powf(cfg.xi), n - 1);
    if !kb.found || !kb_xi.found {
        return Err(Error::SelectionFailed(format!(
            "the Hill trace never drifts past r={r:.4} (or r^xi); no bias onset detected"
        )));
    }
    let mut rho_hat = rho_estimate(&curve, kb.k, cfg.lambda);
    let rho_fallback = !(rho_hat.is_finite() && rho_hat > 0.0);
    if rho_fallback {
        rho_hat = 1.0;
    }
    let ratio = kb_xi.k as f64 / (kb.k as f64).powf(cfg.xi);
    let raw = (2.0 * rho_hat + 1.0).powf(-1.0 / rho_hat)
        * (2.0 * gamma_pilot * gamma_pilot * rho_hat).powf(1.0 / (2.0 * rho_hat + 1.0))
        * ratio.powf(1.0 / (1.0 - cfg.xi));
    if !raw.is_finite() {
        return Err(Error::SelectionFailed(format!("selected k is not finite ({raw})")));
    }
    let k = clamp_k(raw, n);
    Ok(SequentialSelection {
        k,
        pilot_k,
        gamma_pilot,
        r,
        kbar_r: kb.k,
        kbar_r_xi: kb_xi.k,
        rho_hat,
        rho_fallback,
        config: *cfg,
    })
}

/// Truncates to an integer and clamps to `[2, n-1]`.
fn clamp_k(raw: f64, n: usize) -> usize {
    let hi = (n - 1) as f64;
    raw.floor().clamp(2.0, hi) as usize
}

/// Tuning of the bootstrap selector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    /// Every first-stage resample size obeys `n1 <= ceil(n^{1-epsilon})`.
    pub epsilon: f64,
    pub n1_candidates: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    /// Smallest admissible second-stage size `n2 = [n1^2 / n]`.
    pub min_n2: usize,
}

/// Default exponents `e` for the candidate sizes `ceil(n^e)`.
pub const DEFAULT_N1_EXPONENTS: [f64; 4] = [0.95, 0.9, 0.85, 0.8];
pub const DEFAULT_REPLICATES: usize = 500;

impl BootstrapConfig {
    /// Default grid for a sample of size `n`.
    pub fn for_sample_size(n: usize, seed: u64) -> Self {
        let nf = n as f64;
        let n1_candidates = DEFAULT_N1_EXPONENTS
            .iter()
            .map(|e| nf.powf(*e).ceil() as usize)
            .collect();
        Self {
            epsilon: 0.05,
            n1_candidates,
            replicates: DEFAULT_REPLICATES,
            seed,
            min_n2: 10,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(Error::InvalidParameter(format!("epsilon must lie in (0,1/2), got {}", self.epsilon)));
        }
        if self.replicates < 100 {
            return Err(Error::InvalidParameter(format!(
                "at least 100 bootstrap replicates required, got {}",
                self.replicates
            )));
        }
        if self.n1_candidates.is_empty() {
            return Err(Error::InvalidParameter("no n1 candidates".into()));
        }
        let cap = (n as f64).powf(1.0 - self.epsilon).ceil() as usize;
        for &n1 in &self.n1_candidates {
            if n1 >= n || n1 > cap {
                return Err(Error::InvalidParameter(format!(
                    "n1={n1} must be below n={n} and at most n^(1-epsilon)={cap}"
                )));
            }
            let n2 = n1 * n1 / n;
            if n2 < self.min_n2.max(10) {
                return Err(Error::InvalidParameter(format!(
                    "n2=[n1^2/n]={n2} for n1={n1} is below the minimum {}",
                    self.min_n2.max(10)
                )));
            }
        }
        Ok(())
    }
}

/// Candidate range `{[log m], ..., [m / log m]}` for resamples of size `m`.
pub fn bootstrap_k_range(m: usize) -> (usize, usize) {
    let lm = (m as f64).ln();
    let lo = (lm.floor() as usize).max(2);
    let hi = ((m as f64 / lm).floor() as usize).min(m - 1);
    (lo, hi)
}

/// Monte-Carlo estimate of `E*[(M*_{m,k} - 2 hill*_{m,k}^2)^2]` on the
/// candidate range, one entry per `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCurve {
    pub m: usize,
    pub k_lo: usize,
    pub values: Vec<f64>,
}

impl BootstrapCurve {
    /// First global minimizer and the minimum.
    pub fn argmin(&self) -> (usize, f64) {
        let (idx, val) = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) });
        (self.k_lo + idx, val)
    }
}

const MAX_REDRAWS: usize = 100;

/// Averages `A*_{m,k}` over `replicates` resamples of size `m`. Resample `b`
/// draws from stream `(stream_base << 32) | b`.
pub fn bootstrap_curve(
    sorted: &[f64],
    m: usize,
    replicates: usize,
    seed: u64,
    stream_base: u64,
) -> Result<BootstrapCurve> {
    let n = sorted.len();
    let (k_lo, k_hi) = bootstrap_k_range(m);
    if k_lo > k_hi {
        return Err(Error::InvalidParameter(format!("resample size {m} leaves an empty k range")));
    }
    let mut acc = vec![0.0; k_hi - k_lo + 1];
    let mut idx: Vec<u32> = vec![0; m];
    let mut resample = vec![0.0; m];
    for b in 0..replicates {
        let mut r = rng::stream(seed, (stream_base << 32) | b as u64);
        let mut ok = false;
        for _ in 0..MAX_REDRAWS {
            for slot in idx.iter_mut() {
                *slot = r.random_range(0..n as u32);
            }
            // indices into sorted data: sorting them sorts the resample
            idx.sort_unstable();
            for (dst, &i) in resample.iter_mut().zip(&idx) {
                *dst = sorted[i as usize];
            }
            if resample[m - k_hi - 1] > 0.0 {
                ok = true;
                break;
            }
        }
        if !ok {
            return Err(Error::SelectionFailed(format!(
                "{MAX_REDRAWS} consecutive resamples had a non-positive threshold"
            )));
        }
        let (h, mm) = log_moment_curves(&resample, k_hi)?;
        for (j, a) in acc.iter_mut().enumerate() {
            let k = k_lo + j;
            let d = mm[k - 1] - 2.0 * h[k - 1] * h[k - 1];
            *a += d * d;
        }
    }
    let bf = replicates as f64;
    Ok(BootstrapCurve {
        m,
        k_lo,
        values: acc.into_iter().map(|a| a / bf).collect(),
    })
}

/// Per-candidate diagnostics of the bootstrap selector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCandidate {
    pub n1: usize,
    pub n2: usize,
    pub k1: usize,
    pub k2: usize,
    pub q1: f64,
    pub q2: f64,
    /// `q1^2 / q2`; the candidate with the smallest value is used.
    pub criterion: f64,
    pub k_hat_raw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSelection {
    pub k: usize,
    pub chosen: usize,
    pub candidates: Vec<BootstrapCandidate>,
}

/// `k1^2/k2 * (2 log n1 / log k1 - 1)^{2 (log k1 / log n1 - 1)}`.
pub fn bootstrap_k_formula(n1: usize, k1: usize, k2: usize) -> f64 {
    let ln1 = (n1 as f64).ln();
    let lk1 = (k1 as f64).ln();
    let k1f = k1 as f64;
    k1f * k1f / k2 as f64 * (2.0 * ln1 / lk1 - 1.0).powf(2.0 * (lk1 / ln1 - 1.0))
}

/// Bootstrap selection of `k` for the Hill estimator.
pub fn select_k_bootstrap(sample: &Sample, cfg: &BootstrapConfig) -> Result<BootstrapSelection> {
    let n = sample.len();
    cfg.validate(n)?;
    let sorted = sample.sorted();
    let mut candidates = Vec::with_capacity(cfg.n1_candidates.len());
    for (c, &n1) in cfg.n1_candidates.iter().enumerate() {
        let n2 = n1 * n1 / n;
        let base = 2 * c as u64;
        let (k1, q1) = bootstrap_curve(sorted, n1, cfg.replicates, cfg.seed, base)?.argmin();
        let (k2, q2) = bootstrap_curve(sorted, n2, cfg.replicates, cfg.seed, base + 1)?.argmin();
        candidates.push(BootstrapCandidate {
            n1,
            n2,
            k1,
            k2,
            q1,
            q2,
            criterion: q1 * q1 / q2,
            k_hat_raw: bootstrap_k_formula(n1, k1, k2),
        });
    }
    let chosen = candidates
        .iter()
        .enumerate()
        .filter(|(_, c)| c.criterion.is_finite() && c.k_hat_raw.is_finite())
        .fold(None::<(usize, f64)>, |best, (i, c)| match best {
            Some((_, v)) if v <= c.criterion => best,
            _ => Some((i, c.criterion)),
        })
        .map(|(i, _)| i)
        .ok_or_else(|| Error::SelectionFailed("no n1 candidate produced a finite criterion".into()))?;
    let k = clamp_k(candidates[chosen].k_hat_raw, n);
    Ok(BootstrapSelection { k, chosen, candidates })
}

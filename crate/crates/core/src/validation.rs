//! Monte-Carlo critical values for weighted suprema of the Gaussian limit
//! processes of the tail quantile plot, and the resulting confidence bands.
//!
//! The processes involve integrals `I = int s^{-(gamma+1)} W(s) nu(ds)` of a
//! Brownian motion against a signed measure. They are never discretized:
//! given `W` on the grid `t_i = i/m`, each cell contributes an independent
//! normal whose mean is linear in the increments and whose variance only
//! needs power-function integrals of `nu`. One replicate therefore costs `m`
//! increments plus one normal per integral.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;
use crate::rng;
use crate::sample::Sample;
use crate::tail_estimators::{hill, tail_view, GpdFit};

/// Coefficients of `Delta_i` in the conditional mean of `int_0^1 s^{-1} W(s) ds`
/// on the grid `i/m`, and the conditional variance of that integral.
///
/// These cover the absolutely continuous part of the Hill measure; the atom
/// at 1 contributes `-W(1)` with no conditional variance.
pub fn hill_integral_moments(m: usize) -> Result<(Vec<f64>, f64)> {
    if m == 0 {
        return Err(Error::InvalidParameter("grid size m must be at least 1".into()));
    }
    let mf = m as f64;
    let coeffs = (1..=m)
        .map(|i| {
            if i == 1 {
                1.0 + mf.ln()
            } else {
                let fi = i as f64;
                (mf / fi).ln() + 1.0 - (fi - 1.0) * (fi / (fi - 1.0)).ln()
            }
        })
        .collect();
    let s: f64 = (1..m)
        .map(|i| {
            let fi = i as f64;
            let l = (1.0 / fi).ln_1p();
            fi * (fi + 1.0) * l * l
        })
        .sum();
    Ok((coeffs, 1.0 - s / mf))
}

type Density = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A signed measure on `(0, 1]`: an optional Lebesgue density plus atoms.
#[derive(Clone)]
pub struct SignedMeasure {
    density: Option<Density>,
    atoms: Vec<(f64, f64)>,
    label: String,
}

impl fmt::Debug for SignedMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SignedMeasure")
            .field("label", &self.label)
            .field("has_density", &self.density.is_some())
            .field("atoms", &self.atoms)
            .finish()
    }
}

/// `(exp(g*l) - 1) / g`, equal to `l` at `g = 0`.
fn expm1_over(g: f64, l: f64) -> f64 {
    if g == 0.0 {
        l
    } else {
        (g * l).exp_m1() / g
    }
}

impl SignedMeasure {
    pub fn new<F>(density: Option<F>, atoms: Vec<(f64, f64)>, label: impl Into<String>) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        for &(loc, w) in &atoms {
            if !(loc > 0.0 && loc <= 1.0) || !w.is_finite() {
                return Err(Error::Configuration(format!(
                    "atom ({loc}, {w}) must sit in (0,1] with finite weight"
                )));
            }
        }
        Ok(Self {
            density: density.map(|f| Arc::new(f) as Density),
            atoms,
            label: label.into(),
        })
    }

    pub fn zero() -> Self {
        Self {
            density: None,
            atoms: Vec::new(),
            label: "zero".into(),
        }
    }

    /// Derivative measure of the Hill functional: `gamma (s^gamma ds - eps_1)`.
    pub fn hill(gamma: f64) -> Self {
        Self {
            density: Some(Arc::new(move |s: f64| gamma * s.powf(gamma))),
            atoms: vec![(1.0, -gamma)],
            label: format!("hill(gamma={gamma})"),
        }
    }

    /// Derivative measure of the shape functional of the GPD likelihood
    /// equations, obtained by implicit differentiation at `z_gamma`:
    /// `(1+g)^2 [(-s^g (s^g-1)/g - 2 s^{2g}) ds + eps_1 / (1+g)]`.
    pub fn ml_shape(gamma: f64) -> Self {
        let c = (1.0 + gamma) * (1.0 + gamma);
        Self {
            density: Some(Arc::new(move |s: f64| {
                let l = s.ln();
                let sg = (gamma * l).exp();
                c * (-sg * expm1_over(gamma, l) - 2.0 * sg * sg)
            })),
            atoms: vec![(1.0, 1.0 + gamma)],
            label: format!("ml_shape(gamma={gamma})"),
        }
    }

    /// Derivative measure of the scale functional of the GPD likelihood
    /// equations: `(1+g) s^g ds - eps_1 - nu_shape`.
    pub fn ml_scale(gamma: f64) -> Self {
        let shape = Self::ml_shape(gamma);
        let shape_density = shape.density.clone().expect("shape measure has a density");
        Self {
            density: Some(Arc::new(move |s: f64| {
                (1.0 + gamma) * s.powf(gamma) - shape_density(s)
            })),
            atoms: vec![(1.0, -(2.0 + gamma))],
            label: format!("ml_scale(gamma={gamma})"),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn density_at(&self, s: f64) -> f64 {
        self.density.as_ref().map_or(0.0, |d| d(s))
    }

    pub fn has_density(&self) -> bool {
        self.density.is_some()
    }
}

/// Shape of a weight function `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WeightForm {
    /// `h = 1`.
    Constant,
    /// `h(t) = t^exponent`.
    Power { exponent: f64 },
    /// `h(t) = (t(1-t))^exponent / sigma(t)` with `sigma^2(t) = 1/t - 1 - log^2 t`,
    /// the variance function of the Hill-case process.
    SigmaNormalized { exponent: f64 },
}

/// Weight function on `(0, 1]`; `h = 0` (no constraint) below `lower`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightFunction {
    pub form: WeightForm,
    pub lower: f64,
}

/// `1/t - 1 - log^2 t`.
pub fn hill_variance_function(t: f64) -> f64 {
    let l = t.ln();
    (1.0 - t) / t - l * l
}

impl WeightFunction {
    pub fn new(form: WeightForm) -> Self {
        Self { form, lower: 0.0 }
    }

    pub fn truncated(form: WeightForm, lower: f64) -> Self {
        Self { form, lower }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.form {
            WeightForm::Constant => true,
            WeightForm::Power { exponent } | WeightForm::SigmaNormalized { exponent } => exponent.is_finite(),
        };
        if !ok || !(0.0..1.0).contains(&self.lower) {
            return Err(Error::Configuration(format!("invalid weight function {self:?}")));
        }
        Ok(())
    }

    /// `h(t)`; `NaN` where undefined (e.g. `t = 1` for the sigma-normalized form).
    pub fn eval(&self, t: f64) -> f64 {
        if t < self.lower {
            return 0.0;
        }
        match self.form {
            WeightForm::Constant => 1.0,
            WeightForm::Power { exponent } => t.powf(exponent),
            WeightForm::SigmaNormalized { exponent } => {
                let v = hill_variance_function(t);
                if !(v > 0.0) {
                    return f64::NAN;
                }
                (t * (1.0 - t)).powf(exponent) / v.sqrt()
            }
        }
    }
}

/// Conditional Gaussian structure of one or more integrals
/// `I_r = int s^{-(gamma+1)} W(s) nu_r(ds)` given `W` on the grid `i/m`.
#[derive(Debug, Clone)]
pub struct GaussianDesign {
    pub gamma: f64,
    pub m: usize,
    /// `coeffs[r][j]`: weight of `Delta_{j+1}` in `E[I_r | W]`.
    pub coeffs: Vec<Vec<f64>>,
    /// Conditional covariance of the integrals.
    pub cond_cov: Vec<Vec<f64>>,
    chol: Vec<Vec<f64>>,
}

const CELL_TOL: f64 = 1e-12;

struct CellIntegrals {
    a: Vec<f64>,
    b: Vec<f64>,
}

fn integrate_checked<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, what: &str) -> Result<f64> {
    let q = quad::integrate(f, lo, hi, CELL_TOL * (hi - lo).max(1e-3));
    if !q.value.is_finite() || q.error > 1e-8 * (1.0 + q.value.abs()) {
        return Err(Error::Configuration(format!(
            "{what} on ({lo}, {hi}] is not integrable (value {}, error {:e})",
            q.value, q.error
        )));
    }
    Ok(q.value)
}

fn cell_integrals(nu: &SignedMeasure, gamma: f64, m: usize) -> Result<CellIntegrals> {
    let mf = m as f64;
    let mut a = vec![0.0; m];
    let mut b = vec![0.0; m];
    for i in 1..=m {
        let lo = (i - 1) as f64 / mf;
        let hi = i as f64 / mf;
        if let Some(d) = &nu.density {
            a[i - 1] = integrate_checked(|s| s.powf(-gamma) * d(s), lo, hi, "s^-gamma nu(ds)")?;
            // the first cell's b never enters: its multiplier W(0) - 0 is zero
            if i > 1 {
                b[i - 1] = integrate_checked(|s| s.powf(-gamma - 1.0) * d(s), lo, hi, "s^-(gamma+1) nu(ds)")?;
            }
        }
        for &(loc, w) in &nu.atoms {
            if loc > lo && loc <= hi {
                a[i - 1] += w * loc.powf(-gamma);
                if i > 1 {
                    b[i - 1] += w * loc.powf(-gamma - 1.0);
                }
            }
        }
    }
    Ok(CellIntegrals { a, b })
}

/// `(1/d) int int f(s) f'(t) (min(s,t) - lo)(hi - max(s,t)) nu(ds) nu'(dt)` on one cell.
fn cell_covariance(nu: &SignedMeasure, mu: &SignedMeasure, gamma: f64, lo: f64, hi: f64) -> Result<f64> {
    let width = hi - lo;
    let kern = |s: f64, t: f64| (s.min(t) - lo) * (hi - s.max(t));
    let f = |s: f64| s.powf(-gamma - 1.0);
    let mut total = 0.0;
    if let (Some(d1), Some(d2)) = (&nu.density, &mu.density) {
        let phi1 = |s: f64| f(s) * d1(s);
        let phi2 = |s: f64| f(s) * d2(s);
        // int (hi - t) [phi2(t) P1(t) + phi1(t) P2(t)] dt, P(t) = int_lo^t phi(s)(s - lo) ds
        let inner = |phi: &dyn Fn(f64) -> f64, t: f64| {
            quad::integrate(|s| phi(s) * (s - lo), lo, t, CELL_TOL * width * width).value
        };
        total += integrate_checked(
            |t| (hi - t) * (phi2(t) * inner(&phi1, t) + phi1(t) * inner(&phi2, t)),
            lo,
            hi,
            "conditional covariance",
        )?;
    }
    // atoms strictly inside the cell; atoms at `hi` have zero kernel
    let inside = |m: &SignedMeasure| -> Vec<(f64, f64)> {
        m.atoms.iter().copied().filter(|&(l, _)| l > lo && l < hi).collect()
    };
    for (loc, w) in inside(nu) {
        if let Some(d2) = &mu.density {
            total += w * f(loc) * integrate_checked(|t| f(t) * d2(t) * kern(loc, t), lo, hi, "atom cross term")?;
        }
        for (loc2, w2) in inside(mu) {
            total += w * w2 * f(loc) * f(loc2) * kern(loc, loc2);
        }
    }
    for (loc, w) in inside(mu) {
        if let Some(d1) = &nu.density {
            total += w * f(loc) * integrate_checked(|s| f(s) * d1(s) * kern(s, loc), lo, hi, "atom cross term")?;
        }
    }
    Ok(total / width)
}

fn cholesky(a: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|p| l[i][p] * l[j][p]).sum();
            if i == j {
                let d = a[i][i] - s;
                // tiny negative values are quadrature noise on a singular matrix
                if d < -1e-9 * (1.0 + a[i][i].abs()) {
                    return Err(Error::Configuration(format!(
                        "conditional covariance is not positive semi-definite (pivot {d})"
                    )));
                }
                l[i][j] = d.max(0.0).sqrt();
            } else {
                l[i][j] = if l[j][j] > 0.0 { (a[i][j] - s) / l[j][j] } else { 0.0 };
            }
        }
    }
    Ok(l)
}

impl GaussianDesign {
    /// Builds the design for the given measures by cell-wise quadrature.
    pub fn new(gamma: f64, measures: &[&SignedMeasure], m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("grid size m must be at least 1".into()));
        }
        if !gamma.is_finite() {
            return Err(Error::Configuration(format!("gamma must be finite, got {gamma}")));
        }
        let mf = m as f64;
        let mut coeffs = Vec::with_capacity(measures.len());
        for nu in measures {
            let cells = cell_integrals(nu, gamma, m)?;
            coeffs.push(mean_coefficients(&cells.a, &cells.b, m));
        }
        let r = measures.len();
        let mut cond_cov = vec![vec![0.0; r]; r];
        for p in 0..r {
            for q in p..r {
                let mut s = 0.0;
                for i in 1..=m {
                    s += cell_covariance(measures[p], measures[q], gamma, (i - 1) as f64 / mf, i as f64 / mf)?;
                }
                cond_cov[p][q] = s;
                cond_cov[q][p] = s;
            }
        }
        let chol = cholesky(&cond_cov)?;
        Ok(Self {
            gamma,
            m,
            coeffs,
            cond_cov,
            chol,
        })
    }

    /// Closed-form design for the Hill measure at `gamma`.
    pub fn hill(gamma: f64, m: usize) -> Result<Self> {
        let (c, v) = hill_integral_moments(m)?;
        // the atom -gamma*eps_1 adds -gamma*W(1) = -gamma * sum Delta_j
        let coeffs = vec![c.iter().map(|x| gamma * (x - 1.0)).collect()];
        let var = gamma * gamma * v;
        Ok(Self {
            gamma,
            m,
            coeffs,
            cond_cov: vec![vec![var]],
            chol: vec![vec![var.max(0.0).sqrt()]],
        })
    }

    /// Unconditional covariance of the integrals implied by the design.
    pub fn total_cov(&self) -> Vec<Vec<f64>> {
        let mf = self.m as f64;
        let r = self.coeffs.len();
        let mut out = self.cond_cov.clone();
        for p in 0..r {
            for q in 0..r {
                out[p][q] += self.coeffs[p].iter().zip(&self.coeffs[q]).map(|(a, b)| a * b).sum::<f64>() / mf;
            }
        }
        out
    }

    /// Draws one path: `W(t_1..t_m)` and the integrals. Returns the
    /// conditional means alongside so callers can inspect the residuals.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, w: &mut [f64], integrals: &mut [f64], means: &mut [f64]) {
        let sd = (1.0 / self.m as f64).sqrt();
        let mut acc = 0.0;
        means.iter_mut().for_each(|x| *x = 0.0);
        for j in 0..self.m {
            let d: f64 = sd * rng.sample::<f64, _>(StandardNormal);
            acc += d;
            w[j] = acc;
            for (mean, c) in means.iter_mut().zip(&self.coeffs) {
                *mean += c[j] * d;
            }
        }
        let r = self.coeffs.len();
        let xi: Vec<f64> = (0..r).map(|_| rng.sample(StandardNormal)).collect();
        for p in 0..r {
            let noise: f64 = (0..=p).map(|q| self.chol[p][q] * xi[q]).sum();
            integrals[p] = means[p] + noise;
        }
    }
}

fn mean_coefficients(a: &[f64], b: &[f64], m: usize) -> Vec<f64> {
    // coef_j = m a_j + sum_{i>j} b_i - (j-1) b_j
    let mf = m as f64;
    let mut out = vec![0.0; m];
    let mut tail = 0.0;
    for j in (1..=m).rev() {
        out[j - 1] = mf * a[j - 1] + tail - (j - 1) as f64 * b[j - 1];
        tail += b[j - 1];
    }
    out
}

/// Sorted simulated values of a weighted supremum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupDistribution {
    pub sorted: Vec<f64>,
    pub m: usize,
    pub n_sims: usize,
    pub seed: u64,
}

pub const MIN_GRID: usize = 10;
pub const MIN_SIMS: usize = 1000;

fn check_sim_sizes(m: usize, n_sims: usize) -> Result<()> {
    if m < MIN_GRID || n_sims < MIN_SIMS {
        return Err(Error::InvalidParameter(format!(
            "need m >= {MIN_GRID} and n_sims >= {MIN_SIMS} (m={m}, n_sims={n_sims})"
        )));
    }
    Ok(())
}

fn weights_on_grid(h: &WeightFunction, m: usize) -> Result<Vec<f64>> {
    h.validate()?;
    let mf = m as f64;
    let w: Vec<f64> = (1..=m).map(|i| h.eval(i as f64 / mf)).collect();
    if w.iter().any(|x| *x < 0.0) {
        return Err(Error::Configuration("weight function must be non-negative".into()));
    }
    Ok(w)
}

fn run_simulation<F>(design: &GaussianDesign, n_sims: usize, seed: u64, mut sup: F) -> Vec<f64>
where
    F: FnMut(&[f64], &[f64]) -> f64,
{
    let r = design.coeffs.len();
    let mut w = vec![0.0; design.m];
    let mut integrals = vec![0.0; r];
    let mut means = vec![0.0; r];
    let mut out: Vec<f64> = (0..n_sims)
        .map(|rep| {
            let mut g = rng::stream(seed, rep as u64);
            design.draw(&mut g, &mut w, &mut integrals, &mut means);
            sup(&w, &integrals)
        })
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

/// Simulates `sup_i h(t_i) |Z(t_i)|` for the quantile-plot process
/// `Z(t) = gamma (W(t)/t - W(1)) + I log t`, `I = int s^{-(gamma+1)} W dnu`.
pub fn simulate_sup_distribution(
    gamma: f64,
    nu: &SignedMeasure,
    h: &WeightFunction,
    m: usize,
    n_sims: usize,
    seed: u64,
) -> Result<SupDistribution> {
    check_sim_sizes(m, n_sims)?;
    let design = GaussianDesign::new(gamma, &[nu], m)?;
    simulate_with_design(&design, h, n_sims, seed)
}

/// Same as [`simulate_sup_distribution`] with a prepared design (for example
/// [`GaussianDesign::hill`]).
pub fn simulate_with_design(
    design: &GaussianDesign,
    h: &WeightFunction,
    n_sims: usize,
    seed: u64,
) -> Result<SupDistribution> {
    let m = design.m;
    check_sim_sizes(m, n_sims)?;
    if design.coeffs.len() != 1 {
        return Err(Error::Configuration("quantile-plot process takes exactly one measure".into()));
    }
    let weights = weights_on_grid(h, m)?;
    let mf = m as f64;
    let pts: Vec<(usize, f64, f64)> = (1..=m)
        .filter(|&i| weights[i - 1].is_finite() && weights[i - 1] > 0.0)
        .map(|i| (i - 1, mf / i as f64, (i as f64 / mf).ln()))
        .collect();
    let gamma = design.gamma;
    let sorted = run_simulation(design, n_sims, seed, |w, integrals| {
        let w1 = w[m - 1];
        let i0 = integrals[0];
        pts.iter()
            .map(|&(j, inv_t, lt)| weights[j] * (gamma * (w[j] * inv_t - w1) + i0 * lt).abs())
            .fold(0.0, f64::max)
    });
    Ok(SupDistribution { sorted, m, n_sims, seed })
}

/// `(1 - t^{-g}(1 + g log t)) / g^2`, equal to `log^2 t / 2` at `g = 0`.
pub fn shape_sensitivity(g: f64, t: f64) -> f64 {
    let l = -t.ln();
    let x = g * l;
    if x.abs() < 1e-3 {
        l * l * (0.5 + x / 3.0 + x * x / 8.0 + x * x * x / 30.0)
    } else {
        (1.0 - x.exp() * (1.0 - x)) / (g * g)
    }
}

/// `(t^{-g} - 1) / g`, equal to `-log t` at `g = 0`.
pub fn scale_sensitivity(g: f64, t: f64) -> f64 {
    expm1_over(g, -t.ln())
}

/// Simulates the weighted supremum of the GPD quantile-function process
/// `t^{-(g+1)} W(t) - W(1) - I_T c1(t) - I_S c2(t)`.
pub fn simulate_gpd_sup_distribution(
    gamma: f64,
    nu_t: &SignedMeasure,
    nu_s: &SignedMeasure,
    h: &WeightFunction,
    m: usize,
    n_sims: usize,
    seed: u64,
) -> Result<SupDistribution> {
    check_sim_sizes(m, n_sims)?;
    let design = GaussianDesign::new(gamma, &[nu_t, nu_s], m)?;
    let weights = weights_on_grid(h, m)?;
    let mf = m as f64;
    let pts: Vec<(usize, f64, f64, f64)> = (1..=m)
        .filter(|&i| weights[i - 1].is_finite() && weights[i - 1] > 0.0)
        .map(|i| {
            let t = i as f64 / mf;
            (i - 1, t.powf(-gamma - 1.0), shape_sensitivity(gamma, t), scale_sensitivity(gamma, t))
        })
        .collect();
    let sorted = run_simulation(&design, n_sims, seed, |w, integrals| {
        let w1 = w[m - 1];
        pts.iter()
            .map(|&(j, pw, c1, c2)| {
                weights[j] * (pw * w[j] - w1 - integrals[0] * c1 - integrals[1] * c2).abs()
            })
            .fold(0.0, f64::max)
    });
    Ok(SupDistribution { sorted, m, n_sims, seed })
}

/// Empirical `(1 - alpha)` quantile: the `(floor((1-alpha) N) + 1)`-th order
/// statistic, capped at `N`.
pub fn critical_value(sorted: &[f64], alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0,1), got {alpha}")));
    }
    if sorted.is_empty() {
        return Err(Error::InvalidParameter("empty simulated distribution".into()));
    }
    let n = sorted.len();
    let pos = ((1.0 - alpha) * n as f64 + 1e-9).floor() as usize + 1;
    Ok(sorted[pos.min(n) - 1])
}

/// Pareto quantile plot of the top `k` observations with its band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandResult {
    pub k: usize,
    /// `(-log((i-1/2)/(k+1/2)), log(X_{n-i+1:n} / X_{n-k:n}))`, `i = 1..k`.
    pub points: Vec<(f64, f64)>,
    /// Hill estimate: slope of the fitted line through the origin.
    pub slope: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub c_alpha: f64,
    pub alpha: f64,
    pub all_inside: bool,
}

impl BandResult {
    /// Whether the test rejects the Pareto tail at level `alpha`.
    pub fn rejects(&self) -> bool {
        !self.all_inside
    }
}

/// Plotting positions `(i - 1/2)/(k + 1/2)`, `i = 1..k`.
pub fn plotting_positions(k: usize) -> Vec<f64> {
    let d = k as f64 + 0.5;
    (1..=k).map(|i| (i as f64 - 0.5) / d).collect()
}

/// Band around the Hill line with a given critical value.
///
/// The band at plotting position `t` is `slope * (-log t +- c / (h(t) sqrt(k)))`.
pub fn qq_band_with_critical(
    sample: &Sample,
    k: usize,
    h: &WeightFunction,
    c_alpha: f64,
    alpha: f64,
) -> Result<BandResult> {
    h.validate()?;
    let view = tail_view(sample, k)?;
    let slope = hill(&view)?;
    if !(slope > 0.0) {
        return Err(Error::Domain(format!("Hill estimate {slope} must be positive for a Pareto band")));
    }
    let u = view.threshold();
    let sk = (k as f64).sqrt();
    let ts = plotting_positions(k);
    let mut points = Vec::with_capacity(k);
    let mut lower = Vec::with_capacity(k);
    let mut upper = Vec::with_capacity(k);
    let mut all_inside = true;
    for (i, &t) in ts.iter().enumerate() {
        let hv = h.eval(t);
        if !(hv >= 0.0) || hv.is_infinite() {
            return Err(Error::Configuration(format!("weight undefined at plotting position {t}")));
        }
        let x = -t.ln();
        let y = (view.order_stats()[i] / u).ln();
        let half = if hv > 0.0 { slope * c_alpha / (hv * sk) } else { f64::INFINITY };
        let (lo, hi) = (slope * x - half, slope * x + half);
        all_inside &= y >= lo && y <= hi;
        points.push((x, y));
        lower.push(lo);
        upper.push(hi);
    }
    Ok(BandResult {
        k,
        points,
        slope,
        lower,
        upper,
        c_alpha,
        alpha,
        all_inside,
    })
}

/// Simulates the Hill-case critical value and builds the band.
pub fn qq_band(
    sample: &Sample,
    k: usize,
    h: &WeightFunction,
    alpha: f64,
    m: usize,
    n_sims: usize,
    seed: u64,
) -> Result<BandResult> {
    // the Hill-case supremum does not depend on gamma once divided by it
    let design = GaussianDesign::hill(1.0, m)?;
    let dist = simulate_with_design(&design, h, n_sims, seed)?;
    let c = critical_value(&dist.sorted, alpha)?;
    qq_band_with_critical(sample, k, h, c, alpha)
}

/// Band around the fitted GPD quantile function, in the original units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpdBandResult {
    pub k: usize,
    /// `((i-1/2)/(k+1/2), X_{n-i+1:n})`.
    pub points: Vec<(f64, f64)>,
    pub center: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub gamma_hat: f64,
    pub sigma_hat: f64,
    pub threshold: f64,
    pub c_alpha: f64,
    pub alpha: f64,
    pub all_inside: bool,
}

/// Band with a given critical value: `Q(1) + sigma ((t^{-g}-1)/g +- c/(h(t) sqrt(k)))`.
pub fn gpd_band_with_critical(
    sample: &Sample,
    fit: &GpdFit,
    h: &WeightFunction,
    c_alpha: f64,
    alpha: f64,
) -> Result<GpdBandResult> {
    h.validate()?;
    let view = tail_view(sample, fit.k)?;
    let k = fit.k;
    let sk = (k as f64).sqrt();
    let (g, s, u) = (fit.gamma_hat, fit.sigma_hat, fit.threshold);
    let mut res = GpdBandResult {
        k,
        points: Vec::with_capacity(k),
        center: Vec::with_capacity(k),
        lower: Vec::with_capacity(k),
        upper: Vec::with_capacity(k),
        gamma_hat: g,
        sigma_hat: s,
        threshold: u,
        c_alpha,
        alpha,
        all_inside: true,
    };
    for (i, t) in plotting_positions(k).into_iter().enumerate() {
        let hv = h.eval(t);
        if !(hv >= 0.0) || hv.is_infinite() {
            return Err(Error::Configuration(format!("weight undefined at plotting position {t}")));
        }
        let x = view.order_stats()[i];
        let c = u + s * scale_sensitivity(g, t);
        let half = if hv > 0.0 { s * c_alpha / (hv * sk) } else { f64::INFINITY };
        res.all_inside &= x >= c - half && x <= c + half;
        res.points.push((t, x));
        res.center.push(c);
        res.lower.push(c - half);
        res.upper.push(c + half);
    }
    Ok(res)
}

/// Simulates the critical value at the fitted shape and builds the band.
#[allow(clippy::too_many_arguments)]
pub fn gpd_band(
    sample: &Sample,
    fit: &GpdFit,
    nu_t: &SignedMeasure,
    nu_s: &SignedMeasure,
    h: &WeightFunction,
    alpha: f64,
    m: usize,
    n_sims: usize,
    seed: u64,
) -> Result<GpdBandResult> {
    let dist = simulate_gpd_sup_distribution(fit.gamma_hat, nu_t, nu_s, h, m, n_sims, seed)?;
    let c = critical_value(&dist.sorted, alpha)?;
    gpd_band_with_critical(sample, fit, h, c, alpha)
}

//! WebAssembly bindings behind `www/index.html`.
//!
//! Every operation has a plain Rust function returning a JSON string (tested
//! natively) and a thin `#[wasm_bindgen]` wrapper that turns errors into
//! JavaScript exceptions.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use tailrisk::distributions::{sample_pairs, sample_values, Family, PairModel, SyntheticSpec};
use tailrisk::tail_dependence::{d_profile, BivariateSample};
use tailrisk::tail_estimators::{trace, Estimator};
use tailrisk::validation::{critical_value, qq_band_with_critical, simulate_with_design, GaussianDesign, WeightForm, WeightFunction};
use tailrisk::Sample;

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

fn err(e: tailrisk::Error) -> String {
    e.to_string()
}

fn family(name: &str) -> Result<Family, String> {
    Ok(match name {
        "frechet" => Family::Frechet,
        "log-disturbed-pareto" => Family::LogDisturbedPareto,
        "pareto" => Family::Pareto,
        "gpd" => Family::ExactGpd,
        "exponential" => Family::UnitExponential,
        other => return Err(format!("unknown family '{other}'")),
    })
}

/// Synthetic univariate sample as a JSON array.
pub fn simulate(family_name: &str, gamma: f64, n: usize, seed: u64) -> Result<String, String> {
    let spec = SyntheticSpec::new(family(family_name)?, gamma, n, seed).map_err(err)?;
    to_json(&sample_values(&spec).map_err(err)?)
}

/// Bivariate Gaussian-copula sample as `{"x1": [...], "x2": [...]}`.
pub fn simulate_pairs(rho: f64, n: usize, seed: u64) -> Result<String, String> {
    let model = if rho >= 1.0 { PairModel::Comonotone } else { PairModel::GaussianCopula { rho } };
    let p = sample_pairs(model, n, seed).map_err(err)?;
    #[derive(Serialize)]
    struct Pairs {
        x1: Vec<f64>,
        x2: Vec<f64>,
    }
    to_json(&Pairs {
        x1: p.iter().map(|q| q.0).collect(),
        x2: p.iter().map(|q| q.1).collect(),
    })
}

#[derive(Serialize)]
struct HillPlot {
    k: Vec<usize>,
    gamma_hat: Vec<Option<f64>>,
}

/// Hill estimates for `k = 2..=k_max`.
pub fn hill_plot(values: &[f64], k_max: usize) -> Result<String, String> {
    let s = Sample::new(values.to_vec()).map_err(err)?;
    let k_max = k_max.min(s.len().saturating_sub(1));
    let tr = trace(&s, Estimator::Hill, 2, k_max).map_err(err)?;
    to_json(&HillPlot {
        k: tr.ks,
        gamma_hat: tr.estimates,
    })
}

/// Simulated critical value for the Hill qq band with the sigma-normalized weight.
pub fn qq_critical_value(alpha: f64, weight_exponent: f64, m: usize, sims: usize, seed: u64) -> Result<f64, String> {
    let h = WeightFunction::new(WeightForm::SigmaNormalized { exponent: weight_exponent });
    let design = GaussianDesign::hill(1.0, m).map_err(err)?;
    let dist = simulate_with_design(&design, &h, sims, seed).map_err(err)?;
    critical_value(&dist.sorted, alpha).map_err(err)
}

/// Pareto quantile plot at `k` with the band for critical value `c_alpha`.
pub fn qq_band(values: &[f64], k: usize, weight_exponent: f64, c_alpha: f64, alpha: f64) -> Result<String, String> {
    let s = Sample::new(values.to_vec()).map_err(err)?;
    let h = WeightFunction::new(WeightForm::SigmaNormalized { exponent: weight_exponent });
    to_json(&qq_band_with_critical(&s, k, &h, c_alpha, alpha).map_err(err)?)
}

/// Profile of the dependence function with pointwise 95% intervals.
pub fn dependence_profile(x1: &[f64], x2: &[f64], m: usize, grid: usize) -> Result<String, String> {
    if x1.len() != x2.len() {
        return Err(format!("columns differ in length ({} vs {})", x1.len(), x2.len()));
    }
    let b = BivariateSample::new(x1.iter().copied().zip(x2.iter().copied()).collect()).map_err(err)?;
    to_json(&d_profile(&b, m, grid, 0.05).map_err(err)?)
}

/// Parses one numeric column (by header name) out of CSV text.
pub fn parse_column(csv_text: &str, column: &str) -> Result<String, String> {
    let mut lines = csv_text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
    let header = lines.next().ok_or("empty input")?;
    let idx = header
        .split(',')
        .position(|h| h.trim().trim_matches('"') == column)
        .ok_or_else(|| format!("column '{column}' not found"))?;
    let values: Vec<f64> = lines
        .filter_map(|l| l.split(',').nth(idx).and_then(|c| c.trim().trim_matches('"').parse().ok()))
        .collect();
    to_json(&values)
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = simulate)]
pub fn simulate_js(family_name: &str, gamma: f64, n: usize, seed: u32) -> Result<String, JsError> {
    js(simulate(family_name, gamma, n, seed as u64))
}

#[wasm_bindgen(js_name = simulatePairs)]
pub fn simulate_pairs_js(rho: f64, n: usize, seed: u32) -> Result<String, JsError> {
    js(simulate_pairs(rho, n, seed as u64))
}

#[wasm_bindgen(js_name = hillPlot)]
pub fn hill_plot_js(values: &[f64], k_max: usize) -> Result<String, JsError> {
    js(hill_plot(values, k_max))
}

#[wasm_bindgen(js_name = qqCriticalValue)]
pub fn qq_critical_value_js(alpha: f64, weight_exponent: f64, m: usize, sims: usize, seed: u32) -> Result<f64, JsError> {
    qq_critical_value(alpha, weight_exponent, m, sims, seed as u64).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = qqBand)]
pub fn qq_band_js(values: &[f64], k: usize, weight_exponent: f64, c_alpha: f64, alpha: f64) -> Result<String, JsError> {
    js(qq_band(values, k, weight_exponent, c_alpha, alpha))
}

#[wasm_bindgen(js_name = dependenceProfile)]
pub fn dependence_profile_js(x1: &[f64], x2: &[f64], m: usize, grid: usize) -> Result<String, JsError> {
    js(dependence_profile(x1, x2, m, grid))
}

#[wasm_bindgen(js_name = parseColumn)]
pub fn parse_column_js(csv_text: &str, column: &str) -> Result<String, JsError> {
    js(parse_column(csv_text, column))
}

use std::fs;
use std::io::Write;

use tailrisk::distributions::{self, Family, PairModel, SyntheticSpec};
use tailrisk::io::{load_bivariate, load_univariate, ColumnRef, DatasetConfig, Format, LoadReport, PlotEmission};
use tailrisk::risk_measures::{premium_ci, premium_from_fit, var_from_params, XlContract};
use tailrisk::tail_dependence::{d_profile, eta_fit, BivariateSample};
use tailrisk::tail_estimators::{gpd_ml_fit, tail_view, trace, Estimator};
use tailrisk::threshold_selection::{
    select_k_bootstrap, select_k_sequential, BootstrapConfig, SequentialConfig,
};
use tailrisk::validation::{
    critical_value, gpd_band_with_critical, qq_band_with_critical, simulate_gpd_sup_distribution,
    simulate_with_design, GaussianDesign, SignedMeasure, WeightForm, WeightFunction,
};
use tailrisk::Sample;

use crate::{BandArgs, Command, DataArgs, EstimatorArg, FamilyArg, OutFormat, OutputArgs, SelectMethod, WeightArg};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Analysis(#[from] tailrisk::Error),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Analysis(_) | CliError::Io(_) => 1,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

fn split_pair(s: &str) -> CliResult<(ColumnRef, &str)> {
    let Some((c, v)) = s.rsplit_once('=') else {
        return usage(format!("expected COL=VALUE, got '{s}'"));
    };
    let col = c.parse().map_err(|e: tailrisk::Error| CliError::Usage(e.to_string()))?;
    Ok((col, v))
}

fn number_pair(s: &str) -> CliResult<(ColumnRef, f64)> {
    let (c, v) = split_pair(s)?;
    let x = v.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("'{v}' in '{s}' is not a number")))?;
    Ok((c, x))
}

fn dataset(d: &DataArgs, want: usize) -> CliResult<DatasetConfig> {
    if d.columns.len() != want {
        return usage(format!("this command needs exactly {want} --column value(s), got {}", d.columns.len()));
    }
    Ok(DatasetConfig {
        path: d.input.clone(),
        columns: d
            .columns
            .iter()
            .map(|c| c.parse().map_err(|e: tailrisk::Error| CliError::Usage(e.to_string())))
            .collect::<CliResult<_>>()?,
        min_filters: d.min_filters.iter().map(|s| number_pair(s)).collect::<CliResult<_>>()?,
        row_filters: d
            .row_filters
            .iter()
            .map(|s| split_pair(s).map(|(c, v)| (c, v.to_string())))
            .collect::<CliResult<_>>()?,
        shifts: d.shifts.iter().map(|s| number_pair(s)).collect::<CliResult<_>>()?,
    })
}

fn report(em: &mut PlotEmission, d: &DataArgs, rep: &LoadReport, n: usize) {
    for w in rep.warnings() {
        eprintln!("warning: {w}");
    }
    em.meta("input", d.input.display())
        .meta("columns", d.columns.join(","))
        .meta("min_filters", d.min_filters.join(";"))
        .meta("row_filters", d.row_filters.join(";"))
        .meta("shifts", d.shifts.join(";"))
        .meta("rows_read", rep.rows_read)
        .meta("dropped_by_filter", rep.dropped_by_filter)
        .meta("dropped_non_numeric", rep.dropped_non_numeric)
        .meta("n", n);
}

fn univariate(d: &DataArgs, cmd: &str) -> CliResult<(Sample, PlotEmission)> {
    let (s, rep) = load_univariate(&dataset(d, 1)?)?;
    let mut em = PlotEmission::new();
    em.meta("command", cmd);
    report(&mut em, d, &rep, s.len());
    Ok((s, em))
}

fn bivariate(d: &DataArgs, cmd: &str) -> CliResult<(BivariateSample, PlotEmission)> {
    let (b, rep) = load_bivariate(&dataset(d, 2)?)?;
    let mut em = PlotEmission::new();
    em.meta("command", cmd);
    report(&mut em, d, &rep, b.len());
    Ok((b, em))
}

fn emit(em: &PlotEmission, out: &OutputArgs) -> CliResult<()> {
    let fmt = match out.format {
        OutFormat::Csv => Format::Csv,
        OutFormat::Json => Format::Json,
    };
    let text = em.render(fmt)?;
    match &out.output {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn warn_all(ws: &[String]) {
    for w in ws {
        eprintln!("warning: {w}");
    }
}

fn plot(
    d: &DataArgs,
    out: &OutputArgs,
    est: Estimator,
    k_min: usize,
    k_max: Option<usize>,
    log_x: bool,
) -> CliResult<()> {
    let name = if est == Estimator::Hill { "hill-plot" } else { "ml-plot" };
    let (s, mut em) = univariate(d, name)?;
    let n = s.len();
    let k_max = k_max.unwrap_or(n.saturating_sub(1));
    if k_min == 0 || k_min > k_max || k_max >= n {
        return usage(format!("need 1 <= k-min <= k-max <= n-1 (k-min={k_min}, k-max={k_max}, n={n})"));
    }
    let tr = trace(&s, est, k_min, k_max)?;
    let ln_n = (n as f64).ln();
    let x: Vec<f64> = tr
        .ks
        .iter()
        .map(|&k| if log_x { (k as f64).ln() / ln_n } else { k as f64 })
        .collect();
    em.meta("k_min", k_min).meta("k_max", k_max).meta("log_x", log_x);
    em.series("k", tr.ks.iter().map(|&k| k as f64).collect())?;
    em.series("x", x)?;
    em.series("gamma_hat", tr.estimates.iter().map(|e| e.unwrap_or(f64::NAN)).collect())?;
    emit(&em, out)
}

fn weight(b: &BandArgs) -> CliResult<WeightFunction> {
    let form = match b.weight {
        WeightArg::Sigma => WeightForm::SigmaNormalized { exponent: b.weight_exponent },
        WeightArg::Power => WeightForm::Power { exponent: b.weight_exponent },
    };
    let h = WeightFunction::truncated(form, b.weight_lower);
    h.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    if !(b.alpha > 0.0 && b.alpha < 1.0) {
        return usage(format!("alpha must lie in (0,1), got {}", b.alpha));
    }
    Ok(h)
}

fn band_meta(em: &mut PlotEmission, b: &BandArgs, seed: u64, c: f64, simulated: bool, inside: bool) {
    em.meta("k", b.k)
        .meta("alpha", b.alpha)
        .meta("weight", format!("{:?}", b.weight).to_lowercase())
        .meta("weight_exponent", b.weight_exponent)
        .meta("weight_lower", b.weight_lower)
        .meta("c_alpha", format!("{c:.16e}"))
        .meta("c_alpha_source", if simulated { "simulated" } else { "given" });
    if simulated {
        em.meta("m", b.m).meta("sims", b.sims).meta("seed", seed);
    }
    em.meta("verdict", if inside { "inside" } else { "outside" });
}

fn qq_band_cmd(d: &DataArgs, out: &OutputArgs, seed: u64, b: &BandArgs) -> CliResult<()> {
    let (s, mut em) = univariate(d, "qq-band")?;
    let h = weight(b)?;
    let c = match b.critical {
        Some(c) => c,
        None => {
            let design = GaussianDesign::hill(1.0, b.m)?;
            critical_value(&simulate_with_design(&design, &h, b.sims, seed)?.sorted, b.alpha)?
        }
    };
    let r = qq_band_with_critical(&s, b.k, &h, c, b.alpha)?;
    band_meta(&mut em, b, seed, c, b.critical.is_none(), r.all_inside);
    em.meta("gamma_hat", format!("{:.16e}", r.slope));
    let (x, y): (Vec<f64>, Vec<f64>) = r.points.iter().copied().unzip();
    em.series("fit", x.iter().map(|v| r.slope * v).collect())?;
    em.series("x", x)?;
    em.series("y", y)?;
    em.series("lower", r.lower)?;
    em.series("upper", r.upper)?;
    emit(&em, out)
}

fn gpd_band_cmd(d: &DataArgs, out: &OutputArgs, seed: u64, b: &BandArgs) -> CliResult<()> {
    let (s, mut em) = univariate(d, "gpd-band")?;
    let h = weight(b)?;
    let fit = gpd_ml_fit(&tail_view(&s, b.k)?)?;
    let c = match b.critical {
        Some(c) => c,
        None => {
            let g = fit.gamma_hat;
            let (nt, ns) = (SignedMeasure::ml_shape(g), SignedMeasure::ml_scale(g));
            critical_value(&simulate_gpd_sup_distribution(g, &nt, &ns, &h, b.m, b.sims, seed)?.sorted, b.alpha)?
        }
    };
    let r = gpd_band_with_critical(&s, &fit, &h, c, b.alpha)?;
    band_meta(&mut em, b, seed, c, b.critical.is_none(), r.all_inside);
    em.meta("measures", "ml")
        .meta("gamma_hat", format!("{:.16e}", r.gamma_hat))
        .meta("sigma_hat", format!("{:.16e}", r.sigma_hat))
        .meta("threshold", format!("{:.16e}", r.threshold));
    let (t, x): (Vec<f64>, Vec<f64>) = r.points.iter().copied().unzip();
    em.series("t", t)?;
    em.series("x", x)?;
    em.series("center", r.center)?;
    em.series("lower", r.lower)?;
    em.series("upper", r.upper)?;
    emit(&em, out)
}

#[allow(clippy::too_many_arguments)]
fn select_k_cmd(
    d: &DataArgs,
    out: &OutputArgs,
    seed: u64,
    method: SelectMethod,
    seq: SequentialConfig,
    replicates: usize,
    n1: Vec<usize>,
    epsilon: f64,
) -> CliResult<()> {
    let (s, mut em) = univariate(d, "select-k")?;
    match method {
        SelectMethod::Sequential => {
            seq.validate().map_err(|e| CliError::Usage(e.to_string()))?;
            let r = select_k_sequential(&s, &seq)?;
            let g = tailrisk::tail_estimators::hill(&tail_view(&s, r.k)?)?;
            em.meta("method", "sequential")
                .meta("r_factor", seq.r_factor)
                .meta("xi", seq.xi)
                .meta("lambda", seq.lambda)
                .meta("k", r.k)
                .meta("pilot_k", r.pilot_k)
                .meta("rho_fallback", r.rho_fallback);
            em.series("k", vec![r.k as f64])?;
            em.series("gamma_hat", vec![g])?;
            em.series("gamma_pilot", vec![r.gamma_pilot])?;
            em.series("r", vec![r.r])?;
            em.series("kbar_r", vec![r.kbar_r as f64])?;
            em.series("kbar_r_xi", vec![r.kbar_r_xi as f64])?;
            em.series("rho_hat", vec![r.rho_hat])?;
        }
        SelectMethod::Bootstrap => {
            let mut cfg = BootstrapConfig::for_sample_size(s.len(), seed);
            cfg.replicates = replicates;
            cfg.epsilon = epsilon;
            if !n1.is_empty() {
                cfg.n1_candidates = n1;
            }
            cfg.validate(s.len()).map_err(|e| CliError::Usage(e.to_string()))?;
            let r = select_k_bootstrap(&s, &cfg)?;
            let g = tailrisk::tail_estimators::hill(&tail_view(&s, r.k)?)?;
            em.meta("method", "bootstrap")
                .meta("seed", seed)
                .meta("replicates", cfg.replicates)
                .meta("epsilon", cfg.epsilon)
                .meta("n1_candidates", cfg.n1_candidates.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
                .meta("k", r.k)
                .meta("gamma_hat", format!("{g:.16e}"))
                .meta("chosen_n1", r.candidates[r.chosen].n1);
            let col = |f: &dyn Fn(&tailrisk::threshold_selection::BootstrapCandidate) -> f64| {
                r.candidates.iter().map(f).collect::<Vec<f64>>()
            };
            em.series("n1", col(&|c| c.n1 as f64))?;
            em.series("n2", col(&|c| c.n2 as f64))?;
            em.series("k1", col(&|c| c.k1 as f64))?;
            em.series("k2", col(&|c| c.k2 as f64))?;
            em.series("q1", col(&|c| c.q1))?;
            em.series("q2", col(&|c| c.q2))?;
            em.series("criterion", col(&|c| c.criterion))?;
            em.series("k_hat_raw", col(&|c| c.k_hat_raw))?;
        }
    }
    emit(&em, out)
}

fn simulate_cmd(out: &OutputArgs, seed: u64, family: FamilyArg, gamma: f64, n: usize, pairs: Option<String>) -> CliResult<()> {
    let mut em = PlotEmission::new();
    em.meta("command", "simulate").meta("seed", seed).meta("n", n);
    if let Some(p) = pairs {
        let model = match p.as_str() {
            "independent" => PairModel::Independent,
            "comonotone" => PairModel::Comonotone,
            other => match other.parse::<f64>() {
                Ok(rho) => PairModel::GaussianCopula { rho },
                Err(_) => return usage(format!("--pairs takes independent, comonotone or a correlation, got '{other}'")),
            },
        };
        let v = distributions::sample_pairs(model, n, seed)?;
        em.meta("pairs", &p);
        em.series("x1", v.iter().map(|p| p.0).collect())?;
        em.series("x2", v.iter().map(|p| p.1).collect())?;
    } else {
        let fam = match family {
            FamilyArg::Frechet => Family::Frechet,
            FamilyArg::LogDisturbedPareto => Family::LogDisturbedPareto,
            FamilyArg::ExactPareto => Family::ExactPareto,
            FamilyArg::Pareto => Family::Pareto,
            FamilyArg::Gpd => Family::ExactGpd,
            FamilyArg::Exponential => Family::UnitExponential,
        };
        let spec = SyntheticSpec::new(fam, gamma, n, seed).map_err(|e| CliError::Usage(e.to_string()))?;
        em.meta("family", format!("{fam:?}")).meta("gamma", gamma);
        em.series("x", distributions::sample_values(&spec)?)?;
    }
    emit(&em, out)
}

pub fn run(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::HillPlot { data, out, k_min, k_max, log_x } => plot(&data, &out, Estimator::Hill, k_min, k_max, log_x),
        Command::MlPlot { data, out, k_min, k_max, log_x } => plot(&data, &out, Estimator::GpdMl, k_min, k_max, log_x),
        Command::SelectK {
            data,
            out,
            seed,
            method,
            r_factor,
            xi,
            lambda,
            replicates,
            n1,
            epsilon,
        } => select_k_cmd(&data, &out, seed.seed, method, SequentialConfig { r_factor, xi, lambda }, replicates, n1, epsilon),
        Command::QqBand { data, out, seed, band } => qq_band_cmd(&data, &out, seed.seed, &band),
        Command::GpdBand { data, out, seed, band } => gpd_band_cmd(&data, &out, seed.seed, &band),
        Command::Premium { data, out, k, retention, cover, alpha } => {
            let (s, mut em) = univariate(&data, "premium")?;
            let contract = XlContract::new(retention, cover.unwrap_or(f64::INFINITY))
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let fit = gpd_ml_fit(&tail_view(&s, k)?)?;
            let mut est = premium_from_fit(&fit, contract)?;
            if let Some(a) = alpha {
                est = premium_ci(&est, a)?;
            }
            warn_all(&est.warnings);
            em.meta("k", k)
                .meta("retention", retention)
                .meta("cover", contract.cover())
                .meta("alpha", alpha.map_or("none".to_string(), |a| a.to_string()));
            let ci = est.ci.map_or((f64::NAN, f64::NAN), |c| (c.lower, c.upper));
            em.series("premium", vec![est.value])?;
            em.series("ci_lower", vec![ci.0])?;
            em.series("ci_upper", vec![ci.1])?;
            em.series("tau_hat", vec![est.tau_hat.unwrap_or(f64::NAN)])?;
            em.series("gamma_hat", vec![est.gamma_hat])?;
            em.series("sigma_hat", vec![est.sigma_hat])?;
            em.series("threshold", vec![est.threshold])?;
            emit(&em, &out)
        }
        Command::Var { data, out, k, alpha } => {
            let (s, mut em) = univariate(&data, "var")?;
            let fit = gpd_ml_fit(&tail_view(&s, k)?)?;
            let v = var_from_params(fit.k, fit.n, fit.threshold, fit.gamma_hat, fit.sigma_hat, alpha)?;
            warn_all(&v.warnings);
            em.meta("k", k).meta("alpha", alpha);
            em.series("var", vec![v.value])?;
            em.series("gamma_hat", vec![v.gamma_hat])?;
            em.series("sigma_hat", vec![v.sigma_hat])?;
            em.series("threshold", vec![v.threshold])?;
            emit(&em, &out)
        }
        Command::Eta { data, out, k, estimator, alpha } => {
            let (b, mut em) = bivariate(&data, "eta")?;
            let est = match estimator {
                EstimatorArg::Hill => Estimator::Hill,
                EstimatorArg::Ml => Estimator::GpdMl,
            };
            let f = eta_fit(&b, k, est, alpha)?;
            if f.exceeds_one {
                eprintln!("warning: eta_hat = {} exceeds 1, which the model excludes", f.eta_hat);
            }
            em.meta("k", k)
                .meta("estimator", format!("{est:?}"))
                .meta("alpha", alpha)
                .meta("exceeds_one", f.exceeds_one)
                .meta("ci_note", "iid asymptotic variance; approximate under rank-estimated margins");
            em.series("eta_hat", vec![f.eta_hat])?;
            em.series("ci_lower", vec![f.ci.lower])?;
            em.series("ci_upper", vec![f.ci.upper])?;
            emit(&em, &out)
        }
        Command::DProfile { data, out, m, grid, alpha } => {
            let (b, mut em) = bivariate(&data, "d-profile")?;
            let p = d_profile(&b, m, grid, alpha)?;
            em.meta("m", m)
                .meta("grid", grid)
                .meta("alpha", alpha)
                .meta("level", format!("{:.16e}", p.level))
                .meta("ci_note", "normal approximation to a binomial with effective size m");
            em.series("x", p.points.iter().map(|q| q.x).collect())?;
            em.series("d", p.points.iter().map(|q| q.d).collect())?;
            em.series("lower", p.points.iter().map(|q| q.lower).collect())?;
            em.series("upper", p.points.iter().map(|q| q.upper).collect())?;
            emit(&em, &out)
        }
        Command::Simulate { out, seed, family, gamma, n, pairs } => simulate_cmd(&out, seed.seed, family, gamma, n, pairs),
    }
}

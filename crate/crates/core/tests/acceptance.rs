//! Acceptance harness: one PASS/FAIL/SKIP line per criterion.
//!
//! Run with `cargo test -p tailrisk --test acceptance`. The data-reproduction
//! criterion needs a user-supplied claims extract:
//! `cargo test -p tailrisk --test acceptance -- --with-soa claims.csv`
//! (or `TAILRISK_SOA=claims.csv`). The file must already be restricted to the
//! analysed group; columns default to `hospital,other` and can be changed with
//! `--soa-columns A,B` or `TAILRISK_SOA_COLUMNS`.
//!
//! Failed criteria are reported but only turn into a non-zero exit status
//! with `--strict` or `TAILRISK_ACCEPTANCE_STRICT=1`.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use tailrisk::distributions::{
    gpd_cdf, gpd_quantile, gpd_survival, psi, sample, sample_pairs, sample_values, Family, GpdParams,
    PairModel, SyntheticSpec,
};
use tailrisk::io::{load_bivariate, ColumnRef, DatasetConfig, Format, PlotEmission};
use tailrisk::risk_measures::{
    normal_upper_quantile, premium_ci, premium_from_params, var_estimate, xl_premium, XlContract,
};
use tailrisk::rng::DEFAULT_SEED;
use tailrisk::tail_dependence::{d_extend, d_profile, eta_fit, rank_transform, BivariateSample, DEstimator};
use tailrisk::tail_estimators::{asymptotic_cov, gpd_ml_fit, hill, hill_curve, tail_view, Estimator};
use tailrisk::threshold_selection::{
    select_k_bootstrap, select_k_sequential, BootstrapConfig, SequentialConfig,
};
use tailrisk::validation::{
    critical_value, hill_integral_moments, qq_band_with_critical, simulate_with_design, GaussianDesign,
    WeightForm, WeightFunction,
};
use tailrisk::Sample;

mod common;
use common::{hill_conditional_variance_oracle, simpson};

enum Verdict {
    Pass,
    Fail,
    Skip,
}

struct Outcome {
    verdict: Verdict,
    detail: String,
}

impl Outcome {
    fn check(ok: bool, detail: String) -> Self {
        Self { verdict: if ok { Verdict::Pass } else { Verdict::Fail }, detail }
    }
}

fn paper_weight() -> WeightFunction {
    WeightFunction::new(WeightForm::SigmaNormalized { exponent: 0.1 })
}

fn draw(family: Family, gamma: f64, n: usize, seed: u64) -> Sample {
    sample(&SyntheticSpec::new(family, gamma, n, seed).unwrap()).unwrap()
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)
}

fn closed_forms() -> Outcome {
    let mut round = 0.0f64;
    for &g in &[-0.9, -0.5, -0.1, 0.0, 1e-9, 0.2, 0.5, 1.0, 2.0] {
        for &s in &[0.1, 1.0, 7.5] {
            let p = GpdParams::new(g, s).unwrap();
            for i in 0..1000 {
                let q = i as f64 / 1000.0;
                let x = gpd_quantile(q, &p).unwrap();
                round = round.max((gpd_cdf(x, &p) - q).abs());
            }
        }
    }
    let mut psi_err = 0.0f64;
    for &g in &[-0.4, -0.1, 0.0, 1e-9, 0.3, 0.5, 1.0, 1.0 + 1e-9, 1.7] {
        for &t in &[0.01, 0.5, 1.0, 2.5, 10.0] {
            if 1.0 + g * t <= 0.0 {
                continue;
            }
            let f = |x: f64| if g == 0.0 { (-x).exp() } else { (-(g * x).ln_1p() / g).exp() };
            let q = simpson(&f, 0.0, t, 1e-14);
            psi_err = psi_err.max((psi(t, g).unwrap() - q).abs() / (1.0 + q.abs()));
        }
    }
    let cov_exact = [-0.4, 0.0, 0.25, 0.5, 1.0, 3.0].iter().all(|&g: &f64| {
        let c = asymptotic_cov(g);
        c[0][0] == (1.0 + g).powi(2) && c[0][1] == -(1.0 + g) && c[1][0] == -(1.0 + g) && c[1][1] == 2.0 + 2.0 * g + g * g
    });
    Outcome::check(
        round < 1e-12 && psi_err < 1e-9 && cov_exact,
        format!("max |F(Q(q))-q| = {round:.2e}, max psi error = {psi_err:.2e}, covariance entries exact: {cov_exact}"),
    )
}

fn paper_constant() -> (Outcome, f64) {
    let design = GaussianDesign::hill(1.0, 1000).unwrap();
    let sup = simulate_with_design(&design, &paper_weight(), 100_000, DEFAULT_SEED).unwrap();
    let c = critical_value(&sup.sorted, 0.05).unwrap();
    (
        Outcome::check((2.63..=2.93).contains(&c), format!("c_0.05 = {c:.4} (m = 1000, 100000 replicates; target [2.63, 2.93])")),
        c,
    )
}

fn hill_moments() -> Outcome {
    let mut worst = 0.0f64;
    for m in [2, 5, 10, 50] {
        let (_, v) = hill_integral_moments(m).unwrap();
        worst = worst.max((v - hill_conditional_variance_oracle(m)).abs());
    }
    let one = hill_integral_moments(1).unwrap().1;
    Outcome::check(worst < 1e-8 && one == 1.0, format!("max deviation {worst:.2e} for m in {{2,5,10,50}}, m=1 gives {one}"))
}

fn estimator_asymptotics() -> Outcome {
    let (n, k, g, reps) = (5000, 500, 0.5, 500u64);
    let rk = (k as f64).sqrt();
    let mut ml = Vec::new();
    let mut hl = Vec::new();
    let mut ml_failures = 0;
    for seed in 0..reps {
        let s = draw(Family::ExactGpd, g, n, seed);
        match gpd_ml_fit(&tail_view(&s, k).unwrap()) {
            Ok(f) => ml.push(rk * (f.gamma_hat - g)),
            Err(_) => ml_failures += 1,
        }
        let p = draw(Family::Pareto, g, n, 10_000 + seed);
        hl.push(rk * (hill(&tail_view(&p, k).unwrap()).unwrap() - g));
    }
    let (vm, vh) = (variance(&ml), variance(&hl));
    let ok = ml_failures == 0 && (vm / 2.25 - 1.0).abs() <= 0.3 && (vh / 0.25 - 1.0).abs() <= 0.3;
    Outcome::check(
        ok,
        format!("Var ML = {vm:.3} (target 2.25 +-30%, {ml_failures} failed fits), Var Hill = {vh:.4} (target 0.25 +-30%)"),
    )
}

fn qq_level_and_power(c: f64) -> Outcome {
    let h = paper_weight();
    let mut level = 0;
    let (mut lo, mut hi) = (0, 0);
    for seed in 0..400u64 {
        let s = draw(Family::Pareto, 0.5, 2000, seed);
        level += qq_band_with_critical(&s, 150, &h, c, 0.05).unwrap().rejects() as usize;
        let d = draw(Family::LogDisturbedPareto, 0.5, 2000, seed);
        lo += qq_band_with_critical(&d, 100, &h, c, 0.05).unwrap().rejects() as usize;
        hi += qq_band_with_critical(&d, 800, &h, c, 0.05).unwrap().rejects() as usize;
    }
    let rate = level as f64 / 400.0;
    Outcome::check(
        (0.01..=0.10).contains(&rate) && hi > lo,
        format!("level {rate:.4} (target [0.01, 0.10]); log-disturbed rejections k=100: {lo}/400, k=800: {hi}/400"),
    )
}

struct SelectorRun {
    seq_k: Vec<f64>,
    boot_k: Vec<f64>,
    seq_sq: Vec<f64>,
    boot_sq: Vec<f64>,
    seq_failures: usize,
    oracle_mse: f64,
    oracle_k: usize,
    half_mse: f64,
}

fn run_selectors(family: Family) -> SelectorRun {
    let (n, g) = (1000, 0.5);
    let mut r = SelectorRun {
        seq_k: vec![],
        boot_k: vec![],
        seq_sq: vec![],
        boot_sq: vec![],
        seq_failures: 0,
        oracle_mse: 0.0,
        oracle_k: 0,
        half_mse: 0.0,
    };
    let mut sum_sq = vec![0.0; n - 1];
    let seeds = 100u64;
    for seed in 0..seeds {
        let s = draw(family, g, n, seed);
        let curve = hill_curve(s.sorted(), n - 1).unwrap();
        for (acc, v) in sum_sq.iter_mut().zip(&curve) {
            *acc += (v - g) * (v - g);
        }
        match select_k_sequential(&s, &SequentialConfig::default()) {
            Ok(sel) => {
                r.seq_k.push(sel.k as f64);
                r.seq_sq.push((curve[sel.k - 1] - g).powi(2));
            }
            Err(_) => r.seq_failures += 1,
        }
        let sel = select_k_bootstrap(&s, &BootstrapConfig::for_sample_size(n, seed)).unwrap();
        r.boot_k.push(sel.k as f64);
        r.boot_sq.push((curve[sel.k - 1] - g).powi(2));
    }
    let (i, best) = sum_sq
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    r.oracle_k = i + 1;
    r.oracle_mse = best / seeds as f64;
    r.half_mse = sum_sq[n / 2 - 1] / seeds as f64;
    r
}

fn selectors() -> Outcome {
    let mut f = run_selectors(Family::Frechet);
    let mut l = run_selectors(Family::LogDisturbedPareto);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
    let (fs, fb) = (median(&mut f.seq_k), median(&mut f.boot_k));
    let (ls, lb) = (median(&mut l.seq_k), median(&mut l.boot_k));
    let (ms, mb) = (mean(&f.seq_sq) / f.oracle_mse, mean(&f.boot_sq) / f.oracle_mse);
    let in_range = |k: f64| (50.0..=400.0).contains(&k);
    let ok = in_range(fs) && in_range(fb) && ms <= 1.5 && mb <= 1.5 && ls / fs < 0.7 && lb / fb < 0.7;
    Outcome::check(
        ok,
        format!(
            "Frechet median k: sequential {fs}, bootstrap {fb}; MSE / oracle MSE (k={}): sequential {ms:.2}, bootstrap {mb:.2} \
             (k=n/2 gives {:.2}); log-disturbed / Frechet median ratio: sequential {:.2}, bootstrap {:.2}; sequential failures {}+{}",
            f.oracle_k,
            f.half_mse / f.oracle_mse,
            ls / fs,
            lb / fb,
            f.seq_failures,
            l.seq_failures
        ),
    )
}

fn risk_measures() -> Outcome {
    // additivity over layers
    let mut additivity = 0.0f64;
    for &g in &[-0.2, 0.1, 0.5, 0.9] {
        for &(t, c1, c2) in &[(2.0, 0.5, 0.25), (5.0, 3.0, 12.0), (1.25, 0.125, 0.375)] {
            let p = |t: f64, c: f64| premium_from_params(500, 5000, 1.0, g, 1.0, XlContract::new(t, c).unwrap()).unwrap().value;
            if g < 0.0 && t + c1 + c2 > 1.0 - 1.0 / g {
                continue;
            }
            let whole = p(t, c1 + c2);
            if whole > 0.0 {
                additivity = additivity.max((whole - p(t, c1) - p(t + c1, c2)).abs() / whole);
            }
        }
    }

    // plug-in premium with the true tail parameters vs the layer integral of the true survival function
    let (k, n) = (500usize, 5000usize);
    let mut oracle = 0.0f64;
    for &g in &[-0.2, 0.3, 0.5, 0.9] {
        let p = GpdParams::new(g, 1.0).unwrap();
        let u = gpd_quantile(1.0 - k as f64 / n as f64, &p).unwrap();
        let sigma_u = 1.0 + g * u;
        let layers = if g < 0.0 { [(u + 0.5, 1.0), (u + 1.0, 1.5)] } else { [(u + 0.5, 1.0), (u + 2.0, 10.0)] };
        for &(t, c) in &layers {
            let exact = simpson(&|x| gpd_survival(x, &p), t, t + c, 1e-14);
            let est = premium_from_params(k, n, u, g, sigma_u, XlContract::new(t, c).unwrap()).unwrap().value;
            oracle = oracle.max((est / exact - 1.0).abs());
        }
    }

    // interval coverage on exact GPD samples
    let g = 0.5;
    let p = GpdParams::new(g, 1.0).unwrap();
    let t = gpd_quantile(0.99, &p).unwrap();
    let c = gpd_quantile(0.999, &p).unwrap() - t;
    let truth = simpson(&|x| gpd_survival(x, &p), t, t + c, 1e-14);
    let contract = XlContract::new(t, c).unwrap();
    let mut covered = 0;
    let reps = 300;
    for seed in 0..reps {
        let s = draw(Family::ExactGpd, g, n, 50_000 + seed);
        let est = premium_ci(&xl_premium(&s, k, contract).unwrap(), 0.05).unwrap();
        let ci = est.ci.unwrap();
        covered += (ci.lower <= truth && truth <= ci.upper) as usize;
    }
    let coverage = covered as f64 / reps as f64;

    // VaR at the threshold level
    let mut var_exact = true;
    for seed in 0..20 {
        let s = draw(Family::ExactGpd, g, n, seed);
        for kk in [40, 137, 500, 2999] {
            let v = var_estimate(&s, kk, kk as f64 / n as f64).unwrap().value;
            var_exact &= v == tail_view(&s, kk).unwrap().threshold();
        }
    }

    Outcome::check(
        additivity <= 1e-12 && oracle < 1e-6 && (0.88..=0.99).contains(&coverage) && var_exact,
        format!(
            "additivity max rel. error {additivity:.1e}; premium vs layer integral {oracle:.1e}; \
             CI coverage {coverage:.3} (target [0.88, 0.99]); VaR(k/n) = Q_n(1): {var_exact}"
        ),
    )
}

fn tail_dependence() -> Outcome {
    let (n, k) = (5000, 300);
    let mean_eta = |model: PairModel| {
        let mut sum = 0.0;
        for seed in 0..200u64 {
            let b = BivariateSample::new(sample_pairs(model, n, seed).unwrap()).unwrap();
            sum += eta_fit(&b, k, Estimator::Hill, 0.05).unwrap().eta_hat;
        }
        sum / 200.0
    };
    let ind = mean_eta(PairModel::Independent);
    let com = mean_eta(PairModel::Comonotone);

    // ranks of both margins share the values (n+1)/(n+1-r), so T = min can tie at its own order statistic
    let (mut d11, mut tied, mut cases) = (true, 0, 0);
    for seed in 0..20 {
        let b = BivariateSample::new(sample_pairs(PairModel::GaussianCopula { rho: 0.4 }, 2000, seed).unwrap()).unwrap();
        let mut t = rank_transform(&b).t;
        t.sort_by(f64::total_cmp);
        for m in [10, 100, 500] {
            cases += 1;
            let level = t.len() - m - 1;
            if t[level] == t[level + 1] {
                tied += 1;
                continue;
            }
            d11 &= DEstimator::new(&b, m).unwrap().eval(1.0, 1.0) == 1.0;
        }
    }

    let boundary = |y1: f64, y2: f64| 1.0 / (y1 + y2 - 1.0).sqrt();
    let mut ext = true;
    for &eta in &[0.25, 0.5, 1.0] {
        for &(y1, y2) in &[(1.0, 1.0), (1.0, 3.5), (2.25, 1.0)] {
            let base = d_extend(boundary, eta, y1, y2).unwrap();
            ext &= base == boundary(y1, y2);
            for &s in &[0.5, 2.0, 8.0] {
                let scaled = d_extend(boundary, eta, s * y1, s * y2).unwrap();
                ext &= scaled == s.powf(-1.0 / eta) * base;
            }
        }
    }
    Outcome::check(
        (ind - 0.5).abs() <= 0.05 && (com - 1.0).abs() <= 0.1 && d11 && ext,
        format!(
            "mean eta independent {ind:.4}, comonotone {com:.4}; d(1,1) = 1 exactly when T is untied at its level: {d11} \
             ({tied} of {cases} cases tied); extension identities exact: {ext}"
        ),
    )
}

struct SoaConfig {
    path: PathBuf,
    columns: (String, String),
}

fn soa_reproduction(cfg: Option<&SoaConfig>, c_alpha: f64) -> Outcome {
    let Some(cfg) = cfg else {
        return Outcome {
            verdict: Verdict::Skip,
            detail: "no claims extract supplied (--with-soa <path> or TAILRISK_SOA)".into(),
        };
    };
    let run = || -> tailrisk::Result<(bool, String)> {
        let cols: Vec<ColumnRef> = vec![cfg.columns.0.parse()?, cfg.columns.1.parse()?];
        let data = DatasetConfig {
            path: cfg.path.clone(),
            min_filters: cols.iter().map(|c| (c.clone(), 25_000.0)).collect(),
            columns: cols,
            ..Default::default()
        };
        let (b, _) = load_bivariate(&data)?;
        let n = b.len();
        let hospital = Sample::new(b.pairs().iter().map(|p| p.0 + 300_000.0).collect())?;
        let other = Sample::new(b.pairs().iter().map(|p| p.1).collect())?;
        let z = normal_upper_quantile(0.025);

        let k_dk = select_k_sequential(&hospital, &SequentialConfig::default())?.k;
        let g_shift = hill(&tail_view(&hospital, k_dk)?)?;
        let g_other = hill(&tail_view(&other, 125)?)?;
        let ci_other = (g_other * (1.0 - z / 125f64.sqrt()), g_other * (1.0 + z / 125f64.sqrt()));
        let eta = eta_fit(&b, 318, Estimator::Hill, 0.05)?;
        let band = qq_band_with_critical(&hospital, 133, &paper_weight(), c_alpha, 0.05)?;

        let near = |x: f64, t: f64| (x - t).abs() <= 0.03;
        let ok = n == 1959
            && near(g_shift, 0.22)
            && near(g_other, 0.495)
            && near(ci_other.0, 0.41)
            && near(ci_other.1, 0.58)
            && near(eta.eta_hat, 0.63)
            && near(eta.ci.lower, 0.52)
            && near(eta.ci.upper, 0.74)
            && band.all_inside;
        Ok((
            ok,
            format!(
                "n = {n}; shifted hospital Hill at k = {k_dk}: {g_shift:.3}; other Hill(125) = {g_other:.3} \
                 [{:.3}, {:.3}]; eta(318) = {:.3} [{:.3}, {:.3}]; qq band at k = 133: {}",
                ci_other.0,
                ci_other.1,
                eta.eta_hat,
                eta.ci.lower,
                eta.ci.upper,
                if band.all_inside { "inside" } else { "outside" }
            ),
        ))
    };
    match run() {
        Ok((ok, detail)) => Outcome::check(ok, detail),
        Err(e) => Outcome::check(false, format!("pipeline failed: {e}")),
    }
}

fn emissions() -> Vec<String> {
    let mut out = Vec::new();
    let mut push = |em: PlotEmission| {
        out.push(em.render(Format::Csv).unwrap());
        out.push(em.render(Format::Json).unwrap());
    };

    let values = sample_values(&SyntheticSpec::new(Family::Frechet, 0.5, 1000, DEFAULT_SEED).unwrap()).unwrap();
    let s = Sample::new(values.clone()).unwrap();
    let mut em = PlotEmission::new();
    em.meta("seed", DEFAULT_SEED);
    em.series("x", values).unwrap();
    push(em);

    let sel = select_k_bootstrap(&s, &BootstrapConfig::for_sample_size(s.len(), 17)).unwrap();
    let mut em = PlotEmission::new();
    em.meta("k", sel.k);
    em.series("criterion", sel.candidates.iter().map(|c| c.criterion).collect()).unwrap();
    em.series("k_hat_raw", sel.candidates.iter().map(|c| c.k_hat_raw).collect()).unwrap();
    push(em);

    let design = GaussianDesign::hill(1.0, 200).unwrap();
    let sup = simulate_with_design(&design, &paper_weight(), 5000, 23).unwrap();
    let c = critical_value(&sup.sorted, 0.05).unwrap();
    let band = qq_band_with_critical(&s, 120, &paper_weight(), c, 0.05).unwrap();
    let mut em = PlotEmission::new();
    em.meta("c_alpha", format!("{c:.16e}")).meta("verdict", band.all_inside);
    em.series("lower", band.lower).unwrap();
    em.series("upper", band.upper).unwrap();
    push(em);

    let b = BivariateSample::new(sample_pairs(PairModel::GaussianCopula { rho: 0.3 }, 3000, 5).unwrap()).unwrap();
    let prof = d_profile(&b, 150, 20, 0.05).unwrap();
    let mut em = PlotEmission::new();
    em.meta("level", format!("{:.16e}", prof.level));
    em.series("d", prof.points.iter().map(|p| p.d).collect()).unwrap();
    push(em);
    out
}

fn determinism() -> Outcome {
    let (a, b) = (emissions(), emissions());
    let same = a == b;
    Outcome::check(same, format!("{} emissions byte-identical across reruns: {same}", a.len()))
}

fn soa_from_args() -> Option<SoaConfig> {
    let args: Vec<String> = std::env::args().collect();
    let flag = |name: &str| args.iter().position(|a| a == name).and_then(|i| args.get(i + 1)).cloned();
    let path = flag("--with-soa").or_else(|| std::env::var("TAILRISK_SOA").ok())?;
    let cols = flag("--soa-columns")
        .or_else(|| std::env::var("TAILRISK_SOA_COLUMNS").ok())
        .unwrap_or_else(|| "hospital,other".into());
    let (a, b) = cols.split_once(',').unwrap_or((cols.as_str(), "other"));
    Some(SoaConfig { path: path.into(), columns: (a.trim().to_string(), b.trim().to_string()) })
}

fn main() -> ExitCode {
    let soa = soa_from_args();
    let mut failed = 0;
    let mut report = |id: u32, name: &str, budget: Duration, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let mut o = f();
        let took = start.elapsed();
        if took > budget && matches!(o.verdict, Verdict::Pass) {
            o = Outcome::check(false, format!("{} (over the {:?} budget)", o.detail, budget));
        }
        let tag = match o.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => {
                failed += 1;
                "FAIL"
            }
            Verdict::Skip => "SKIP",
        };
        println!("{tag} {id:>2} {name}: {} [{:.1} s]", o.detail, took.as_secs_f64());
    };

    let min = |m: u64| Duration::from_secs(60 * m);
    let mut c_alpha = f64::NAN;
    report(1, "closed forms", Duration::from_secs(1), &mut closed_forms);
    report(2, "critical constant", min(10), &mut || {
        let (o, c) = paper_constant();
        c_alpha = c;
        o
    });
    report(3, "Hill integral moments", Duration::from_secs(1), &mut hill_moments);
    report(4, "estimator asymptotics", min(5), &mut estimator_asymptotics);
    report(5, "qq band level and power", min(10), &mut || qq_level_and_power(c_alpha));
    report(6, "threshold selectors", min(15), &mut selectors);
    report(7, "risk measures", min(5), &mut risk_measures);
    report(8, "tail dependence", min(5), &mut tail_dependence);
    report(9, "claims data reproduction", min(5), &mut || soa_reproduction(soa.as_ref(), 2.78));
    report(10, "determinism", min(5), &mut determinism);

    let strict = std::env::args().any(|a| a == "--strict")
        || std::env::var("TAILRISK_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if failed > 0 {
        println!("{failed} criterion/criteria failed");
    }
    if failed > 0 && strict {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

//! Checks against independently computed reference values.

use rand::Rng;
use tailrisk::distributions::{
    gpd_quantile, gpd_survival, psi, sample, Family, GpdParams, PairModel, SyntheticSpec,
};
use tailrisk::risk_measures::{premium_from_params, var_from_params, XlContract};
use tailrisk::rng;
use tailrisk::tail_dependence::{d_estimate, rank_transform, BivariateSample, DEstimator};
use tailrisk::tail_estimators::{gpd_log_likelihood, gpd_ml_fit, hill, tail_view};
use tailrisk::threshold_selection::{kbar_from_curve, rho_estimate};
use tailrisk::validation::{hill_integral_moments, GaussianDesign, SignedMeasure};

mod common;
use common::{hill_conditional_variance_oracle, simpson};

#[test]
fn psi_matches_quadrature() {
    for &g in &[-0.4, -0.1, 0.0, 1e-9, 0.3, 0.5, 1.0, 1.0 + 1e-9, 1.7] {
        for &t in &[0.1, 1.0, 2.5, 10.0] {
            if 1.0 + g * t <= 0.0 {
                continue;
            }
            let f = |x: f64| if g == 0.0 { (-x).exp() } else { (-(g * x).ln_1p() / g).exp() };
            let q = simpson(&f, 0.0, t, 1e-14);
            let p = psi(t, g).unwrap();
            assert!((p - q).abs() < 1e-9 * (1.0 + q.abs()), "gamma={g} t={t}: {p} vs {q}");
        }
    }
}

#[test]
fn hill_moments_match_double_integral() {
    for m in [1, 2, 5, 10, 50] {
        let (_, v) = hill_integral_moments(m).unwrap();
        let o = hill_conditional_variance_oracle(m);
        assert!((v - o).abs() < 1e-8, "m={m}: {v} vs {o}");
    }
}

#[test]
fn hill_total_variance_is_gamma_squared() {
    // int int (st)^{-(g+1)} min(s,t) nu(ds) nu(dt) for nu = g(s^g ds - eps_1) equals g^2
    for &g in &[0.25, 1.0, 2.0] {
        let d = GaussianDesign::hill(g, 200).unwrap();
        assert!((d.total_cov()[0][0] - g * g).abs() < 1e-9);
        let gen = GaussianDesign::new(g, &[&SignedMeasure::hill(g)], 60).unwrap();
        assert!((gen.total_cov()[0][0] - g * g).abs() < 1e-6);
    }
}

#[test]
fn simulated_integral_variance_matches_moments() {
    let m = 200;
    let d = GaussianDesign::hill(1.0, m).unwrap();
    let (_, v) = hill_integral_moments(m).unwrap();
    let n = 100_000;
    let mut w = vec![0.0; m];
    let (mut i, mut mean) = ([0.0], [0.0]);
    let mut resid = Vec::with_capacity(n);
    let mut zero_at_one = true;
    for rep in 0..n {
        let mut g = rng::stream(77, rep as u64);
        d.draw(&mut g, &mut w, &mut i, &mut mean);
        resid.push(i[0] - mean[0]);
        let z1 = 1.0 * (w[m - 1] / 1.0 - w[m - 1]) + i[0] * 1f64.ln();
        zero_at_one &= z1 == 0.0;
    }
    assert!(zero_at_one);
    let mu = resid.iter().sum::<f64>() / n as f64;
    let var = resid.iter().map(|r| (r - mu).powi(2)).sum::<f64>() / (n - 1) as f64;
    // standard error of a normal sample variance
    let se = v * (2.0 / (n - 1) as f64).sqrt();
    assert!((var - v).abs() < 3.0 * se, "{var} vs {v} (se {se})");
}

/// `O(n^2)` scan of the defining set of `kbar`.
fn kbar_brute(curve: &[f64], r: f64) -> Option<usize> {
    (1..=curve.len()).find(|&k| (1..=k).any(|i| (i as f64).sqrt() * (curve[i - 1] - curve[k - 1]).abs() > r))
}

#[test]
fn kbar_matches_brute_force() {
    let mut g = rng::stream(5, 0);
    for _ in 0..50 {
        let len = g.random_range(5..300);
        let drift = g.random_range(0.0..0.02);
        let curve: Vec<f64> = (0..len).map(|i| 0.5 + drift * i as f64 + 0.3 * (g.random::<f64>() - 0.5) / ((i + 1) as f64).sqrt()).collect();
        let r = g.random_range(0.1..3.0);
        let kb = kbar_from_curve(&curve, r, len);
        match kbar_brute(&curve, r) {
            Some(k) => assert!(kb.found && kb.k == k, "{kb:?} vs {k}"),
            None => assert!(!kb.found),
        }
    }
    let mut t = vec![0.0; 4];
    t.push(10.0);
    t.extend([10.0; 5]);
    assert_eq!(kbar_from_curve(&t, 1.0, 10).k, 5);
}

#[test]
fn rho_formula_by_hand() {
    // curve with known maxima: gamma_i = 0.5 + c * i
    let c = 0.01;
    let curve: Vec<f64> = (1..=200).map(|i| 0.5 + c * i as f64).collect();
    let kb = 100;
    let lambda = 0.8;
    let maxdev = |k: usize| (1..=k).map(|i| (i as f64).sqrt() * (curve[i - 1] - curve[k - 1]).abs()).fold(0.0, f64::max);
    let kl = (lambda * kb as f64).floor() as usize;
    let expected = (maxdev(kl) / maxdev(kb)).ln() / lambda.ln() - 0.5;
    let got = rho_estimate(&curve, kb, lambda);
    assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
}

#[test]
fn ml_fit_beats_grid_search() {
    for seed in 0..20u64 {
        let g = [-0.3, 0.0, 0.2, 0.5, 1.0][seed as usize % 5];
        let s = sample(&SyntheticSpec::new(Family::ExactGpd, g, 1500, seed).unwrap()).unwrap();
        let view = tail_view(&s, 200).unwrap();
        let fit = gpd_ml_fit(&view).unwrap();
        let y = view.excesses();
        let best = fit.log_likelihood;
        let mut grid_best = f64::NEG_INFINITY;
        for i in 0..=120 {
            let gg = -0.9 + 2.4 * i as f64 / 120.0;
            for j in 0..=120 {
                let ss = fit.sigma_hat * (0.25 + 3.0 * j as f64 / 120.0);
                grid_best = grid_best.max(gpd_log_likelihood(&y, gg, ss));
            }
        }
        assert!(best >= grid_best - 1e-9, "seed {seed}: fit {best} < grid {grid_best}");
        // a local perturbation never improves
        for (dg, ds) in [(1e-4, 0.0), (-1e-4, 0.0), (0.0, 1e-4), (0.0, -1e-4)] {
            let l = gpd_log_likelihood(&y, fit.gamma_hat + dg, fit.sigma_hat * (1.0 + ds));
            assert!(l <= best + 1e-9);
        }
    }
}

#[test]
fn premium_matches_layer_integral() {
    let p = GpdParams::new(0.5, 1.0).unwrap();
    let (n, k) = (10_000usize, 400usize);
    // threshold with exceedance probability exactly k/n, scale of the excess law
    let u = gpd_quantile(1.0 - k as f64 / n as f64, &p).unwrap();
    let sigma_u = 1.0 + 0.5 * u;
    for (t, c) in [(u + 1.0, 5.0), (2.0 * u, 50.0), (u, 1.0), (3.0 * u, 1e3)] {
        let est = premium_from_params(k, n, u, 0.5, sigma_u, XlContract::new(t, c).unwrap()).unwrap();
        let oracle = simpson(&|s| gpd_survival(s, &p), t, t + c, 1e-13);
        assert!((est.value - oracle).abs() < 1e-6 * oracle, "t={t} c={c}: {} vs {oracle}", est.value);
    }
}

#[test]
fn var_on_pareto_grid() {
    let (n, k, g) = (10_000usize, 100usize, 0.5);
    let s = sample(&SyntheticSpec::new(Family::ExactPareto, g, n, 0).unwrap()).unwrap();
    let u = tail_view(&s, k).unwrap().threshold();
    let alpha = 1e-3;
    let v = var_from_params(k, n, u, g, g * u, alpha).unwrap();
    let truth = alpha.powf(-g);
    assert!((v.value / truth - 1.0).abs() < 0.01, "{} vs {truth}", v.value);
}

#[test]
fn d_hat_equals_direct_count() {
    for (seed, model) in [(1, PairModel::Independent), (2, PairModel::GaussianCopula { rho: 0.6 }), (3, PairModel::Comonotone)] {
        let pairs = tailrisk::distributions::sample_pairs(model, 3000, seed).unwrap();
        let b = BivariateSample::new(pairs).unwrap();
        let rt = rank_transform(&b);
        let m = 150;
        let mut ts = rt.t.clone();
        ts.sort_by(f64::total_cmp);
        let level = ts[3000 - m - 1];
        for (y1, y2) in [(1.0, 1.0), (2.0, 1.0), (1.0, 3.0), (1.5, 1.5)] {
            let direct = rt.y.iter().filter(|p| p.0 > level * y1 && p.1 > level * y2).count() as f64 / m as f64;
            assert_eq!(d_estimate(&b, m, y1, y2).unwrap(), direct);
        }
        assert_eq!(DEstimator::new(&b, m).unwrap().eval(1.0, 1.0), 1.0);
    }
}

#[test]
fn independent_d_near_half() {
    // for independent margins d(2, 1) = 2^{-1} times the d(1,1) normalization
    let pairs = tailrisk::distributions::sample_pairs(PairModel::Independent, 10_000, 11).unwrap();
    let b = BivariateSample::new(pairs).unwrap();
    let est = DEstimator::new(&b, 200).unwrap();
    let d = est.eval(2.0, 1.0);
    // brute-force conditional frequency on the same sample
    let rt = rank_transform(&b);
    let lvl = est.level();
    let joint = rt.y.iter().filter(|p| p.0 > 2.0 * lvl && p.1 > lvl).count() as f64;
    let base = rt.y.iter().filter(|p| p.0 > lvl && p.1 > lvl).count() as f64;
    assert!((d - joint / base).abs() < 0.1);
    assert!((d - 0.5).abs() < 0.1, "{d}");
}

#[test]
fn hill_on_t_sample_of_independent_uniforms() {
    let mut hits = 0;
    for seed in 0..40 {
        let pairs = tailrisk::distributions::sample_pairs(PairModel::Independent, 10_000, seed).unwrap();
        let b = BivariateSample::new(pairs).unwrap();
        let t = tailrisk::Sample::new(rank_transform(&b).t).unwrap();
        let h = hill(&tail_view(&t, 100).unwrap()).unwrap();
        hits += usize::from(h > 0.3 && h < 0.7);
    }
    assert!(hits >= 38, "{hits}/40");
}

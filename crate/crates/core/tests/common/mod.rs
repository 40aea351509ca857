//! Reference computations shared by the oracle and acceptance targets.

/// Adaptive Simpson quadrature, written independently of the library's
/// Gauss–Kronrod rule.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Conditional variance of `int_0^1 W(s)/s ds` given `W(i/m)`, from the
/// bridge covariance with the inner integral done by hand.
pub fn hill_conditional_variance_oracle(m: usize) -> f64 {
    let mf = m as f64;
    (1..=m)
        .map(|i| {
            let a = (i - 1) as f64 / mf;
            let b = i as f64 / mf;
            // inner(t) = int_a^t (s - a)/s ds
            let inner_over_t = |t: f64| if a == 0.0 { 1.0 } else { ((t - a) - a * (t / a).ln()) / t };
            let f = |t: f64| (b - t) * inner_over_t(t);
            2.0 * mf * simpson(&f, a, b, 1e-15)
        })
        .sum()
}


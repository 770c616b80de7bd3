//! Reference computations kept independent of the library code paths.
#![allow(dead_code)]

/// Sample correlation via covariance and variances with n - 1 denominators.
pub fn pearson_oracle(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let cov = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / (n - 1.0);
    let vx = x.iter().map(|a| (a - mx).powi(2)).sum::<f64>() / (n - 1.0);
    let vy = y.iter().map(|b| (b - my).powi(2)).sum::<f64>() / (n - 1.0);
    cov / (vx.sqrt() * vy.sqrt())
}

/// Average ranks by counting: 1 + #smaller + (#equal - 1) / 2.
pub fn rank_oracle(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            let below = x.iter().filter(|&&u| u < v).count() as f64;
            let equal = x.iter().filter(|&&u| u == v).count() as f64;
            1.0 + below + (equal - 1.0) / 2.0
        })
        .collect()
}

pub fn spearman_oracle(x: &[f64], y: &[f64]) -> f64 {
    pearson_oracle(&rank_oracle(x), &rank_oracle(y))
}

/// Gamma((v+1)/2) / Gamma(v/2) for integer v, by the recurrence
/// g(v + 2) = g(v) * (v + 1) / v from g(1) = 1/sqrt(pi), g(2) = sqrt(pi)/2.
fn half_gamma_ratio(v: usize) -> f64 {
    let pi = std::f64::consts::PI;
    let mut g = if v % 2 == 1 { 1.0 / pi.sqrt() } else { pi.sqrt() / 2.0 };
    let mut k = if v % 2 == 1 { 1 } else { 2 };
    while k < v {
        g *= (k as f64 + 1.0) / k as f64;
        k += 2;
    }
    g
}

/// Student t density with `v` degrees of freedom.
pub fn t_density(u: f64, v: usize) -> f64 {
    let vf = v as f64;
    half_gamma_ratio(v) / (vf * std::f64::consts::PI).sqrt() * (1.0 + u * u / vf).powf(-(vf + 1.0) / 2.0)
}

#[allow(clippy::too_many_arguments)]
fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, eps: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        return left + right + delta / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1) + simpson(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature over [a, b], pre-split into 64 panels.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, eps: f64) -> f64 {
    let panels = 64;
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|k| {
            let (lo, hi) = (a + k as f64 * h, a + (k + 1) as f64 * h);
            let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
            simpson(&f, lo, hi, fa, fm, fb, whole, eps / panels as f64, 40)
        })
        .sum()
}

/// P(|T| >= |t|) by numerical integration of the density.
pub fn t_two_sided_oracle(t: f64, v: usize) -> f64 {
    let t = t.abs();
    if t < 1.0 {
        1.0 - 2.0 * integrate(|u| t_density(u, v), 0.0, t, 1e-14)
    } else {
        // tail over [t, inf) mapped onto (0, 1] with u = t / s
        let tail = integrate(|s| if s == 0.0 { 0.0 } else { t_density(t / s, v) * t / (s * s) }, 0.0, 1.0, 1e-14);
        2.0 * tail
    }
}

pub fn p_value_oracle(r: f64, n: usize) -> f64 {
    let v = n - 2;
    let t = r * (v as f64 / (1.0 - r * r)).sqrt();
    t_two_sided_oracle(t, v)
}

/// Exhaustive lattice enumeration by repeated rational stepping.
pub fn lattice_count_oracle(res: usize) -> usize {
    let mut count = 0;
    let mut b = 1;
    while 2 * b <= res {
        let mut a = b;
        while a + b <= res {
            count += 1;
            a += 1;
        }
        b += 1;
    }
    count
}

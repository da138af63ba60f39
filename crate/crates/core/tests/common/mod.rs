//! Independent oracles shared by the integration test targets.
#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, PI};

/// Gauss–Legendre nodes and weights on [−1, 1] by Newton on P_n.
pub fn gl(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                let dp = {
                    let (mut p0, mut p1) = (1.0, z);
                    for k in 2..=n {
                        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                        p0 = p1;
                        p1 = p2;
                    }
                    n as f64 * (z * p1 - p0) / (z * z - 1.0)
                };
                x[i] = z;
                w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
                break;
            }
        }
    }
    (x, w)
}

/// Composite Gauss–Legendre on [a, b].
pub fn composite(a: f64, b: f64, panels: usize, rule: &(Vec<f64>, Vec<f64>), mut f: impl FnMut(f64) -> f64) -> f64 {
    let h = (b - a) / panels as f64;
    let mut s = 0.0;
    for p in 0..panels {
        let lo = a + h * p as f64;
        for (x, w) in rule.0.iter().zip(&rule.1) {
            s += 0.5 * h * w * f(lo + 0.5 * h * (x + 1.0));
        }
    }
    s
}

/// k(θ) with ν(k) = 2 sin θ.
pub fn k_of_theta(t: f64) -> f64 {
    (2.0 * t + (2.0 * t).sin()) / PI
}

/// `(π/2) ∫∫∫ δ_ε(Θ) F dℓ dm dn` with a Gaussian δ_ε, in angle variables.
pub fn mollified_collision(theta_k: f64, eps: f64, rho: &impl Fn(f64) -> f64, outer_panels: usize) -> f64 {
    let rule8 = gl(8);
    let rule16 = gl(16);
    let nk = 2.0 * theta_k.sin();
    let rk = rho(k_of_theta(theta_k));
    let jac = |t: f64| 4.0 / PI * t.cos().powi(2);
    let norm = 1.0 / ((2.0 * PI).sqrt() * eps);
    let total = composite(-FRAC_PI_2, FRAC_PI_2, outer_panels, &rule8, |tl| {
        let rl = rho(k_of_theta(tl));
        let nl = 2.0 * tl.sin();
        jac(tl)
            * composite(-FRAC_PI_2, FRAC_PI_2, outer_panels, &rule8, |tm| {
                let rm = rho(k_of_theta(tm));
                let xs = nk - nl + 2.0 * tm.sin();
                let lo = ((xs - 8.0 * eps) / 2.0).max(-1.0);
                let hi = ((xs + 8.0 * eps) / 2.0).min(1.0);
                if lo >= hi {
                    return 0.0;
                }
                let inner = composite(lo.asin(), hi.asin(), 4, &rule16, |tn| {
                    let th = xs - 2.0 * tn.sin();
                    let rn = rho(k_of_theta(tn));
                    let f = rl * rm * rn - rk * rm * rn + rk * rl * rn - rk * rl * rm;
                    norm * (-0.5 * th * th / (eps * eps)).exp() * f * jac(tn)
                });
                jac(tm) * inner
            })
    });
    0.5 * PI * total
}

/// Richardson extrapolation in ε² of the mollified collision integral over
/// ε, ε/2, ε/4.
pub fn mollified_collision_limit(theta_k: f64, eps: f64, rho: &impl Fn(f64) -> f64, outer_panels: usize) -> f64 {
    let c1 = mollified_collision(theta_k, eps, rho, outer_panels);
    let c2 = mollified_collision(theta_k, eps / 2.0, rho, outer_panels);
    let c3 = mollified_collision(theta_k, eps / 4.0, rho, outer_panels);
    let r1 = (4.0 * c2 - c1) / 3.0;
    let r2 = (4.0 * c3 - c2) / 3.0;
    (16.0 * r2 - r1) / 15.0
}

/// Least-squares slope of log y against log x.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

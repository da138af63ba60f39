use super::loglog_slope;
use crate::error::{Error, Result};
use crate::quad::{adaptive, gauss_legendre};
use serde::Serialize;
use std::f64::consts::{FRAC_PI_2, PI};

/// `φ(x) = sin²(x/2)/x²`, with φ(0) = 1/4.
pub fn phi_kernel(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        return 0.25 - x2 / 48.0 + x2 * x2 / 1440.0;
    }
    let s = (0.5 * x).sin();
    s * s / (x * x)
}

/// `∫_ℝ φ`, which should equal π/2.
pub fn phi_integral() -> f64 {
    // Cut at L = 200π, where sin L = 0 and cos L = 1, and add the
    // integrated-by-parts tails 2(1/(2L) − 1/L³).
    let l = 200.0 * PI;
    let rule = gauss_legendre(16);
    let panels = (2.0 * l).ceil() as usize;
    let body = rule.composite(-l, l, panels, phi_kernel);
    body + 2.0 * (0.5 / l - 1.0 / (l * l * l))
}

#[derive(Debug, Clone, Serialize)]
pub struct DeltaLimitReport {
    pub t: Vec<f64>,
    pub integral: Vec<f64>,
    pub target: Vec<f64>,
    pub error: Vec<f64>,
    /// `max_t err(t)·t^{3/2}`.
    pub fitted_c: f64,
    /// Least-squares slope of log err against log t.
    pub slope: f64,
    pub phi_integral: f64,
    pub phi_integral_error: f64,
}

/// Compares `∫_{−2}^{2} φ(tx)h(x) dx` with `(π/2t)h(0)` along a sweep of t.
pub fn delta_limit_check(h: &dyn Fn(f64) -> f64, ts: &[f64]) -> Result<DeltaLimitReport> {
    if ts.is_empty() || ts.iter().any(|&t| !(t >= 1.0)) {
        return Err(Error::Domain("delta_limit_check needs t >= 1".into()));
    }
    let h0 = h(0.0);
    let mut integral = Vec::with_capacity(ts.len());
    let mut target = Vec::with_capacity(ts.len());
    let mut error = Vec::with_capacity(ts.len());
    for &t in ts {
        // Panels about one oscillation wide, split at the peak x = 0.
        let panels = (2.0 * t).ceil() as usize;
        let w = 2.0 / panels as f64;
        let mut v = 0.0;
        for side in [-1.0, 1.0] {
            for p in 0..panels {
                let (a, b) = (side * w * p as f64, side * w * (p + 1) as f64);
                let (lo, hi) = if side < 0.0 { (b, a) } else { (a, b) };
                v += adaptive(lo, hi, 1e-14, |x| phi_kernel(t * x) * h(x)).0;
            }
        }
        let tg = FRAC_PI_2 / t * h0;
        integral.push(v);
        target.push(tg);
        error.push((v - tg).abs());
    }
    let fitted_c = ts
        .iter()
        .zip(&error)
        .map(|(t, e)| e * t.powf(1.5))
        .fold(0.0, f64::max);
    let slope = loglog_slope(ts, &error);
    let pi_int = phi_integral();
    Ok(DeltaLimitReport {
        t: ts.to_vec(),
        integral,
        target,
        error,
        fitted_c,
        slope,
        phi_integral: pi_int,
        phi_integral_error: (pi_int - FRAC_PI_2).abs(),
    })
}

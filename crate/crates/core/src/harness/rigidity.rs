//! Semicircle diagnostics over an N-sweep: eigenvalue histogram and the
//! 99th percentile of the scaled rigidity residuals.

use super::config::ExperimentConfig;
use super::report::{CsvArtifact, ExperimentReport, Metric};
use super::loglog_slope;
use crate::dynamics::run_ensemble;
use crate::error::Result;
use crate::rmt::{eigenvalues, histogram_l1, rigidity_residuals_of, sample_gue, semicircle_cdf};
use std::time::Instant;

pub const DEFAULT_SIZES: [usize; 3] = [50, 100, 200];
pub const HISTOGRAM_BINS: usize = 40;
/// Allowed growth exponent of the percentile in N, the reporting δ.
pub const RIGIDITY_DELTA: f64 = 0.1;

/// Empirical quantile by nearest rank on a sorted copy.
pub fn quantile(xs: &[f64], p: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v[((p * (v.len() - 1) as f64).round()) as usize]
}

#[derive(Debug, Clone)]
pub struct RigidityPoint {
    pub n: usize,
    /// 99th percentile of |r_k| pooled over k and samples.
    pub p99_pooled: f64,
    /// 99th percentile over samples of max_k |r_k|.
    pub p99_max: f64,
    pub eigenvalues: Vec<f64>,
}

pub fn rigidity_point(n: usize, samples: usize, seed: u64) -> Result<RigidityPoint> {
    let spectra = run_ensemble(samples, seed, |_, rng| Ok(eigenvalues(&sample_gue(n, rng))))?;
    let mut pooled = Vec::with_capacity(samples * (2 * n + 1));
    let mut maxes = Vec::with_capacity(samples);
    for l in &spectra {
        let r = rigidity_residuals_of(n, l);
        maxes.push(r.iter().fold(0.0f64, |a, x| a.max(x.abs())));
        pooled.extend(r.iter().map(|x| x.abs()));
    }
    Ok(RigidityPoint {
        n,
        p99_pooled: quantile(&pooled, 0.99),
        p99_max: quantile(&maxes, 0.99),
        eigenvalues: spectra.concat(),
    })
}

pub fn rigidity_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let sizes: Vec<usize> = if cfg.model.n_sweep.is_empty() {
        DEFAULT_SIZES.to_vec()
    } else {
        cfg.model.n_sweep.clone()
    };
    let samples = cfg.ensemble.samples;
    let points: Vec<RigidityPoint> = sizes
        .iter()
        .map(|&n| rigidity_point(n, samples, cfg.ensemble.seed))
        .collect::<Result<_>>()?;
    // Histogram at N = 100 when swept, else at the middle size.
    let hp = points.iter().find(|p| p.n == 100).unwrap_or(&points[points.len() / 2]);
    let l1 = histogram_l1(&hp.eigenvalues, HISTOGRAM_BINS);

    let mut metrics = vec![Metric::at_most(
        &format!("histogram_l1_n{}", hp.n),
        l1,
        0.05,
        "sum over 40 bins of |empirical mass - semicircle mass|, plus mass outside [-2,2]",
    )
    .with_stats(0.0, samples)];
    for p in &points {
        metrics.push(Metric::info(&format!("p99_pooled_n{}", p.n), p.p99_pooled, "99th percentile of |r_k| over k and samples"));
        metrics.push(Metric::info(&format!("p99_max_n{}", p.n), p.p99_max, "99th percentile of max_k |r_k|"));
    }
    if points.len() >= 2 {
        let ns: Vec<f64> = points.iter().map(|p| p.n as f64).collect();
        let pooled: Vec<f64> = points.iter().map(|p| p.p99_pooled).collect();
        let maxes: Vec<f64> = points.iter().map(|p| p.p99_max).collect();
        metrics.push(Metric::at_most(
            "p99_pooled_slope",
            loglog_slope(&ns, &pooled),
            RIGIDITY_DELTA,
            "log-log slope of the pooled 99th percentile against N",
        ));
        metrics.push(Metric::info(
            "p99_max_slope",
            loglog_slope(&ns, &maxes),
            "log-log slope of the per-sample-max 99th percentile against N",
        ));
    }

    let sweep_rows: Vec<Vec<f64>> = points.iter().map(|p| vec![p.n as f64, p.p99_pooled, p.p99_max]).collect();
    let h = 4.0 / HISTOGRAM_BINS as f64;
    let total = hp.eigenvalues.len() as f64;
    let mut counts = vec![0usize; HISTOGRAM_BINS];
    for &x in &hp.eigenvalues {
        if (-2.0..=2.0).contains(&x) {
            counts[(((x + 2.0) / h) as usize).min(HISTOGRAM_BINS - 1)] += 1;
        }
    }
    let hist_rows: Vec<Vec<f64>> = counts
        .iter()
        .enumerate()
        .map(|(b, &c)| {
            let lo = -2.0 + h * b as f64;
            vec![lo, lo + h, c as f64 / total, semicircle_cdf(lo + h) - semicircle_cdf(lo)]
        })
        .collect();
    let artifacts = vec![
        CsvArtifact::from_rows("rigidity.csv", &["n", "p99_pooled", "p99_max"], &sweep_rows),
        CsvArtifact::from_rows("histogram.csv", &["bin_lo", "bin_hi", "empirical_mass", "semicircle_mass"], &hist_rows),
    ];
    ExperimentReport::new(cfg, metrics, artifacts, start.elapsed().as_secs_f64())
}

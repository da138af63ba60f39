//! Exact Weingarten checks: Haar moments, Wg asymptotics, gamma moments,
//! the atom penalty and circuit-covering counts.

use super::config::ExperimentConfig;
use super::report::{CsvArtifact, ExperimentReport, Metric};
use crate::dynamics::run_ensemble;
use crate::error::Result;
use crate::rmt::sample_haar_unitary;
use crate::weingarten::{
    centered_product_moment, covering_class_counts, covering_fixtures, gamma_moment_exact, haar_moment,
    penalty_fixtures, to_f64, wg_exact, wg_leading, CycleType, IndexPattern, Permutation, WeingartenGraph,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use std::collections::BTreeMap;
use std::time::Instant;

pub const HAAR_MC_SAMPLES: usize = 100_000;
pub const HAAR_DIMS: [usize; 3] = [4, 8, 16];
pub const WG_DIMS: [usize; 4] = [8, 16, 32, 64];
pub const GAMMA_DIMS: [usize; 3] = [8, 16, 32];
/// Accepted band for the per-doubling decrease of the Wg correction.
pub const WG_RATIO_BAND: (f64, f64) = (3.5, 4.5);
/// Bound on `max_d d·|exact/predicted − 1|` for the penalty fixtures.
pub const PENALTY_C: f64 = 2.0;

/// Admissible (σ, τ) pairs over all of 𝔖_q², counted by the cycle type of στ⁻¹.
pub fn brute_force_coverings(g: &WeingartenGraph) -> BTreeMap<CycleType, u64> {
    let (psi, bar) = (g.psi_factors(), g.psibar_factors());
    let mut out = BTreeMap::new();
    if psi.len() != bar.len() {
        return out;
    }
    let all = Permutation::all(psi.len());
    for s in &all {
        for t in &all {
            let ok = (0..psi.len()).all(|l| psi[l].0 == bar[s.apply(l)].0 && psi[l].1 == bar[t.apply(l)].1);
            if ok {
                *out.entry(s.compose(&t.inverse()).cycle_type()).or_insert(0) += 1;
            }
        }
    }
    out
}

fn rational(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn haar_metrics(seed: u64, metrics: &mut Vec<Metric>, rows: &mut Vec<Vec<f64>>) -> Result<()> {
    let g2 = WeingartenGraph::from_factors(vec![(0, 0)], vec![(0, 0)]);
    let g4 = WeingartenGraph::from_factors(vec![(0, 0); 2], vec![(0, 0); 2]);
    let mut exact_ok = true;
    let mut worst_z: f64 = 0.0;
    for &d in &HAAR_DIMS {
        let di = d as i64;
        let m2 = haar_moment(&g2, d)?;
        let m4 = haar_moment(&g4, d)?;
        exact_ok &= m2 == rational(1, di) && m4 == rational(2, di * (di + 1));
        let draws = run_ensemble(HAAR_MC_SAMPLES, seed ^ d as u64, |_, rng| {
            Ok(sample_haar_unitary(d, rng).get(0, 0).norm_sqr())
        })?;
        for (p, exact) in [(1, to_f64(&m2)), (2, to_f64(&m4))] {
            let xs: Vec<f64> = draws.iter().map(|x| x.powi(p)).collect();
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let se = (var / n).sqrt();
            let z = (mean - exact).abs() / se;
            worst_z = worst_z.max(z);
            rows.push(vec![d as f64, 2.0 * p as f64, exact, mean, se]);
        }
    }
    metrics.push(Metric::flag(
        "haar_moments_exact",
        exact_ok,
        "E|psi_11|^2 = 1/d and E|psi_11|^4 = 2/(d(d+1)) as exact rationals, d in {4,8,16}",
    ));
    metrics.push(
        Metric::at_most("haar_moments_mc_max_z", worst_z, 5.0, "max |MC mean - exact| / stderr")
            .with_stats(0.0, HAAR_MC_SAMPLES),
    );
    Ok(())
}

fn wg_metrics(metrics: &mut Vec<Metric>) -> Result<()> {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for q in 1..=3 {
        for ct in CycleType::all(q) {
            let dev: Vec<f64> = WG_DIMS
                .iter()
                .map(|&d| Ok((to_f64(&wg_exact(&ct, q, d)?) / wg_leading(&ct, q, d) - 1.0).abs()))
                .collect::<Result<_>>()?;
            // Wg(id) = 1/d at q = 1 has no correction at all.
            if dev.iter().all(|&x| x < 1e-15) {
                continue;
            }
            for w in dev.windows(2) {
                let r = w[0] / w[1];
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
    }
    let (a, b) = WG_RATIO_BAND;
    metrics.push(Metric::at_least(
        "wg_correction_ratio_min",
        lo,
        a,
        "min over q <= 3 cycle types of dev(d)/dev(2d), dev = |Wg/leading - 1|",
    ));
    metrics.push(Metric::at_most("wg_correction_ratio_max", hi, b, "max of the same ratio"));
    Ok(())
}

fn gamma_metrics(metrics: &mut Vec<Metric>, rows: &mut Vec<Vec<f64>>) -> Result<()> {
    let pat = IndexPattern::DISTINCT;
    let (mut worst2, mut worst4) = (0.0f64, 0.0f64);
    let mut sq_zero = true;
    for &d in &GAMMA_DIMS {
        let df = d as f64;
        let m2 = to_f64(&gamma_moment_exact(&pat, 1, 1, d, 8)?) * df.powi(3);
        let m4 = to_f64(&gamma_moment_exact(&pat, 2, 2, d, 8)?) * df.powi(6) / 2.0;
        sq_zero &= gamma_moment_exact(&pat, 2, 0, d, 8)?.is_zero();
        worst2 = worst2.max((m2 - 1.0).abs() * df / 8.0);
        worst4 = worst4.max((m4 - 1.0).abs() * df / 8.0);
        rows.push(vec![df, m2, m4]);
    }
    metrics.push(Metric::at_most(
        "gamma_second_moment_band",
        worst2,
        1.0,
        "max_d |d^3 E|gamma|^2 - 1| / (8/d), distinct indices",
    ));
    metrics.push(Metric::at_most(
        "gamma_fourth_moment_band",
        worst4,
        1.0,
        "max_d |d^6 E|gamma|^4 / 2 - 1| / (8/d)",
    ));
    metrics.push(Metric::flag("gamma_square_mean_zero", sq_zero, "E[gamma^2] = 0 exactly"));
    Ok(())
}

fn penalty_metrics(metrics: &mut Vec<Metric>, rows: &mut Vec<Vec<f64>>) -> Result<()> {
    let mut fitted: f64 = 0.0;
    let mut shrinks = true;
    for (i, fx) in penalty_fixtures().iter().enumerate() {
        let mut dev = Vec::new();
        for &d in &WG_DIMS {
            let m = centered_product_moment(&fx.atoms, &fx.graph, d, 8)?;
            let e = (to_f64(&m.exact) / to_f64(&m.predicted) - 1.0).abs();
            fitted = fitted.max(d as f64 * e);
            rows.push(vec![i as f64, d as f64, to_f64(&m.exact), to_f64(&m.predicted), e]);
            dev.push(e);
        }
        shrinks &= dev[dev.len() - 1] <= dev[0] + 1e-14;
    }
    metrics.push(Metric::at_most(
        "penalty_fitted_c",
        fitted,
        PENALTY_C,
        "max over fixtures and d of d * |exact / predicted - 1|",
    ));
    metrics.push(Metric::flag("penalty_deviation_shrinks", shrinks, "deviation at d = 64 <= deviation at d = 8"));
    Ok(())
}

fn covering_metrics(metrics: &mut Vec<Metric>) -> Result<()> {
    let mut mismatches = 0usize;
    let mut checked = 0usize;
    for (_, g) in covering_fixtures() {
        if g.q() > 4 {
            continue;
        }
        checked += 1;
        if covering_class_counts(&g, 8)? != brute_force_coverings(&g) {
            mismatches += 1;
        }
    }
    metrics.push(Metric::at_most(
        "covering_count_mismatches",
        mismatches as f64,
        0.0,
        "fixtures whose covering counts differ from brute-force enumeration over S_q^2",
    ));
    metrics.push(Metric::info("covering_fixtures_checked", checked as f64, "fixtures with q <= 4"));
    Ok(())
}

pub fn weingarten_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let mut metrics = Vec::new();
    let mut haar_rows = Vec::new();
    let mut gamma_rows = Vec::new();
    let mut penalty_rows = Vec::new();
    haar_metrics(cfg.ensemble.seed, &mut metrics, &mut haar_rows)?;
    wg_metrics(&mut metrics)?;
    gamma_metrics(&mut metrics, &mut gamma_rows)?;
    penalty_metrics(&mut metrics, &mut penalty_rows)?;
    covering_metrics(&mut metrics)?;
    let artifacts = vec![
        CsvArtifact::from_rows("haar_moments.csv", &["d", "power", "exact", "mc_mean", "mc_stderr"], &haar_rows),
        CsvArtifact::from_rows("gamma_moments.csv", &["d", "d3_second", "d6_fourth_half"], &gamma_rows),
        CsvArtifact::from_rows(
            "penalty.csv",
            &["fixture", "d", "exact", "predicted", "deviation"],
            &penalty_rows,
        ),
    ];
    ExperimentReport::new(cfg, metrics, artifacts, start.elapsed().as_secs_f64())
}

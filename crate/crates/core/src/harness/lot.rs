//! Monte Carlo check of the second-order expansion of `E|a_k(t)|²`.
//!
//! Per sample the Duhamel iterates a^[0], a^[1], a^[2] at time t give
//! `|a^[0] + a^[1]|² + 2Re conj(a^[0])a^[2] = |A|² + m₂ + q₄` with the
//! μ²-order term `m₂ = 2Re conj(a^[0])a^[1]` and the μ⁴-order term
//! `q₄ = |a^[1]|² + 2Re conj(a^[0])a^[2]`. The expansion is compared with
//! `|A|² + (t/T_kin)C[|A|²]`. Since `E m₂ = 0` exactly, the distance is
//! computed from q₄ alone and the vanishing of `E m₂` is tested separately.

use super::config::ExperimentConfig;
use super::report::{CsvArtifact, ExperimentReport, Metric};
use crate::duhamel::{iterate_from, IterateOptions};
use crate::dynamics::{initial_data, mean_and_stderr, run_ensemble, ModelConfig};
use crate::error::{Error, Result};
use crate::kwe::collision_on_lattice;
use crate::rmt::{sample_gue, spectral_decompose};
use std::time::Instant;

pub const MAX_LOT_N: usize = 64;
pub const MIN_LOT_ENSEMBLE: usize = 64;
/// Observation time when the config leaves `integrator.t` unset.
pub const DEFAULT_LOT_T: f64 = 2.0;
/// z-score bound for the μ²-order cancellation.
pub const CANCELLATION_Z: f64 = 4.0;

/// Per-sample q₄ and m₂, indexed `[sample][k + N]`.
struct Terms {
    q4: Vec<Vec<f64>>,
    m2: Vec<Vec<f64>>,
}

fn sample_terms(model: &ModelConfig, t: f64, samples: usize, seed: u64) -> Result<Terms> {
    let a0 = initial_data(model);
    let d = model.dim();
    let per = run_ensemble(samples, seed, |_, rng| {
        if t == 0.0 {
            // Every iterate beyond the zeroth vanishes at t = 0.
            return Ok((vec![0.0; d], vec![0.0; d]));
        }
        let spec = spectral_decompose(&sample_gue(model.n, rng))?;
        let it = iterate_from(&spec, model.mu, &a0, 2, &[t], IterateOptions::default())?;
        let (f0, f1, f2) = (&it.values[0][0].amps, &it.values[1][0].amps, &it.values[2][0].amps);
        let q4 = (0..d).map(|k| f1[k].norm_sqr() + 2.0 * (f0[k].conj() * f2[k]).re).collect();
        let m2 = (0..d).map(|k| 2.0 * (f0[k].conj() * f1[k]).re).collect();
        Ok((q4, m2))
    })?;
    let (q4, m2) = per.into_iter().unzip();
    Ok(Terms { q4, m2 })
}

/// Summary of one ensemble at one N.
#[derive(Debug, Clone)]
pub struct LotRun {
    pub n: usize,
    pub t: f64,
    pub samples: usize,
    pub t_kin: f64,
    pub mean_q4: Vec<f64>,
    pub stderr_q4: Vec<f64>,
    pub mean_m2: Vec<f64>,
    pub stderr_m2: Vec<f64>,
    /// `C[|A|²](k/N)`.
    pub collision: Vec<f64>,
    /// `(1/N)Σ_k |E q₄ − (t/T_kin)C| / (t/T_kin)`; the unscaled sum at t = 0.
    pub scaled_distance: f64,
    /// The same distance with m₂ kept in the expansion.
    pub scaled_distance_with_m2: f64,
    /// `(1/N)Σ_k stderr(q₄) / (t/T_kin)`.
    pub scaled_noise: f64,
    /// `max_k |E m₂| / stderr(m₂)`.
    pub m2_max_z: f64,
}

fn summarize(model: &ModelConfig, t: f64, terms: &Terms, collision: &[f64]) -> LotRun {
    let n = model.n;
    let nf = n as f64;
    let t_kin = model.kinetic_time();
    let (mean_q4, stderr_q4) = mean_and_stderr(&terms.q4);
    let (mean_m2, stderr_m2) = mean_and_stderr(&terms.m2);
    let s = t / t_kin;
    let norm = if t > 0.0 { s } else { 1.0 };
    let dist = |with_m2: bool| {
        (0..model.dim())
            .map(|k| {
                let extra = if with_m2 { mean_m2[k] } else { 0.0 };
                (mean_q4[k] + extra - s * collision[k]).abs()
            })
            .sum::<f64>()
            / nf
            / norm
    };
    // Modes where m₂ vanishes identically (A(k/N) = 0) carry no information.
    let m2_max_z = mean_m2
        .iter()
        .zip(&stderr_m2)
        .filter(|(_, &se)| se > 0.0)
        .map(|(m, se)| m.abs() / se)
        .fold(0.0, f64::max);
    LotRun {
        n,
        t,
        samples: terms.q4.len(),
        t_kin,
        scaled_distance: dist(false),
        scaled_distance_with_m2: dist(true),
        scaled_noise: stderr_q4.iter().sum::<f64>() / nf / norm,
        m2_max_z,
        mean_q4,
        stderr_q4,
        mean_m2,
        stderr_m2,
        collision: collision.to_vec(),
    }
}

fn check_pre(n: usize, samples: usize) -> Result<()> {
    if n > MAX_LOT_N {
        return Err(Error::SizeCap {
            what: "lot N",
            value: n,
            cap: MAX_LOT_N,
        });
    }
    if samples < MIN_LOT_ENSEMBLE {
        return Err(Error::Power(format!(
            "lot ensemble of {samples} is below the minimum {MIN_LOT_ENSEMBLE}"
        )));
    }
    Ok(())
}

/// One ensemble of `samples` GUE draws at the model's N.
pub fn lot_run(model: &ModelConfig, cfg: &ExperimentConfig, t: f64, samples: usize, seed: u64) -> Result<LotRun> {
    check_pre(model.n, samples)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("lot time t = {t} must be finite and >= 0")));
    }
    let collision = collision_on_lattice(&model.profile, model.n, &cfg.kwe.collision())?;
    let terms = sample_terms(model, t, samples, seed)?;
    Ok(summarize(model, t, &terms, &collision))
}

fn csv_rows(run: &LotRun, model: &ModelConfig) -> Vec<Vec<f64>> {
    let n = run.n as i64;
    let s = run.t / run.t_kin;
    (0..run.mean_q4.len())
        .map(|i| {
            let k = i as i64 - n;
            let kappa = k as f64 / n as f64;
            vec![
                run.n as f64,
                k as f64,
                kappa,
                model.profile.density(kappa),
                run.mean_q4[i],
                run.stderr_q4[i],
                run.mean_m2[i],
                run.stderr_m2[i],
                s * run.collision[i],
            ]
        })
        .collect()
}

/// Cancellation check at N with `ensemble.samples` draws, and the N → 2N trend
/// with `trend_samples` draws. The first ensemble is a prefix of the second
/// because per-sample streams depend only on (seed, index).
pub fn lot_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let t = cfg.integrator.t.unwrap_or(DEFAULT_LOT_T);
    let n1 = cfg.model.n;
    let n2 = cfg.model.n_sweep.get(1).copied().unwrap_or(2 * n1);
    let samples = cfg.ensemble.samples;
    let trend = cfg.trend_samples().max(samples);
    let seed = cfg.ensemble.seed;
    check_pre(n1, samples)?;
    check_pre(n2, trend)?;
    let m1 = cfg.model_at(n1)?;
    let m2 = cfg.model_at(n2)?;
    let cc = cfg.kwe.collision();

    let c1 = collision_on_lattice(&m1.profile, n1, &cc)?;
    let all1 = sample_terms(&m1, t, trend, seed)?;
    let head = Terms {
        q4: all1.q4[..samples].to_vec(),
        m2: all1.m2[..samples].to_vec(),
    };
    let base = summarize(&m1, t, &head, &c1);
    let r1 = summarize(&m1, t, &all1, &c1);
    let c2 = collision_on_lattice(&m2.profile, n2, &cc)?;
    let r2 = summarize(&m2, t, &sample_terms(&m2, t, trend, seed)?, &c2);

    let q4_formula = "(1/N) sum_k |E q4_k - (t/T_kin) C[|A|^2](k/N)| / (t/T_kin), q4 = |a1|^2 + 2Re(conj(a0) a2)";
    let ratio = if r1.scaled_distance > 0.0 {
        r2.scaled_distance / r1.scaled_distance
    } else {
        0.0
    };
    let metrics = vec![
        Metric::at_most(
            "mu2_cancellation_max_z",
            base.m2_max_z,
            CANCELLATION_Z,
            "max_k |E 2Re(conj(a0_k) a1_k)| / stderr",
        )
        .with_stats(0.0, base.samples),
        Metric::info(&format!("scaled_l1_distance_n{n1}_base"), base.scaled_distance, q4_formula)
            .with_stats(base.scaled_noise, base.samples),
        Metric::info(&format!("scaled_l1_distance_n{n1}"), r1.scaled_distance, q4_formula)
            .with_stats(r1.scaled_noise, r1.samples),
        Metric::info(&format!("scaled_l1_distance_n{n2}"), r2.scaled_distance, q4_formula)
            .with_stats(r2.scaled_noise, r2.samples),
        Metric::info(
            &format!("scaled_l1_distance_with_mu2_n{n1}"),
            r1.scaled_distance_with_m2,
            "same distance with the mean mu^2 term kept",
        ),
        Metric::info(
            &format!("scaled_l1_distance_with_mu2_n{n2}"),
            r2.scaled_distance_with_m2,
            "same distance with the mean mu^2 term kept",
        ),
        Metric::info("t_over_t_kin", t / m1.kinetic_time(), "t / T_kin at the base N"),
        Metric::at_most(
            "trend_ratio",
            ratio,
            1.0,
            "scaled L1 distance at 2N divided by that at N, same t",
        ),
    ];
    let mut rows = csv_rows(&r1, &m1);
    rows.extend(csv_rows(&r2, &m2));
    let header = ["n", "k", "kappa", "density", "mean_q4", "stderr_q4", "mean_mu2", "stderr_mu2", "prediction_q4"];
    let artifacts = vec![CsvArtifact::from_rows("lot.csv", &header, &rows)];
    ExperimentReport::new(cfg, metrics, artifacts, start.elapsed().as_secs_f64())
}

//! Kinetic equation run from the configured profile, with its invariants.

use super::config::ExperimentConfig;
use super::report::{CsvArtifact, ExperimentReport, Metric};
use crate::error::Result;
use crate::kwe::{
    collision_operator, functionals, rayleigh_jeans, solve, CollisionConfig, KineticGrid, SpectralDensity,
};
use std::time::Instant;

pub const DEFAULT_KWE_T: f64 = 1.0;
pub const DEFAULT_KWE_DT: f64 = 0.05;

/// `‖C[RJ]‖∞` at Q = 16, 32, 64 on one grid.
pub fn rj_residuals(grid: usize, cc: &CollisionConfig) -> Result<Vec<(usize, f64)>> {
    let g = KineticGrid::new(grid)?;
    let rj = rayleigh_jeans(1.0, 3.0, g)?;
    [16usize, 32, 64]
        .iter()
        .map(|&q| {
            let c = collision_operator(&rj, &CollisionConfig { q, ..*cc })?;
            Ok((q, c.iter().fold(0.0f64, |a, x| a.max(x.abs()))))
        })
        .collect()
}

pub fn kwe_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let cc = cfg.kwe.collision();
    let grid = KineticGrid::new(cfg.kwe.grid)?;
    let t_end = cfg.integrator.t.unwrap_or(DEFAULT_KWE_T);
    let dt = cfg.integrator.dt.unwrap_or(DEFAULT_KWE_DT);
    let rho0 = SpectralDensity::from_profile(grid.clone(), &cfg.model.profile);
    let sol = solve(&rho0, t_end, dt, &cc)?;
    let f: Vec<_> = sol.states.iter().map(functionals).collect::<Result<_>>()?;
    let (m0, e0) = (f[0].mass, f[0].energy);
    let mass_drift = f.iter().map(|x| (x.mass - m0).abs()).fold(0.0, f64::max) / m0.abs();
    let energy_drift = f.iter().map(|x| (x.energy - e0).abs()).fold(0.0, f64::max) / e0.abs().max(m0.abs());
    let entropy_drop = f
        .windows(2)
        .map(|w| w[0].entropy - w[1].entropy)
        .fold(0.0, f64::max);
    let c_const = collision_operator(&SpectralDensity::constant(grid.clone(), 1.0), &cc)?
        .iter()
        .fold(0.0f64, |a, x| a.max(x.abs()));
    let rj = rj_residuals(cfg.kwe.grid, &cc)?;
    // Either a 4× drop or a residual already at round-off counts as converging.
    let rj_ok = rj.windows(2).all(|w| w[1].1 <= w[0].1 / 4.0 || w[1].1 <= 1e-11);

    let mut metrics = vec![
        Metric::at_most("mass_drift", mass_drift, 1e-6, "max_t |M(t) - M(0)| / |M(0)|"),
        Metric::at_most(
            "energy_drift",
            energy_drift,
            1e-5,
            "max_t |E(t) - E(0)| / max(|E(0)|, |M(0)|)",
        ),
        Metric::at_most("entropy_decrease", entropy_drop, 1e-8, "max step decrease of int log rho"),
        Metric::at_most("collision_of_constant", c_const, 1e-12, "max_k |C[1](k)|"),
        Metric::flag(
            "rj_quadrature_convergence",
            rj_ok,
            "||C[RJ]||_inf drops 4x per Q doubling or is below 1e-11",
        ),
        Metric::info("rejected_steps", sol.rejected_steps as f64, "RK4 steps retried with half the step"),
    ];
    for (q, v) in &rj {
        metrics.push(Metric::info(&format!("rj_residual_q{q}"), *v, "||C[RJ]||_inf, RJ = 1/(3 + nu(k))"));
    }
    let frows: Vec<Vec<f64>> = sol
        .times
        .iter()
        .zip(&f)
        .map(|(t, x)| vec![*t, x.mass, x.energy, x.entropy])
        .collect();
    let artifacts = vec![
        CsvArtifact {
            name: "kwe_solution.csv".into(),
            contents: sol.to_csv(),
        },
        CsvArtifact::from_rows("kwe_functionals.csv", &["t", "mass", "energy", "entropy"], &frows),
    ];
    ExperimentReport::new(cfg, metrics, artifacts, start.elapsed().as_secs_f64())
}

//! The second-order contribution I_k computed three ways: with the sampled
//! eigenvalues, with their deterministic locations ν(k/N), and as the
//! continuum integral over [−1,1]³.
//!
//! All three share one evaluator. Writing φ(tΩ) = ¼∫_{−1}^{1}(1−|u|)e^{iutΩ}du
//! makes the phase factorise over ℓ, m, n, so the triple sum collapses to
//! products of the one-dimensional sums `A(u) = Σ w ρ e^{−iutx}` and
//! `B(u) = Σ w e^{−iutx}`.

use crate::dynamics::{mean_and_stderr, run_ensemble, DataProfile, ModelConfig};
use crate::error::{Error, Result};
use crate::quad::gauss_legendre;
use crate::rmt::{eigenvalues, kappa_of_theta, nu, sample_gue};
use num_complex::Complex64 as C64;
use serde::Serialize;
use std::f64::consts::FRAC_PI_2;

/// Largest N accepted by [`ik_consistency`].
pub const MAX_IK_N: usize = 64;

/// Weighted point set standing in for the ℓ, m, n sums.
struct Nodes<'a> {
    x: &'a [f64],
    w: &'a [f64],
    rho: &'a [f64],
}

/// `Σ_{ℓmn} w_ℓw_mw_n φ(t(x_k − x_ℓ + x_m − x_n)) f(k,ℓ,m,n)` for every target `(x_k, ρ_k)`.
fn phi_weighted_sums(nodes: &Nodes, targets: &[(f64, f64)], t: f64) -> Vec<f64> {
    if t == 0.0 {
        // φ(0) is constant and the four-term bracket sums to zero.
        return targets.iter().map(|&(_, rk)| phi0_sum(nodes, rk)).collect();
    }
    let rule = gauss_legendre(32);
    let panels = t.abs().ceil().max(1.0) as usize;
    let h = 1.0 / panels as f64;
    let mut out = vec![0.0; targets.len()];
    for p in 0..panels {
        for (u, wu) in rule.mapped(h * p as f64, h * (p + 1) as f64) {
            let mut a = C64::new(0.0, 0.0);
            let mut b = C64::new(0.0, 0.0);
            for ((&x, &w), &r) in nodes.x.iter().zip(nodes.w).zip(nodes.rho) {
                let e = C64::from_polar(w, -u * t * x);
                a += e * r;
                b += e;
            }
            let a2 = a.norm_sqr();
            let core_free = a * a2;
            let core_rho = b * a2 * 2.0 - a * a * b.conj();
            let weight = 0.5 * (1.0 - u) * wu;
            for (o, &(xk, rk)) in out.iter_mut().zip(targets) {
                let tk = C64::from_polar(1.0, u * t * xk) * (core_free - core_rho * rk);
                *o += weight * tk.re;
            }
        }
    }
    out
}

fn phi0_sum(nodes: &Nodes, rk: f64) -> f64 {
    let sw: f64 = nodes.w.iter().sum();
    let sr: f64 = nodes.w.iter().zip(nodes.rho).map(|(w, r)| w * r).sum();
    0.25 * (sr * sr * sr - 2.0 * rk * sw * sr * sr + rk * sr * sr * sw)
}

fn lattice_density(profile: &DataProfile, n: usize) -> Vec<f64> {
    (0..=2 * n)
        .map(|i| profile.density((i as f64 - n as f64) / n as f64))
        .collect()
}

fn lattice_nu(n: usize) -> Result<Vec<f64>> {
    (0..=2 * n).map(|i| nu((i as f64 - n as f64) / n as f64)).collect()
}

fn sum_prefactor(n: usize, mu: f64, t: f64) -> f64 {
    let d = (2 * n + 1) as f64;
    8.0 * t * t * mu.powi(4) / ((n * n) as f64 * d * d * d)
}

/// I_k with the eigenvalues of one sample (way i).
pub fn ik_eigen(lambda: &[f64], profile: &DataProfile, n: usize, mu: f64, t: f64) -> Result<Vec<f64>> {
    let d = 2 * n + 1;
    if lambda.len() != d {
        return Err(Error::Dimension {
            expected: d,
            got: lambda.len(),
        });
    }
    let rho = lattice_density(profile, n);
    let ones = vec![1.0; d];
    let targets: Vec<(f64, f64)> = lambda.iter().copied().zip(rho.iter().copied()).collect();
    let s = phi_weighted_sums(&Nodes { x: lambda, w: &ones, rho: &rho }, &targets, t);
    let c = sum_prefactor(n, mu, t);
    Ok(s.into_iter().map(|v| c * v).collect())
}

/// I_k with λ replaced by ν(k/N) (way ii).
pub fn ik_deterministic(profile: &DataProfile, n: usize, mu: f64, t: f64) -> Result<Vec<f64>> {
    ik_eigen(&lattice_nu(n)?, profile, n, mu, t)
}

/// Continuum limit of the Riemann sum over ℓ, m, n (way iii).
pub fn ik_continuum(profile: &DataProfile, n: usize, mu: f64, t: f64) -> Result<Vec<f64>> {
    let g = 64 + (8.0 * t.abs()).ceil() as usize;
    let rule = gauss_legendre(g);
    let mut x = Vec::with_capacity(g);
    let mut w = Vec::with_capacity(g);
    let mut rho = Vec::with_capacity(g);
    for (th, wt) in rule.mapped(-FRAC_PI_2, FRAC_PI_2) {
        x.push(2.0 * th.sin());
        w.push(wt * crate::rmt::dkappa_dtheta(th));
        rho.push(profile.density(kappa_of_theta(th)));
    }
    let targets: Vec<(f64, f64)> = lattice_nu(n)?
        .into_iter()
        .zip(lattice_density(profile, n))
        .collect();
    let s = phi_weighted_sums(&Nodes { x: &x, w: &w, rho: &rho }, &targets, t);
    let nf = n as f64;
    let d = 2.0 * nf + 1.0;
    let c = 8.0 * t * t * nf * mu.powi(4) / (d * d * d);
    Ok(s.into_iter().map(|v| c * v).collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct IkReport {
    pub n: usize,
    pub t: f64,
    pub samples: usize,
    pub eigen: Vec<f64>,
    pub eigen_stderr: Vec<f64>,
    pub deterministic: Vec<f64>,
    pub continuum: Vec<f64>,
    /// `(1/N)Σ_k |(i) − (ii)|`.
    pub gap_eigen_deterministic: f64,
    /// `(1/N)Σ_k |(ii) − (iii)|`.
    pub gap_deterministic_continuum: f64,
    pub gap_eigen_continuum: f64,
    /// `(1/N)Σ_k` of the standard error of way (i), the noise floor of the first gap.
    pub eigen_noise: f64,
}

fn l1_gap(a: &[f64], b: &[f64], n: usize) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / n.max(1) as f64
}

/// Compares the three evaluations of I_k; way (i) is averaged over `spectra`.
pub fn ik_consistency(spectra: &[Vec<f64>], cfg: &ModelConfig, t: f64) -> Result<IkReport> {
    let n = cfg.n;
    if n > MAX_IK_N {
        return Err(Error::SizeCap {
            what: "ik_consistency N",
            value: n,
            cap: MAX_IK_N,
        });
    }
    if spectra.is_empty() {
        return Err(Error::Power("ik_consistency needs at least one spectrum".into()));
    }
    let per: Vec<Vec<f64>> = spectra
        .iter()
        .map(|l| ik_eigen(l, &cfg.profile, n, cfg.mu, t))
        .collect::<Result<_>>()?;
    let (eigen, eigen_stderr) = mean_and_stderr(&per);
    let deterministic = ik_deterministic(&cfg.profile, n, cfg.mu, t)?;
    let continuum = ik_continuum(&cfg.profile, n, cfg.mu, t)?;
    Ok(IkReport {
        n,
        t,
        samples: spectra.len(),
        gap_eigen_deterministic: l1_gap(&eigen, &deterministic, n),
        gap_deterministic_continuum: l1_gap(&deterministic, &continuum, n),
        gap_eigen_continuum: l1_gap(&eigen, &continuum, n),
        eigen_noise: eigen_stderr.iter().sum::<f64>() / n.max(1) as f64,
        eigen,
        eigen_stderr,
        deterministic,
        continuum,
    })
}

/// GUE eigenvalue samples for [`ik_consistency`], seeded like every other ensemble.
pub fn sample_spectra(n: usize, samples: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    run_ensemble(samples, seed, |_, rng| Ok(eigenvalues(&sample_gue(n, rng))))
}

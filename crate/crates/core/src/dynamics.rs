//! Integration of the diagonalised, Wick-ordered cubic system
//! `i ȧ − Λa = (μ²/N)[Ψ*(Ψa ⊙ conj(Ψa) ⊙ Ψa) − (2‖a‖²/(2N+1)) a]`
//! and seeded ensemble estimation of `E|a_k(t)|²`.

use crate::error::{Error, Result};
use crate::rmt::{sample_gue, spectral_decompose, HermitianMatrix, SpectralData};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Named data profiles A: [−1,1] → ℂ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataProfile {
    /// A ≡ value.
    Constant { value: f64 },
    /// A(x) = amp·(1 − x²).
    Parabola { amp: f64 },
    /// A(x) = a + b·x².
    Quadratic { a: f64, b: f64 },
    /// A(x) = amp·exp(−x²/(2w²)).
    Gaussian { amp: f64, width: f64 },
    /// A(x) = amp·(1 − x²/2)·e^{iπ·freq·x}.
    Chirp { amp: f64, freq: f64 },
}

impl DataProfile {
    pub fn eval(&self, x: f64) -> C64 {
        match *self {
            DataProfile::Constant { value } => C64::new(value, 0.0),
            DataProfile::Parabola { amp } => C64::new(amp * (1.0 - x * x), 0.0),
            DataProfile::Quadratic { a, b } => C64::new(a + b * x * x, 0.0),
            DataProfile::Gaussian { amp, width } => {
                C64::new(amp * (-x * x / (2.0 * width * width)).exp(), 0.0)
            }
            DataProfile::Chirp { amp, freq } => {
                C64::from_polar(amp * (1.0 - 0.5 * x * x), std::f64::consts::PI * freq * x)
            }
        }
    }

    /// |A(x)|².
    pub fn density(&self, x: f64) -> f64 {
        self.eval(x).norm_sqr()
    }
}

/// Model parameters. `mu = N^beta` unless a coupling override is set for
/// perturbative diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub n: usize,
    pub beta: f64,
    pub mu: f64,
    pub profile: DataProfile,
    pub t_end: f64,
    pub dt: f64,
    /// Output times; empty means `[0, t_end]`.
    #[serde(default)]
    pub sample_times: Vec<f64>,
    #[serde(default)]
    pub coupling_override: bool,
}

/// Default step `min(0.01, 0.1·N/μ²)` clamped to `[1e-4, 0.05]`.
pub fn default_dt(n: usize, mu: f64) -> f64 {
    let r = if mu > 0.0 { 0.1 * n as f64 / (mu * mu) } else { f64::INFINITY };
    0.01f64.min(r).clamp(1e-4, 0.05)
}

impl ModelConfig {
    pub fn new(n: usize, beta: f64, profile: DataProfile) -> Result<Self> {
        let mu = (n as f64).powf(beta);
        let cfg = Self {
            n,
            beta,
            mu,
            profile,
            t_end: 1.0,
            dt: default_dt(n, mu),
            sample_times: Vec::new(),
            coupling_override: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Replaces μ, bypassing the `μ = N^β` scaling.
    pub fn with_coupling(mut self, mu: f64) -> Self {
        self.mu = mu;
        self.coupling_override = true;
        self
    }

    pub fn with_time(mut self, t_end: f64, dt: f64) -> Self {
        self.t_end = t_end;
        self.dt = dt;
        self
    }

    pub fn with_sample_times(mut self, times: Vec<f64>) -> Self {
        self.sample_times = times;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("model.n must be >= 1".into()));
        }
        if !(self.beta > 0.25 && self.beta < 0.5) {
            return Err(Error::Config(format!(
                "model.beta = {} outside the valid range (1/4, 1/2)",
                self.beta
            )));
        }
        if !self.coupling_override {
            let expect = (self.n as f64).powf(self.beta);
            if (self.mu - expect).abs() > 1e-12 * expect.max(1.0) {
                return Err(Error::Config("model.mu must equal N^beta".into()));
            }
        } else if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(Error::Config("model.mu must be finite and >= 0".into()));
        }
        if !(self.dt > 0.0 && self.dt <= 0.1) {
            return Err(Error::Config(format!(
                "integrator.dt = {} outside (0, 0.1]",
                self.dt
            )));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config("model.t_end must be finite and >= 0".into()));
        }
        if self.sample_times.windows(2).any(|w| w[0] >= w[1])
            || self.sample_times.iter().any(|&t| t < 0.0 || t > self.t_end)
        {
            return Err(Error::Config(
                "sample_times must be strictly increasing within [0, t_end]".into(),
            ));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        2 * self.n + 1
    }

    /// `T_kin = N²/μ⁴`.
    pub fn kinetic_time(&self) -> f64 {
        let n = self.n as f64;
        n * n / self.mu.powi(4)
    }

    pub fn output_times(&self) -> Vec<f64> {
        if self.sample_times.is_empty() {
            if self.t_end > 0.0 {
                vec![0.0, self.t_end]
            } else {
                vec![0.0]
            }
        } else {
            self.sample_times.clone()
        }
    }
}

/// Amplitudes `a_k`, `k ∈ [−N, N]`, stored at `k + N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    pub n: usize,
    pub amps: Vec<C64>,
}

impl StateVector {
    pub fn new(n: usize, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != 2 * n + 1 {
            return Err(Error::Dimension {
                expected: 2 * n + 1,
                got: amps.len(),
            });
        }
        Ok(Self { n, amps })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            amps: vec![C64::new(0.0, 0.0); 2 * n + 1],
        }
    }

    pub fn get(&self, k: i64) -> C64 {
        self.amps[(k + self.n as i64) as usize]
    }

    /// ‖a‖².
    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.amps.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn distance(&self, other: &StateVector) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// `a_k(0) = A(k/N)`.
pub fn initial_data(cfg: &ModelConfig) -> StateVector {
    let n = cfg.n;
    let amps = (0..2 * n + 1)
        .map(|i| cfg.profile.eval((i as f64 - n as f64) / n as f64))
        .collect();
    StateVector { n, amps }
}

/// Which cubic system to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ordering {
    /// With the mass-dependent phase counter-term.
    Wick,
    /// The un-ordered system `(μ²/N)Ψ*(|Ψa|²Ψa)`.
    Plain,
}

/// Precomputed linear backbone for repeated nonlinearity evaluations.
pub struct CubicSystem {
    n: usize,
    mu: f64,
    lambda: Vec<f64>,
    psi: DMatrix<C64>,
    psi_adj: DMatrix<C64>,
    ordering: Ordering,
}

impl CubicSystem {
    pub fn new(spec: &SpectralData, mu: f64, ordering: Ordering) -> Self {
        let psi = spec.psi().matrix().clone();
        Self {
            n: spec.half_size(),
            mu,
            lambda: spec.lambda().to_vec(),
            psi_adj: psi.adjoint(),
            psi,
            ordering,
        }
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn psi(&self) -> &DMatrix<C64> {
        &self.psi
    }

    pub fn psi_adj(&self) -> &DMatrix<C64> {
        &self.psi_adj
    }

    pub fn coupling(&self) -> f64 {
        self.mu * self.mu / self.n.max(1) as f64
    }

    /// The nonlinearity W(a), no propagator factors.
    pub fn nonlinearity(&self, a: &DVector<C64>) -> DVector<C64> {
        let u = &self.psi * a;
        let cubic = u.map(|z| z * z.norm_sqr());
        let mut out = &self.psi_adj * cubic;
        if self.ordering == Ordering::Wick {
            let d = self.lambda.len() as f64;
            let mass: f64 = a.iter().map(|z| z.norm_sqr()).sum();
            out -= a * C64::new(2.0 * mass / d, 0.0);
        }
        out * C64::new(self.coupling(), 0.0)
    }

    /// `e^{±itΛ} v`.
    pub fn propagate(&self, v: &DVector<C64>, t: f64, sign: f64) -> DVector<C64> {
        DVector::from_iterator(
            v.len(),
            v.iter()
                .zip(&self.lambda)
                .map(|(z, &l)| z * C64::from_polar(1.0, sign * l * t)),
        )
    }

    /// Profile equation `ḟ = −i e^{itΛ} W(e^{−itΛ} f)`.
    fn profile_rhs(&self, t: f64, f: &DVector<C64>) -> DVector<C64> {
        let a = self.propagate(f, t, -1.0);
        let w = self.nonlinearity(&a);
        self.propagate(&w, t, 1.0) * C64::new(0.0, -1.0)
    }

    fn rk4_step(&self, t: f64, h: f64, f: &DVector<C64>) -> DVector<C64> {
        let k1 = self.profile_rhs(t, f);
        let k2 = self.profile_rhs(t + 0.5 * h, &(f + &k1 * C64::new(0.5 * h, 0.0)));
        let k3 = self.profile_rhs(t + 0.5 * h, &(f + &k2 * C64::new(0.5 * h, 0.0)));
        let k4 = self.profile_rhs(t + h, &(f + &k3 * C64::new(h, 0.0)));
        f + (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * C64::new(h / 6.0, 0.0)
    }

    /// Integrates from `a0` at t = 0 and returns states at the requested
    /// ascending times, plus the per-step mass log.
    pub fn integrate(
        &self,
        a0: &StateVector,
        times: &[f64],
        dt: f64,
    ) -> Result<(Vec<StateVector>, Vec<(f64, f64)>)> {
        let d = self.lambda.len();
        if a0.amps.len() != d {
            return Err(Error::Dimension {
                expected: d,
                got: a0.amps.len(),
            });
        }
        let mut f = DVector::from_vec(a0.amps.clone());
        let mut t = 0.0;
        let mut states = Vec::with_capacity(times.len());
        let mut mass_log = vec![(0.0, a0.norm_sqr())];
        for &target in times {
            if target < t {
                return Err(Error::Domain("output times must be ascending and >= 0".into()));
            }
            let span = target - t;
            let steps = (span / dt).ceil().max(0.0) as usize;
            if steps > 0 {
                let h = span / steps as f64;
                for s in 0..steps {
                    let t0 = t + h * s as f64;
                    f = self.rk4_step(t0, h, &f);
                    let m: f64 = f.iter().map(|z| z.norm_sqr()).sum();
                    if !m.is_finite() {
                        return Err(Error::BlowUp { t: t0 + h });
                    }
                    mass_log.push((t0 + h, m));
                }
            }
            t = target;
            let a = self.propagate(&f, t, -1.0);
            states.push(StateVector {
                n: self.n,
                amps: a.iter().copied().collect(),
            });
        }
        Ok((states, mass_log))
    }
}

/// Wick-ordered nonlinearity `(μ²/N)[Ψ*(|Ψa|²Ψa) − (2N𝓜/(2N+1)) a]` with
/// `𝓜 = ‖u‖² = ‖a‖²/N`.
pub fn wick_nonlinearity(a: &StateVector, spec: &SpectralData, mu: f64) -> Result<StateVector> {
    if a.amps.len() != spec.dim() {
        return Err(Error::Dimension {
            expected: spec.dim(),
            got: a.amps.len(),
        });
    }
    let sys = CubicSystem::new(spec, mu, Ordering::Wick);
    let w = sys.nonlinearity(&DVector::from_vec(a.amps.clone()));
    Ok(StateVector {
        n: a.n,
        amps: w.iter().copied().collect(),
    })
}

/// Time samples of a run with its conserved-quantity log.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    /// (t, ‖a‖²) after every step.
    pub mass_log: Vec<(f64, f64)>,
}

impl Trajectory {
    pub fn final_state(&self) -> &StateVector {
        self.states.last().expect("trajectory has at least one sample")
    }

    /// Max relative mass drift over the log.
    pub fn mass_drift(&self) -> f64 {
        let m0 = self.mass_log[0].1;
        self.mass_log
            .iter()
            .map(|&(_, m)| (m - m0).abs() / m0.max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }
}

/// RK4 on the interaction-picture profile of the Wick-ordered system.
pub fn evolve(cfg: &ModelConfig, spec: &SpectralData, a0: &StateVector) -> Result<Trajectory> {
    evolve_with(cfg, spec, a0, Ordering::Wick)
}

pub fn evolve_with(
    cfg: &ModelConfig,
    spec: &SpectralData,
    a0: &StateVector,
    ordering: Ordering,
) -> Result<Trajectory> {
    cfg.validate()?;
    let sys = CubicSystem::new(spec, cfg.mu, ordering);
    let times = cfg.output_times();
    let (states, mass_log) = sys.integrate(a0, &times, cfg.dt)?;
    Ok(Trajectory {
        times,
        states,
        mass_log,
    })
}

/// Mass in both normalisations and the u-frame Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observables {
    /// ‖a‖².
    pub mass: f64,
    /// ‖u‖² = ‖a‖²/N.
    pub mass_u: f64,
    /// ⟨u, Hu⟩ + (μ²/2)‖u‖⁴_{ℓ⁴}.
    pub hamiltonian: f64,
}

/// Mass and Hamiltonian with `u = Ψa/√N`.
pub fn observables(a: &StateVector, h: &HermitianMatrix, mu: f64, spec: &SpectralData) -> Result<Observables> {
    let d = spec.dim();
    if a.amps.len() != d || h.dim() != d {
        return Err(Error::Dimension {
            expected: d,
            got: a.amps.len(),
        });
    }
    let nf = a.n.max(1) as f64;
    let av = DVector::from_vec(a.amps.clone());
    let u = (spec.psi().matrix() * av) / C64::new(nf.sqrt(), 0.0);
    let hu = h.matrix() * &u;
    let quad = u.dotc(&hu).re;
    let quartic: f64 = u.iter().map(|z| z.norm_sqr().powi(2)).sum();
    let mass = a.norm_sqr();
    Ok(Observables {
        mass,
        mass_u: mass / nf,
        hamiltonian: quad + 0.5 * mu * mu * quartic,
    })
}

/// Per-sample seed: SHA-256 of (master seed, sample index).
pub fn sample_seed(master_seed: u64, index: u64) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"wavekin/sample");
    h.update(master_seed.to_le_bytes());
    h.update(index.to_le_bytes());
    h.finalize().into()
}

pub fn sample_rng(master_seed: u64, index: u64) -> ChaCha20Rng {
    ChaCha20Rng::from_seed(sample_seed(master_seed, index))
}

/// Runs `f` on every sample index in parallel, each with its own stream, and
/// returns results in index order. Any failure aborts the run.
pub fn run_ensemble<T, F>(n_samples: usize, master_seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &mut ChaCha20Rng) -> Result<T> + Sync,
{
    let results: Vec<Result<T>> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(master_seed, i as u64);
            f(i, &mut rng)
        })
        .collect();
    results.into_iter().collect()
}

/// Mean and standard error of a set of equally long samples, reduced in index order.
pub fn mean_and_stderr(samples: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = samples.len();
    let len = samples.first().map_or(0, |s| s.len());
    let mut mean = vec![0.0; len];
    for s in samples {
        for (m, x) in mean.iter_mut().zip(s) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut var = vec![0.0; len];
    for s in samples {
        for ((v, x), m) in var.iter_mut().zip(s).zip(&mean) {
            *v += (x - m) * (x - m);
        }
    }
    let se = var
        .iter()
        .map(|v| {
            if n > 1 {
                (v / (n as f64 - 1.0) / n as f64).sqrt()
            } else {
                0.0
            }
        })
        .collect();
    (mean, se)
}

/// Per-k mean and standard error of `|a_k(t)|²` at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleMoment {
    pub t: f64,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub samples: usize,
}

/// Ensemble of fresh GUE draws; bitwise deterministic in (master_seed, n_samples).
pub fn ensemble_expectation(
    cfg: &ModelConfig,
    n_samples: usize,
    master_seed: u64,
    sample_times: &[f64],
) -> Result<Vec<EnsembleMoment>> {
    if n_samples < 2 {
        return Err(Error::Power("ensemble needs at least 2 samples".into()));
    }
    let cfg = cfg.clone().with_sample_times(sample_times.to_vec());
    let cfg = ModelConfig {
        t_end: sample_times.last().copied().unwrap_or(0.0).max(cfg.t_end),
        ..cfg
    };
    cfg.validate()?;
    let a0 = initial_data(&cfg);
    let runs = run_ensemble(n_samples, master_seed, |_, rng| {
        let h = sample_gue(cfg.n, rng);
        let spec = spectral_decompose(&h)?;
        let traj = evolve(&cfg, &spec, &a0)?;
        Ok(traj
            .states
            .iter()
            .map(|s| s.amps.iter().map(|z| z.norm_sqr()).collect::<Vec<f64>>())
            .collect::<Vec<_>>())
    })?;
    Ok(sample_times
        .iter()
        .enumerate()
        .map(|(ti, &t)| {
            let per: Vec<Vec<f64>> = runs.iter().map(|r| r[ti].clone()).collect();
            let (mean, stderr) = mean_and_stderr(&per);
            EnsembleMoment {
                t,
                mean,
                stderr,
                samples: n_samples,
            }
        })
        .collect())
}

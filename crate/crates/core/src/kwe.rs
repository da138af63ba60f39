//! Homogeneous kinetic wave equation on [−1,1] with semicircle dispersion.
//!
//! Densities live on a Gauss–Legendre grid in the angle θ, where
//! `ν(k) = 2 sin θ` and `k = (2θ + sin 2θ)/π`. In that variable ν and the
//! Jacobian `dk = (4/π)cos²θ dθ` are smooth up to the spectral edges, so grid
//! quadrature and interpolation stay high order.
//!
//! The collision integral is evaluated after resolving the delta in n and
//! changing the m variable to `w = ν(k) − ν(ℓ) + ν(m)`:
//! `C[ρ](k) = (1/2π) ∫ dℓ ∫ dw √(4−w²) √(4−(w−c)²) F`, with `c = ν(k) − ν(ℓ)`
//! and F the division-free four-term product.

use crate::dynamics::DataProfile;
use crate::error::{Error, Result};
use crate::quad::{gauss_legendre, GaussRule};
use crate::rmt::{kappa_of_theta, nu};
use rayon::prelude::*;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

/// Angle θ ∈ [−π/2, π/2] of a momentum k ∈ [−1, 1].
pub fn theta_of_k(k: f64) -> Result<f64> {
    Ok((0.5 * nu(k)?).clamp(-1.0, 1.0).asin())
}

/// Node set shared by every density on it.
#[derive(Debug)]
pub struct KineticGrid {
    theta: Vec<f64>,
    k: Vec<f64>,
    nu: Vec<f64>,
    weights: Vec<f64>,
    /// Barycentric weights per stencil width, for every stencil start.
    bary: Mutex<HashMap<usize, Arc<Vec<f64>>>>,
}

impl PartialEq for KineticGrid {
    fn eq(&self, other: &Self) -> bool {
        self.theta == other.theta
    }
}

impl KineticGrid {
    /// `g` Gauss–Legendre nodes in θ.
    pub fn new(g: usize) -> Result<Arc<Self>> {
        if g < 2 {
            return Err(Error::Domain("kinetic grid needs at least 2 nodes".into()));
        }
        let rule = gauss_legendre(g);
        let mut theta = Vec::with_capacity(g);
        let mut weights = Vec::with_capacity(g);
        for (t, w) in rule.mapped(-FRAC_PI_2, FRAC_PI_2) {
            theta.push(t);
            weights.push(w * 4.0 / PI * t.cos().powi(2));
        }
        let k = theta.iter().map(|&t| kappa_of_theta(t)).collect();
        let nu = theta.iter().map(|&t| 2.0 * t.sin()).collect();
        Ok(Arc::new(Self {
            theta,
            k,
            nu,
            weights,
            bary: Mutex::new(HashMap::new()),
        }))
    }

    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn k(&self) -> &[f64] {
        &self.k
    }

    /// ν at the nodes.
    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    /// Quadrature weights for `∫ · dk`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn barycentric(&self, p: usize) -> Arc<Vec<f64>> {
        let mut cache = self.bary.lock().expect("barycentric cache poisoned");
        cache
            .entry(p)
            .or_insert_with(|| {
                let g = self.theta.len();
                let mut out = Vec::with_capacity((g - p + 1) * p);
                for start in 0..=g - p {
                    let xs = &self.theta[start..start + p];
                    for j in 0..p {
                        let prod: f64 = (0..p).filter(|&i| i != j).map(|i| xs[j] - xs[i]).product();
                        out.push(1.0 / prod);
                    }
                }
                Arc::new(out)
            })
            .clone()
    }

    /// Local Lagrange interpolator in θ through `order` neighbouring nodes.
    pub fn interpolant(&self, order: usize) -> Interpolant<'_> {
        let p = order.clamp(2, self.theta.len());
        Interpolant {
            grid: self,
            p,
            weights: self.barycentric(p),
        }
    }

    pub fn interpolate(&self, values: &[f64], theta: f64, order: usize) -> f64 {
        self.interpolant(order).eval(values, theta)
    }
}

/// Barycentric evaluator bound to one grid and stencil width.
pub struct Interpolant<'a> {
    grid: &'a KineticGrid,
    p: usize,
    weights: Arc<Vec<f64>>,
}

impl Interpolant<'_> {
    pub fn eval(&self, values: &[f64], theta: f64) -> f64 {
        let xs = &self.grid.theta;
        let p = self.p;
        let idx = xs.partition_point(|&t| t < theta);
        let start = idx.saturating_sub(p / 2).min(xs.len() - p);
        let w = &self.weights[start * p..(start + 1) * p];
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..p {
            let dx = theta - xs[start + j];
            if dx == 0.0 {
                return values[start + j];
            }
            let c = w[j] / dx;
            num += c * values[start + j];
            den += c;
        }
        num / den
    }
}

/// Nonnegative density sampled on a [`KineticGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDensity {
    pub grid: Arc<KineticGrid>,
    pub values: Vec<f64>,
}

impl SpectralDensity {
    pub fn new(grid: Arc<KineticGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Dimension {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(k)` at the nodes.
    pub fn from_fn(grid: Arc<KineticGrid>, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.k().iter().map(|&k| f(k)).collect();
        Self { grid, values }
    }

    /// `|A(k)|²`.
    pub fn from_profile(grid: Arc<KineticGrid>, profile: &DataProfile) -> Self {
        Self::from_fn(grid, |k| profile.density(k))
    }

    pub fn constant(grid: Arc<KineticGrid>, c: f64) -> Self {
        let values = vec![c; grid.len()];
        Self { grid, values }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// ρ at an arbitrary angle, clamped at zero.
    pub fn at_theta(&self, theta: f64, order: usize) -> f64 {
        self.grid.interpolate(&self.values, theta, order).max(0.0)
    }

    fn check_nonnegative(&self) -> Result<()> {
        if let Some(i) = self.values.iter().position(|v| !(*v >= 0.0)) {
            return Err(Error::Domain(format!(
                "density is negative or NaN at k = {}: {}",
                self.grid.k()[i],
                self.values[i]
            )));
        }
        Ok(())
    }

    /// CSV rows `t,k,rho`.
    pub fn write_csv_rows(&self, t: f64, out: &mut String) {
        for (k, r) in self.grid.k().iter().zip(&self.values) {
            let _ = writeln!(out, "{t:.16e},{k:.16e},{r:.16e}");
        }
    }
}

/// Quadrature settings for the collision integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionConfig {
    /// Gauss–Legendre nodes per panel and per axis.
    pub q: usize,
    /// Outer panels on each side of the diagonal ℓ = k.
    pub outer_panels: usize,
    /// Lagrange stencil width for off-grid evaluation.
    pub interp_order: usize,
}

impl Default for CollisionConfig {
    fn default() -> Self {
        Self {
            q: 32,
            outer_panels: 1,
            interp_order: 12,
        }
    }
}

impl CollisionConfig {
    pub fn with_q(q: usize) -> Self {
        Self {
            q,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.q < 16 {
            return Err(Error::Config(format!("kwe.q = {} must be >= 16", self.q)));
        }
        if self.outer_panels == 0 || self.interp_order < 2 {
            return Err(Error::Config(
                "kwe.outer_panels must be >= 1 and kwe.interp_order >= 2".into(),
            ));
        }
        Ok(())
    }
}

/// `−π/2 + 2 asin(s)`, accurate near the lower edge.
fn edge_angle(s: f64) -> f64 {
    -FRAC_PI_2 + 2.0 * s.clamp(0.0, 1.0).asin()
}

/// `∫ √(4−w²)√(4−(w−c)²) F dw` over the resonant window.
fn inner_integral<R: Fn(f64) -> f64>(c: f64, rk: f64, rl: f64, rho: &R, rule: &GaussRule) -> f64 {
    let f = |tm: f64, tn: f64| -> f64 {
        let rm = rho(tm);
        let rn = rho(tn);
        rl * rm * rn - rk * rm * rn + rk * rl * rn - rk * rl * rm
    };
    let a = c.abs();
    if a >= 4.0 {
        return 0.0;
    }
    if a < 1e-10 {
        // w = 2 sin θ: both roots coincide and the weight is 8cos³θ dθ.
        return rule.integrate(-FRAC_PI_2, FRAC_PI_2, |t| 8.0 * t.cos().powi(3) * f(t, t));
    }
    let lo = (-2.0f64).max(c - 2.0);
    let hi = 2.0f64.min(c + 2.0);
    let vmax = ((hi - lo) / (2.0 * a)).sqrt().asinh();
    let sa = a.sqrt();
    // Near each end, w − end = a sinh²v absorbs both square-root factors.
    let lower = rule.integrate(0.0, vmax, |v| {
        let (sh, ch) = (v.sinh(), v.cosh());
        let w = lo + a * sh * sh;
        let far = ((hi - w) * (hi - w + a)).sqrt();
        let jac = 2.0 * (a * sh * ch).powi(2) * far;
        // Lower end: the root at lo belongs to m when c > 0, to n when c < 0.
        let (tm, tn) = if c > 0.0 {
            (edge_angle(0.5 * sa * sh), edge_angle(0.5 * sa * ch))
        } else {
            (edge_angle(0.5 * sa * ch), edge_angle(0.5 * sa * sh))
        };
        jac * f(tm, tn)
    });
    let upper = rule.integrate(0.0, vmax, |v| {
        let (sh, ch) = (v.sinh(), v.cosh());
        let w = hi - a * sh * sh;
        let far = ((w - lo) * (w - lo + a)).sqrt();
        let jac = 2.0 * (a * sh * ch).powi(2) * far;
        // Upper end: root at hi belongs to n when c > 0, to m when c < 0.
        let (tm, tn) = if c > 0.0 {
            (-edge_angle(0.5 * sa * ch), -edge_angle(0.5 * sa * sh))
        } else {
            (-edge_angle(0.5 * sa * sh), -edge_angle(0.5 * sa * ch))
        };
        jac * f(tm, tn)
    });
    lower + upper
}

/// `C[ρ](k)` at `k = κ(θ_k)` for a density given as a function of θ.
pub fn collision_at_theta<R: Fn(f64) -> f64 + Sync>(theta_k: f64, rho: &R, cc: &CollisionConfig) -> f64 {
    let rule = gauss_legendre(cc.q);
    let nk = 2.0 * theta_k.sin();
    let rk = rho(theta_k);
    let mut total = 0.0;
    for (a, b) in [(-FRAC_PI_2, theta_k), (theta_k, FRAC_PI_2)] {
        if b <= a {
            continue;
        }
        let h = (b - a) / cc.outer_panels as f64;
        for p in 0..cc.outer_panels {
            let lo = a + h * p as f64;
            total += rule.integrate(lo, lo + h, |tl| {
                let c = nk - 2.0 * tl.sin();
                let jac = 4.0 / PI * tl.cos().powi(2);
                jac * inner_integral(c, rk, rho(tl), rho, &rule)
            });
        }
    }
    total / (2.0 * PI)
}

/// `C[ρ](k)` for ρ given as a function of k.
pub fn collision_at_k<R: Fn(f64) -> f64 + Sync>(k: f64, rho_k: &R, cc: &CollisionConfig) -> Result<f64> {
    let th = theta_of_k(k)?;
    Ok(collision_at_theta(th, &|t: f64| rho_k(kappa_of_theta(t)), cc))
}

/// `C[ρ]` at every grid node.
pub fn collision_operator(rho: &SpectralDensity, cc: &CollisionConfig) -> Result<Vec<f64>> {
    cc.validate()?;
    rho.check_nonnegative()?;
    Ok(collision_values(rho, cc))
}

fn collision_values(rho: &SpectralDensity, cc: &CollisionConfig) -> Vec<f64> {
    let interp = rho.grid.interpolant(cc.interp_order);
    let f = |t: f64| interp.eval(&rho.values, t).max(0.0);
    rho.grid
        .theta()
        .par_iter()
        .map(|&tk| collision_at_theta(tk, &f, cc))
        .collect()
}

pub fn mass(rho: &SpectralDensity) -> f64 {
    rho.grid.weights().iter().zip(&rho.values).map(|(w, r)| w * r).sum()
}

/// `∫ ν(k) ρ dk`.
pub fn energy(rho: &SpectralDensity) -> f64 {
    rho.grid
        .weights()
        .iter()
        .zip(rho.grid.nu())
        .zip(&rho.values)
        .map(|((w, n), r)| w * n * r)
        .sum()
}

/// `∫ log ρ dk`; requires ρ > 0.
pub fn entropy(rho: &SpectralDensity) -> Result<f64> {
    if rho.values.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Domain("entropy needs a strictly positive density".into()));
    }
    Ok(rho.grid.weights().iter().zip(&rho.values).map(|(w, r)| w * r.ln()).sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Functionals {
    pub mass: f64,
    pub energy: f64,
    pub entropy: f64,
}

pub fn functionals(rho: &SpectralDensity) -> Result<Functionals> {
    Ok(Functionals {
        mass: mass(rho),
        energy: energy(rho),
        entropy: entropy(rho)?,
    })
}

/// Rayleigh–Jeans profile `α/(β + ν(k))`.
pub fn rayleigh_jeans(alpha: f64, beta: f64, grid: Arc<KineticGrid>) -> Result<SpectralDensity> {
    if !(alpha > 0.0) {
        return Err(Error::Domain("Rayleigh-Jeans alpha must be > 0".into()));
    }
    if !(beta > 2.0) {
        return Err(Error::Domain(format!("Rayleigh-Jeans beta = {beta} must exceed 2")));
    }
    let values = grid.nu().iter().map(|n| alpha / (beta + n)).collect();
    Ok(SpectralDensity { grid, values })
}

/// Pointwise Rayleigh-Jeans profile `α / (β + ν(k))`.
pub fn rayleigh_jeans_value(alpha: f64, beta: f64, k: f64) -> Result<f64> {
    if !(alpha > 0.0) || !(beta > 2.0) {
        return Err(Error::Domain(format!("Rayleigh-Jeans needs alpha > 0, beta > 2 (got {alpha}, {beta})")));
    }
    Ok(alpha / (beta + nu(k)?))
}

/// `ρ(k) + (t/T_kin) C[ρ](k)` with ρ = |A|² and `T_kin = N²/μ⁴`.
pub fn leading_order_prediction(
    profile: &DataProfile,
    t: f64,
    n: usize,
    mu: f64,
    grid: Arc<KineticGrid>,
    cc: &CollisionConfig,
) -> Result<SpectralDensity> {
    if !(t >= 0.0) {
        return Err(Error::Domain("prediction time must be >= 0".into()));
    }
    cc.validate()?;
    let rho = |th: f64| profile.density(kappa_of_theta(th));
    let scale = t / kinetic_time(n, mu);
    let values = grid
        .theta()
        .par_iter()
        .map(|&th| rho(th) + scale * collision_at_theta(th, &rho, cc))
        .collect();
    Ok(SpectralDensity { grid, values })
}

/// `C[|A|²]` at the lattice points `k/N`, evaluated from the profile directly.
pub fn collision_on_lattice(profile: &DataProfile, n: usize, cc: &CollisionConfig) -> Result<Vec<f64>> {
    cc.validate()?;
    let rho = |k: f64| profile.density(k);
    let ks: Vec<f64> = (0..=2 * n).map(|i| (i as f64 - n as f64) / n as f64).collect();
    ks.par_iter().map(|&k| collision_at_k(k, &rho, cc)).collect()
}

/// `T_kin = N²/μ⁴`.
pub fn kinetic_time(n: usize, mu: f64) -> f64 {
    (n as f64).powi(2) / mu.powi(4)
}

/// Time series from [`solve`].
#[derive(Debug, Clone)]
pub struct KineticSolution {
    pub times: Vec<f64>,
    pub states: Vec<SpectralDensity>,
    pub rejected_steps: usize,
}

impl KineticSolution {
    pub fn final_state(&self) -> &SpectralDensity {
        self.states.last().expect("solution has an initial state")
    }

    /// CSV with columns `t,k,rho`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,k,rho\n");
        for (t, st) in self.times.iter().zip(&self.states) {
            st.write_csv_rows(*t, &mut s);
        }
        s
    }
}

/// RK4 in time. A step that drives any node below `−1e−12·max ρ` is rejected
/// and retried with half the step, down to `dt/1024`.
pub fn solve(rho0: &SpectralDensity, t_end: f64, dt: f64, cc: &CollisionConfig) -> Result<KineticSolution> {
    cc.validate()?;
    rho0.check_nonnegative()?;
    if !(dt > 0.0) || !(t_end >= 0.0) {
        return Err(Error::Config("kwe: dt must be > 0 and t_end >= 0".into()));
    }
    let dt_min = dt / 1024.0;
    let mut times = vec![0.0];
    let mut states = vec![rho0.clone()];
    let mut rejected = 0;
    let mut t = 0.0;
    let mut h = dt;
    let mut cur = rho0.clone();
    let add = |a: &SpectralDensity, k: &[f64], s: f64| SpectralDensity {
        grid: a.grid.clone(),
        values: a.values.iter().zip(k).map(|(x, y)| x + s * y).collect(),
    };
    while t < t_end * (1.0 - 1e-14) {
        let step = h.min(t_end - t);
        let k1 = collision_values(&cur, cc);
        let k2 = collision_values(&add(&cur, &k1, 0.5 * step), cc);
        let k3 = collision_values(&add(&cur, &k2, 0.5 * step), cc);
        let k4 = collision_values(&add(&cur, &k3, step), cc);
        let next: Vec<f64> = (0..cur.values.len())
            .map(|i| cur.values[i] + step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect();
        let tol = 1e-12 * cur.max_abs();
        if next.iter().any(|v| !v.is_finite() || *v < -tol) {
            rejected += 1;
            h *= 0.5;
            if h < dt_min {
                return Err(Error::Domain(format!(
                    "kinetic solution stays negative at t = {t} even with dt = {h}"
                )));
            }
            continue;
        }
        t += step;
        cur = SpectralDensity {
            grid: cur.grid.clone(),
            values: next.into_iter().map(|v| v.max(0.0)).collect(),
        };
        times.push(t);
        states.push(cur.clone());
        h = (2.0 * h).min(dt);
    }
    Ok(KineticSolution {
        times,
        states,
        rejected_steps: rejected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_weights_integrate_constants() {
        let g = KineticGrid::new(33).unwrap();
        let one = SpectralDensity::constant(g.clone(), 1.0);
        assert!((mass(&one) - 2.0).abs() < 1e-13);
        assert!(energy(&one).abs() < 1e-13);
        assert!(entropy(&one).unwrap().abs() < 1e-13);
        assert!(g.k().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn interpolation_is_high_order() {
        let g = KineticGrid::new(65).unwrap();
        let vals: Vec<f64> = g.theta().iter().map(|t| (1.3 * t).cos()).collect();
        for &t in &[-1.55, -0.7, 0.01, 1.2, 1.55] {
            assert!((g.interpolate(&vals, t, 8) - (1.3 * t).cos()).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_density_has_no_collisions() {
        let g = KineticGrid::new(17).unwrap();
        let c = collision_operator(&SpectralDensity::constant(g, 0.7), &CollisionConfig::with_q(16)).unwrap();
        assert!(c.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn config_and_domain_errors() {
        assert!(CollisionConfig::with_q(8).validate().is_err());
        let g = KineticGrid::new(9).unwrap();
        let mut r = SpectralDensity::constant(g.clone(), 1.0);
        r.values[3] = -0.1;
        assert!(collision_operator(&r, &CollisionConfig::default()).is_err());
        assert!(rayleigh_jeans(1.0, 2.0, g).is_err());
    }
}

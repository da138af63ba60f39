//! Random-matrix ensembles, spectral decomposition, the semicircle dispersion
//! and eigenvalue-law diagnostics.
//!
//! Lattice convention: a vector indexed by `k ∈ [-N, N]` is stored at
//! position `k + N`. Columns of Ψ are eigenvectors, so `ψ_{jk} = psi[(j, k+N)]`.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::{Read, Write};

/// Hermitian d×d matrix with exact conjugate symmetry.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    entries: DMatrix<C64>,
}

impl HermitianMatrix {
    /// Wraps a matrix, rejecting anything that is not exactly Hermitian.
    pub fn new(entries: DMatrix<C64>) -> Result<Self> {
        let d = entries.nrows();
        if entries.ncols() != d {
            return Err(Error::Dimension {
                expected: d,
                got: entries.ncols(),
            });
        }
        for j in 0..d {
            if entries[(j, j)].im != 0.0 {
                return Err(Error::Domain("diagonal must be real".into()));
            }
            for k in (j + 1)..d {
                if entries[(j, k)] != entries[(k, j)].conj() {
                    return Err(Error::Domain(format!("entry ({j},{k}) breaks symmetry")));
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d = diag.len();
        Self {
            entries: DMatrix::from_fn(d, d, |j, k| if j == k { C64::new(diag[j], 0.0) } else { C64::new(0.0, 0.0) }),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.entries
    }
}

/// Unitary matrix Ψ.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix {
    entries: DMatrix<C64>,
}

impl UnitaryMatrix {
    /// Wraps a matrix after checking `‖Ψ*Ψ − I‖_max ≤ 1e-12·d`.
    pub fn new(entries: DMatrix<C64>) -> Result<Self> {
        let u = Self { entries };
        let err = u.orthonormality_error();
        if err > 1e-12 * u.dim().max(1) as f64 {
            return Err(Error::Domain(format!("columns not orthonormal (error {err:e})")));
        }
        Ok(u)
    }

    pub fn identity(d: usize) -> Self {
        Self {
            entries: DMatrix::identity(d, d),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.entries
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize) -> C64 {
        self.entries[(j, k)]
    }

    pub fn orthonormality_error(&self) -> f64 {
        let g = self.entries.adjoint() * &self.entries;
        let d = self.dim();
        let mut err: f64 = 0.0;
        for j in 0..d {
            for k in 0..d {
                let target = if j == k { 1.0 } else { 0.0 };
                err = err.max((g[(j, k)] - target).norm());
            }
        }
        err
    }
}

/// Sorted eigenvalues λ and eigenvector matrix Ψ of a GUE sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    half_size: usize,
    lambda: Vec<f64>,
    psi: UnitaryMatrix,
}

impl SpectralData {
    /// Builds spectral data from explicit parts; λ must be sorted and match Ψ.
    pub fn new(half_size: usize, lambda: Vec<f64>, psi: UnitaryMatrix) -> Result<Self> {
        let d = 2 * half_size + 1;
        if lambda.len() != d {
            return Err(Error::Dimension {
                expected: d,
                got: lambda.len(),
            });
        }
        if psi.dim() != d {
            return Err(Error::Dimension {
                expected: d,
                got: psi.dim(),
            });
        }
        if lambda.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Domain("eigenvalues must be sorted".into()));
        }
        Ok(Self {
            half_size,
            lambda,
            psi,
        })
    }

    pub fn half_size(&self) -> usize {
        self.half_size
    }

    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn psi(&self) -> &UnitaryMatrix {
        &self.psi
    }

    /// Max-norm reconstruction error `‖ΨΛΨ* − H‖_max`.
    pub fn reconstruction_error(&self, h: &HermitianMatrix) -> f64 {
        let p = self.psi.matrix();
        let mut pl = p.clone();
        for (k, &l) in self.lambda.iter().enumerate() {
            pl.column_mut(k).scale_mut(l);
        }
        let r = pl * p.adjoint() - h.matrix();
        r.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn record(&self) -> SpectralRecord {
        let p = self.psi.matrix();
        let d = self.dim();
        let mut psi = Vec::with_capacity(2 * d * d);
        for j in 0..d {
            for k in 0..d {
                psi.push(p[(j, k)].re);
                psi.push(p[(j, k)].im);
            }
        }
        SpectralRecord {
            half_size: self.half_size,
            dim: d,
            lambda: self.lambda.clone(),
            psi,
        }
    }

    fn from_record(r: SpectralRecord) -> Result<Self> {
        let d = r.dim;
        if d != 2 * r.half_size + 1 || r.psi.len() != 2 * d * d {
            return Err(Error::Domain("inconsistent spectral record".into()));
        }
        let m = DMatrix::from_fn(d, d, |j, k| {
            let i = 2 * (j * d + k);
            C64::new(r.psi[i], r.psi[i + 1])
        });
        Self::new(r.half_size, r.lambda, UnitaryMatrix::new(m)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.record())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_record(serde_json::from_str(s)?)
    }

    /// Binary container: magic `SPEC`, little-endian u64 N and d, d f64 eigenvalues,
    /// then Ψ row-major as interleaved (re, im) f64 pairs.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let r = self.record();
        w.write_all(b"SPEC")?;
        w.write_all(&(r.half_size as u64).to_le_bytes())?;
        w.write_all(&(r.dim as u64).to_le_bytes())?;
        for x in r.lambda.iter().chain(&r.psi) {
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != b"SPEC" {
            return Err(Error::Domain("bad magic in spectral container".into()));
        }
        let mut u = [0u8; 8];
        r.read_exact(&mut u)?;
        let half_size = u64::from_le_bytes(u) as usize;
        r.read_exact(&mut u)?;
        let dim = u64::from_le_bytes(u) as usize;
        if dim != 2 * half_size + 1 {
            return Err(Error::Domain("inconsistent dimensions in spectral container".into()));
        }
        let mut read_f = |n: usize| -> Result<Vec<f64>> {
            (0..n)
                .map(|_| {
                    r.read_exact(&mut u)?;
                    Ok(f64::from_le_bytes(u))
                })
                .collect()
        };
        let lambda = read_f(dim)?;
        let psi = read_f(2 * dim * dim)?;
        Self::from_record(SpectralRecord {
            half_size,
            dim,
            lambda,
            psi,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct SpectralRecord {
    half_size: usize,
    dim: usize,
    lambda: Vec<f64>,
    psi: Vec<f64>,
}

fn complex_normal<R: Rng + ?Sized>(rng: &mut R, var_each: f64) -> C64 {
    let s = var_each.sqrt();
    let x: f64 = rng.sample(StandardNormal);
    let y: f64 = rng.sample(StandardNormal);
    C64::new(s * x, s * y)
}

/// Samples a GUE matrix of dimension d = 2N+1 with `E|h_jk|² = 1/d`.
pub fn sample_gue<R: Rng + ?Sized>(n: usize, rng: &mut R) -> HermitianMatrix {
    let d = 2 * n + 1;
    let df = d as f64;
    let mut m = DMatrix::<C64>::zeros(d, d);
    for j in 0..d {
        let x: f64 = rng.sample(StandardNormal);
        m[(j, j)] = C64::new(x / df.sqrt(), 0.0);
        for k in (j + 1)..d {
            let z = complex_normal(rng, 0.5 / df);
            m[(j, k)] = z;
            m[(k, j)] = z.conj();
        }
    }
    HermitianMatrix { entries: m }
}

/// Samples a Haar unitary via QR of a complex Ginibre matrix with the
/// R-diagonal phase correction.
pub fn sample_haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> UnitaryMatrix {
    let mut z = DMatrix::<C64>::zeros(d, d);
    for j in 0..d {
        for k in 0..d {
            z[(j, k)] = complex_normal(rng, 0.5);
        }
    }
    let qr = z.qr();
    let r = qr.r();
    let mut q = qr.q();
    for k in 0..d {
        let rkk = r[(k, k)];
        let n = rkk.norm();
        let phase = if n > 0.0 { rkk / n } else { C64::new(1.0, 0.0) };
        for j in 0..d {
            q[(j, k)] *= phase;
        }
    }
    UnitaryMatrix { entries: q }
}

/// Eigendecomposition with ascending eigenvalues and the phase convention
/// "largest-magnitude component real positive" (first such index on ties).
pub fn spectral_decompose(h: &HermitianMatrix) -> Result<SpectralData> {
    let d = h.dim();
    if d.is_multiple_of(2) {
        return Err(Error::Domain("dimension must be odd (d = 2N+1)".into()));
    }
    let eig = nalgebra::linalg::SymmetricEigen::try_new(h.matrix().clone(), f64::EPSILON, 0)
        .ok_or(Error::Eigen)?;
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let lambda: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut psi = DMatrix::<C64>::zeros(d, d);
    for (k, &src) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(src);
        let mut best = 0;
        let mut best_abs = -1.0;
        for j in 0..d {
            let a = col[j].norm();
            // small relative slack makes the tie-break backend independent
            if a > best_abs * (1.0 + 1e-12) {
                best_abs = a;
                best = j;
            }
        }
        let phase = col[best].conj() / best_abs;
        for j in 0..d {
            psi[(j, k)] = col[j] * phase;
        }
        psi[(best, k)] = C64::new(psi[(best, k)].norm(), 0.0);
    }
    let spec = SpectralData {
        half_size: d / 2,
        lambda,
        psi: UnitaryMatrix { entries: psi },
    };
    let err = spec.reconstruction_error(h);
    let scale = h.matrix().iter().map(|z| z.norm()).fold(1.0, f64::max);
    if !(err <= 1e-10 * scale) {
        return Err(Error::Eigen);
    }
    Ok(spec)
}

/// Eigenvalues only (ascending); cheaper when Ψ is not needed.
pub fn eigenvalues(h: &HermitianMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = h.matrix().symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Semicircle density `(1/2π)√(4−x²)₊`.
pub fn semicircle_density(x: f64) -> f64 {
    if x.abs() >= 2.0 {
        0.0
    } else {
        (4.0 - x * x).sqrt() / (2.0 * PI)
    }
}

/// `∫_0^x dσ_sc` for |x| ≤ 2, clamped outside.
fn semicircle_from_zero(x: f64) -> f64 {
    let x = x.clamp(-2.0, 2.0);
    ((x / 2.0) * (4.0 - x * x).max(0.0).sqrt() + 2.0 * (x / 2.0).asin()) / (2.0 * PI)
}

/// Semicircle CDF `∫_{-2}^x dσ_sc`.
pub fn semicircle_cdf(x: f64) -> f64 {
    0.5 + semicircle_from_zero(x)
}

/// The dispersion ν: [-1,1] → [-2,2], solving `∫_0^ν dσ_sc = κ/2`.
pub fn nu(kappa: f64) -> Result<f64> {
    if !(kappa.abs() <= 1.0) {
        return Err(Error::Domain(format!("nu: |kappa| = {} > 1", kappa.abs())));
    }
    if kappa == 0.0 {
        return Ok(0.0);
    }
    if kappa.abs() == 1.0 {
        return Ok(2.0 * kappa.signum());
    }
    let target = kappa.abs() / 2.0;
    let (mut lo, mut hi) = (0.0_f64, 2.0_f64);
    let mut x = 2.0 * kappa.abs();
    x = x.clamp(1e-3, 2.0 - 1e-3);
    for _ in 0..200 {
        let g = semicircle_from_zero(x) - target;
        if g.abs() <= 1e-15 {
            break;
        }
        if g > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let slope = semicircle_density(x);
        let newton = x - g / slope;
        x = if slope > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo < 4.0 * f64::EPSILON {
            break;
        }
    }
    Ok(kappa.signum() * x)
}

/// ν′(κ) = π (4 − ν(κ)²)^{-1/2} on (-1, 1).
pub fn nu_prime(kappa: f64) -> Result<f64> {
    if !(kappa.abs() < 1.0) {
        return Err(Error::Domain("nu_prime requires |kappa| < 1".into()));
    }
    let v = nu(kappa)?;
    Ok(PI / (4.0 - v * v).sqrt())
}

/// ν⁻¹(x) = 2∫_0^x dσ_sc in closed form.
pub fn nu_inverse(x: f64) -> Result<f64> {
    if !(x.abs() <= 2.0) {
        return Err(Error::Domain(format!("nu_inverse: |x| = {} > 2", x.abs())));
    }
    Ok(kappa_of_theta((x / 2.0).asin()))
}

/// Angle parametrisation of the lattice: ν = 2 sin θ corresponds to
/// κ = (2θ + sin 2θ)/π.
pub fn kappa_of_theta(theta: f64) -> f64 {
    (2.0 * theta + (2.0 * theta).sin()) / PI
}

/// `dκ/dθ = (4/π) cos² θ`.
pub fn dkappa_dtheta(theta: f64) -> f64 {
    let c = theta.cos();
    4.0 / PI * c * c
}

/// Rigidity residuals `(λ_k − ν(k/N)) · N^{2/3}(N+1−|k|)^{1/3}`.
pub fn rigidity_residuals(spec: &SpectralData) -> Vec<f64> {
    rigidity_residuals_of(spec.half_size(), spec.lambda())
}

/// [`rigidity_residuals`] for a bare sorted spectrum of length `2n+1`.
pub fn rigidity_residuals_of(n: usize, lambda: &[f64]) -> Vec<f64> {
    let nf = n.max(1) as f64;
    lambda
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let k = i as i64 - n as i64;
            let kappa = if n == 0 { 0.0 } else { k as f64 / nf };
            let loc = nu(kappa).expect("k/N lies in [-1, 1]");
            let w = nf.powf(2.0 / 3.0) * ((n as i64 + 1 - k.abs()) as f64).cbrt();
            (l - loc) * w
        })
        .collect()
}

/// Eigenvalue count in [a, b] and the semicircle prediction `(2N+1)∫_I dσ_sc`.
pub fn local_law_count(spec: &SpectralData, a: f64, b: f64) -> Result<(usize, f64)> {
    if a > b {
        return Err(Error::Domain("interval requires a <= b".into()));
    }
    let count = spec.lambda().iter().filter(|&&l| l >= a && l <= b).count();
    let pred = spec.dim() as f64 * (semicircle_cdf(b) - semicircle_cdf(a));
    Ok((count, pred))
}

/// `Σ_k 1/(1/T + |λ_k − α|)`.
pub fn resolvent_sum(spec: &SpectralData, alpha: f64, t: f64) -> Result<f64> {
    resolvent_sum_of(spec.lambda(), alpha, t)
}

/// Same as [`resolvent_sum`] on a bare eigenvalue slice.
pub fn resolvent_sum_of(lambda: &[f64], alpha: f64, t: f64) -> Result<f64> {
    if !(t >= 1.0) {
        return Err(Error::Domain("resolvent_sum requires T >= 1".into()));
    }
    Ok(lambda.iter().map(|&l| 1.0 / (1.0 / t + (l - alpha).abs())).sum())
}

/// L¹ distance between the empirical eigenvalue histogram on `bins` equal bins
/// of [-2,2] and the semicircle bin masses; mass outside [-2,2] counts fully.
pub fn histogram_l1(eigs: &[f64], bins: usize) -> f64 {
    let n = eigs.len() as f64;
    let h = 4.0 / bins as f64;
    let mut counts = vec![0usize; bins];
    let mut outside = 0usize;
    for &x in eigs {
        if !(-2.0..=2.0).contains(&x) {
            outside += 1;
            continue;
        }
        let b = (((x + 2.0) / h) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let mut l1 = outside as f64 / n;
    for (b, &c) in counts.iter().enumerate() {
        let lo = -2.0 + h * b as f64;
        let mass = semicircle_cdf(lo + h) - semicircle_cdf(lo);
        l1 += (c as f64 / n - mass).abs();
    }
    l1
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn gue_is_hermitian_and_n0_is_scalar() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let h = sample_gue(3, &mut rng);
        assert!(HermitianMatrix::new(h.matrix().clone()).is_ok());
        let h0 = sample_gue(0, &mut rng);
        assert_eq!(h0.dim(), 1);
        assert_eq!(h0.matrix()[(0, 0)].im, 0.0);
    }

    #[test]
    fn decompose_sorts_diagonal() {
        let h = HermitianMatrix::from_real_diagonal(&[3.0, 1.0, 2.0]);
        let s = spectral_decompose(&h).unwrap();
        assert_eq!(s.lambda(), &[1.0, 2.0, 3.0]);
        let p = s.psi().matrix();
        assert!((p[(1, 0)].re - 1.0).abs() < 1e-14);
        assert!((p[(2, 1)].re - 1.0).abs() < 1e-14);
        assert!((p[(0, 2)].re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn decompose_identity() {
        let h = HermitianMatrix::from_real_diagonal(&[1.0; 3]);
        let s = spectral_decompose(&h).unwrap();
        assert_eq!(s.lambda(), &[1.0; 3]);
        assert!(s.reconstruction_error(&h) < 1e-14);
    }

    #[test]
    fn nu_endpoints_and_symmetry() {
        assert_eq!(nu(0.0).unwrap(), 0.0);
        assert_eq!(nu(1.0).unwrap(), 2.0);
        assert_eq!(nu(-1.0).unwrap(), -2.0);
        assert!(nu(1.5).is_err());
        for &k in &[0.1, 0.37, 0.9, 0.999] {
            assert_eq!(nu(-k).unwrap(), -nu(k).unwrap());
        }
    }

    #[test]
    fn rigidity_edge_weight_is_one() {
        let n = 5;
        let lambda: Vec<f64> = (-(n as i64)..=n as i64)
            .map(|k| nu(k as f64 / n as f64).unwrap())
            .collect();
        let mut shifted = lambda.clone();
        let s0 = SpectralData::new(n, lambda, UnitaryMatrix::identity(11)).unwrap();
        assert!(rigidity_residuals(&s0).iter().all(|r| *r == 0.0));
        *shifted.last_mut().unwrap() += 1.0;
        let s1 = SpectralData::new(n, shifted, UnitaryMatrix::identity(11)).unwrap();
        let r = rigidity_residuals(&s1);
        assert!((r[10] - (n as f64).powf(2.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn resolvent_single_term() {
        let s = SpectralData::new(0, vec![0.0], UnitaryMatrix::identity(1)).unwrap();
        assert_eq!(resolvent_sum(&s, 0.0, 1.0).unwrap(), 1.0);
        assert!(resolvent_sum(&s, 0.0, 0.5).is_err());
    }

    #[test]
    fn local_law_full_mass() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let s = spectral_decompose(&sample_gue(10, &mut rng)).unwrap();
        let (_, pred) = local_law_count(&s, -2.0, 2.0).unwrap();
        assert!((pred - 21.0).abs() < 1e-12);
        let (c, p) = local_law_count(&s, 2.5, 3.0).unwrap();
        assert_eq!((c, p), (0, 0.0));
    }
}

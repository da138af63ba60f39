use super::graph::{haar_moment_with_cap, WeingartenGraph};
use crate::error::{Error, Result};
use crate::rmt::UnitaryMatrix;
use num_bigint::BigInt;
use num_complex::Complex64 as C64;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// Interaction coefficient
/// `γ(k,l,m,n) = Σ_j ψ̄_{jk}ψ_{jl}ψ̄_{jm}ψ_{jn} − δ_{kl}δ_{mn}/d − δ_{kn}δ_{lm}/d`.
/// Indices are column positions in `0..d`.
pub fn gamma(psi: &UnitaryMatrix, k: usize, l: usize, m: usize, n: usize) -> C64 {
    let d = psi.dim();
    let mut s = C64::new(0.0, 0.0);
    for j in 0..d {
        s += psi.get(j, k).conj() * psi.get(j, l) * psi.get(j, m).conj() * psi.get(j, n);
    }
    let mut c = 0.0;
    if k == l && m == n {
        c += 1.0;
    }
    if k == n && l == m {
        c += 1.0;
    }
    s - c / d as f64
}

/// γ written with its atoms explicitly centered, e.g.
/// `γ(k,k,m,m) = Σ_j (|ψ_{jk}|²−1/d)(|ψ_{jm}|²−1/d)` for k ≠ m.
/// Agrees with [`gamma`] by column orthonormality.
pub fn gamma_uncentered(psi: &UnitaryMatrix, k: usize, l: usize, m: usize, n: usize) -> C64 {
    let d = psi.dim();
    let df = d as f64;
    let a = |j: usize, c: usize| psi.get(j, c).norm_sqr() - 1.0 / df;
    let mut s = C64::new(0.0, 0.0);
    if k == l && l == m && m == n {
        let e4 = 2.0 / (df * (df + 1.0));
        for j in 0..d {
            s += psi.get(j, k).norm_sqr().powi(2) - e4;
        }
        return s - e4;
    }
    for j in 0..d {
        let term = if k == l && m == n {
            C64::new(a(j, k) * a(j, m), 0.0)
        } else if k == n && l == m {
            C64::new(a(j, k) * a(j, l), 0.0)
        } else if k == l {
            psi.get(j, m).conj() * psi.get(j, n) * a(j, k)
        } else if k == n {
            psi.get(j, m).conj() * psi.get(j, l) * a(j, k)
        } else if m == n {
            psi.get(j, k).conj() * psi.get(j, l) * a(j, m)
        } else if m == l {
            psi.get(j, k).conj() * psi.get(j, n) * a(j, m)
        } else {
            psi.get(j, k).conj() * psi.get(j, l) * psi.get(j, m).conj() * psi.get(j, n)
        };
        s += term;
    }
    s
}

/// Column labels for (k, l, m, n); equal labels mean equal indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexPattern(pub [usize; 4]);

impl IndexPattern {
    pub const DISTINCT: IndexPattern = IndexPattern([0, 1, 2, 3]);
}

fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    // restricted growth strings
    fn rec(i: usize, n: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == n {
            out.push(cur.clone());
            return;
        }
        for b in 0..=max + 1 {
            if i == 0 && b > 0 {
                break;
            }
            cur.push(b);
            let nm = if i == 0 { 0 } else { max.max(b) };
            rec(i + 1, n, nm, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        out.push(Vec::new());
        return out;
    }
    rec(0, n, 0, &mut Vec::new(), &mut out);
    out
}

fn binom(n: usize, k: usize) -> BigInt {
    let mut r = BigInt::one();
    for i in 0..k {
        r = r * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    r
}

/// `E[S^a S̄^b]` with `S = Σ_j ψ̄_{jk}ψ_{jl}ψ̄_{jm}ψ_{jn}`, summed over j-assignments
/// grouped by set partition with falling-factorial multiplicities.
fn s_moment(pat: &IndexPattern, a: usize, b: usize, d: usize, cap: usize) -> Result<BigRational> {
    let [k, l, m, n] = pat.0;
    let mut total = BigRational::zero();
    for part in set_partitions(a + b) {
        let blocks = part.iter().max().map_or(0, |x| x + 1);
        if blocks > d {
            continue;
        }
        let mut falling = BigInt::one();
        for i in 0..blocks {
            falling *= BigInt::from(d - i);
        }
        let mut psi = Vec::new();
        let mut psibar = Vec::new();
        for (i, &j) in part.iter().enumerate() {
            if i < a {
                psi.extend([(j, l), (j, n)]);
                psibar.extend([(j, k), (j, m)]);
            } else {
                psi.extend([(j, k), (j, m)]);
                psibar.extend([(j, l), (j, n)]);
            }
        }
        let g = WeingartenGraph::from_factors(psi, psibar);
        let v = haar_moment_with_cap(&g, d, cap)?;
        total += v * BigRational::from_integer(falling);
    }
    Ok(total)
}

/// Exact `E[γ^p γ̄^q]` for the given index pattern.
pub fn gamma_moment_exact(pat: &IndexPattern, p: usize, q: usize, d: usize, cap: usize) -> Result<BigRational> {
    let degree = 2 * (p + q);
    if degree > cap {
        return Err(Error::SizeCap {
            what: "Haar degree 2(p+q)",
            value: degree,
            cap,
        });
    }
    let [k, l, m, n] = pat.0;
    let mut nd = 0i64;
    if k == l && m == n {
        nd += 1;
    }
    if k == n && l == m {
        nd += 1;
    }
    let c = BigRational::new(BigInt::from(nd), BigInt::from(d));
    let neg_c = -c;
    let mut total = BigRational::zero();
    for a in 0..=p {
        for b in 0..=q {
            let e = p - a + q - b;
            if e > 0 && neg_c.is_zero() {
                continue;
            }
            let coef = BigRational::from_integer(binom(p, a) * binom(q, b)) * pow(&neg_c, e);
            total += coef * s_moment(pat, a, b, d, cap)?;
        }
    }
    Ok(total)
}

fn pow(x: &BigRational, e: usize) -> BigRational {
    let mut r = BigRational::one();
    for _ in 0..e {
        r *= x;
    }
    r
}

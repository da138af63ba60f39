use super::perm::{cycle_type_of, CycleType, Permutation};
use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Möbius function: ∏ (−1)^{C−1} Cat(C−1).
pub fn mobius(ct: &CycleType) -> i64 {
    ct.parts()
        .iter()
        .map(|&c| {
            let cat = catalan(c - 1);
            if c % 2 == 0 {
                -cat
            } else {
                cat
            }
        })
        .product()
}

fn catalan(n: usize) -> i64 {
    // (2n)!/(n!(n+1)!) by the multiplicative recurrence
    let mut c: i64 = 1;
    for i in 0..n as i64 {
        c = c * 2 * (2 * i + 1) / (i + 2);
    }
    c
}

/// Leading-order Weingarten value `d^{−2q+C}·Möb`.
pub fn wg_leading(ct: &CycleType, q: usize, d: usize) -> f64 {
    (d as f64).powi(ct.num_cycles() as i32 - 2 * q as i32) * mobius(ct) as f64
}

/// Weingarten values on every conjugacy class of 𝔖_q at dimension d.
#[derive(Debug)]
pub struct WgTable {
    q: usize,
    d: usize,
    values: HashMap<CycleType, BigRational>,
}

impl WgTable {
    pub fn q(&self) -> usize {
        self.q
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn get(&self, ct: &CycleType) -> &BigRational {
        &self.values[ct]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&CycleType, &BigRational)> {
        self.values.iter()
    }
}

/// 𝔖_q with class labels, cached per q.
struct GroupData {
    inverses: Vec<Vec<usize>>,
    cycles: Vec<usize>,
    classes: Vec<CycleType>,
    class_index: HashMap<CycleType, usize>,
}

fn group(q: usize) -> Arc<GroupData> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GroupData>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut g = cache.lock().expect("group cache poisoned");
    g.entry(q)
        .or_insert_with(|| {
            let perms = Permutation::all(q);
            let cycles = perms.iter().map(|p| p.num_cycles()).collect();
            let inverses = perms.iter().map(|p| p.inverse().images().to_vec()).collect();
            let classes = CycleType::all(q);
            let class_index = classes.iter().cloned().enumerate().map(|(i, c)| (c, i)).collect();
            Arc::new(GroupData {
                inverses,
                cycles,
                classes,
                class_index,
            })
        })
        .clone()
}

/// Exact Weingarten table by class-compressed inversion of the Gram matrix
/// `G(σ,τ) = d^{C(στ⁻¹)}`: for every class representative π,
/// `Σ_τ d^{C(τ)} Wg(τ⁻¹π) = δ_{π,id}`.
pub fn wg_table(q: usize, d: usize) -> Result<Arc<WgTable>> {
    if q == 0 || d < q {
        return Err(Error::StableRange { q, d });
    }
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<WgTable>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(t) = cache.lock().expect("wg cache poisoned").get(&(q, d)) {
        return Ok(t.clone());
    }
    let g = group(q);
    let nc = g.classes.len();
    let dpow: Vec<BigInt> = (0..=q).map(|c| BigInt::from(d).pow(c as u32)).collect();
    let mut m = vec![vec![BigInt::zero(); nc]; nc];
    for (mu, ct) in g.classes.iter().enumerate() {
        let pi = ct.representative();
        for (tau_inv, &c) in g.inverses.iter().zip(&g.cycles) {
            let prod: Vec<usize> = pi.images().iter().map(|&i| tau_inv[i]).collect();
            let cls = g.class_index[&cycle_type_of(&prod)];
            m[mu][cls] += &dpow[c];
        }
    }
    let id = g.class_index[&CycleType::identity(q)];
    let mut rhs = vec![BigRational::zero(); nc];
    rhs[id] = BigRational::one();
    let x = solve_rational(m, rhs)?;
    let values = g.classes.iter().cloned().zip(x).collect();
    let table = Arc::new(WgTable { q, d, values });
    cache
        .lock()
        .expect("wg cache poisoned")
        .insert((q, d), table.clone());
    Ok(table)
}

fn solve_rational(m: Vec<Vec<BigInt>>, rhs: Vec<BigRational>) -> Result<Vec<BigRational>> {
    let n = rhs.len();
    let mut a: Vec<Vec<BigRational>> = m
        .into_iter()
        .zip(rhs)
        .map(|(row, r)| {
            let mut v: Vec<BigRational> = row.into_iter().map(BigRational::from_integer).collect();
            v.push(r);
            v
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .find(|&r| !a[r][col].is_zero())
            .ok_or_else(|| Error::Arithmetic("singular Gram matrix".into()))?;
        a.swap(col, piv);
        let p = a[col][col].clone();
        for v in a[col].iter_mut() {
            *v = &*v / &p;
        }
        let pivot_row = a[col].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r == col || row[col].is_zero() {
                continue;
            }
            let f = row[col].clone();
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                *v -= &f * pv;
            }
        }
    }
    Ok(a.into_iter().map(|mut row| row.pop().expect("augmented")).collect())
}

/// Exact `Wg(ω, d)` for ω of the given cycle type in 𝔖_q.
pub fn wg_exact(ct: &CycleType, q: usize, d: usize) -> Result<BigRational> {
    if ct.size() != q {
        return Err(Error::Domain(format!("cycle type {ct} is not a partition of {q}")));
    }
    Ok(wg_table(q, d)?.get(ct).clone())
}

/// Residual of `Wg(∘σ) − Wg(σ)/d + (1/d)Σ_i Wg((i,∘)σ)` for σ of type `ct`.
pub fn one_step_identity_check(ct: &CycleType, q: usize, d: usize) -> Result<BigRational> {
    if ct.size() != q {
        return Err(Error::Domain(format!("cycle type {ct} is not a partition of {q}")));
    }
    if d < q + 1 {
        return Err(Error::StableRange { q: q + 1, d });
    }
    let sigma = ct.representative();
    let ext = sigma.extend_fixed();
    let big = wg_table(q + 1, d)?;
    let dd = BigRational::from_integer(BigInt::from(d));
    let mut res = big.get(&ext.cycle_type()).clone();
    res -= wg_table(q, d)?.get(ct) / &dd;
    for i in 0..q {
        let t = Permutation::transposition(q + 1, i, q);
        let inserted = t.compose(&ext);
        res += big.get(&inserted.cycle_type()) / &dd;
    }
    Ok(res)
}

/// Orthogonality residual `max_{σ,π} |Σ_τ G(σ,τ)Wg(τ⁻¹π) − δ_{σπ}|` over all of 𝔖_q.
/// Quadratic in q!, intended for q ≤ 4.
pub fn orthogonality_residual(q: usize, d: usize) -> Result<BigRational> {
    let t = wg_table(q, d)?;
    let perms = Permutation::all(q);
    let dd = BigInt::from(d);
    let mut worst = BigRational::zero();
    for s in &perms {
        for p in &perms {
            let mut acc = BigRational::zero();
            for tau in &perms {
                let g = dd.pow(s.compose(&tau.inverse()).num_cycles() as u32);
                let w = t.get(&tau.inverse().compose(p).cycle_type());
                acc += w * BigRational::from_integer(g);
            }
            if s == p {
                acc -= BigRational::one();
            }
            if acc.abs() > worst {
                worst = acc.abs();
            }
        }
    }
    Ok(worst)
}

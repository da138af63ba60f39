use super::graph::{enumerate_coverings, haar_moment_with_cap, WeingartenGraph};
use super::perm::CycleType;
use super::wg::wg_table;
use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

fn double_factorial(n: i64) -> BigInt {
    let mut r = BigInt::one();
    let mut k = n;
    while k > 1 {
        r *= BigInt::from(k);
        k -= 2;
    }
    r
}

/// Penalty constant ρ_K(∘^K ω), with `omega` the cycle type left after removing
/// the K atom fixed points.
pub fn rho_penalty(k: usize, omega: &CycleType) -> BigRational {
    if k.is_multiple_of(2) {
        return BigRational::from_integer(double_factorial(k as i64 - 1));
    }
    let kk = (k - 1) / 2;
    let cyc: BigRational = omega
        .parts()
        .iter()
        .map(|&c| {
            let c = c as i64;
            BigRational::new(BigInt::from(4 * c * c - 2 * c), BigInt::from(c + 1))
        })
        .fold(BigRational::zero(), |a, b| a + b);
    let mut sum = BigRational::zero();
    for l in 0..=kk {
        let top = 2 * (kk - l) as i64;
        let ratio = BigRational::new(double_factorial(top - 1), double_factorial(top));
        sum += ratio * (BigRational::from_integer(BigInt::from(4 * l as i64)) + &cyc);
    }
    BigRational::from_integer(double_factorial(2 * kk as i64)) * sum
}

/// Exact centered moment and the penalty-theorem leading-order prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteredMoment {
    pub exact: BigRational,
    pub predicted: BigRational,
}

fn atoms_graph(atoms: &[(usize, usize)]) -> WeingartenGraph {
    WeingartenGraph::from_factors(atoms.to_vec(), atoms.to_vec())
}

/// `E[∏_l (|ψ_{a_l b_l}|² − 1/d) ψ_G]` by inclusion–exclusion, together with
/// `Σ_{(σ,τ)} d^{−2⌊(𝔞+1)/2⌋} ρ_𝔞(στ⁻¹) Wg(στ⁻¹, d)` over coverings of the full product.
pub fn centered_product_moment(
    atoms: &[(usize, usize)],
    g: &WeingartenGraph,
    d: usize,
    cap: usize,
) -> Result<CenteredMoment> {
    let l = atoms.len();
    if !g.is_balanced() {
        return Ok(CenteredMoment {
            exact: BigRational::zero(),
            predicted: BigRational::zero(),
        });
    }
    let degree = l + g.q();
    if degree > cap {
        return Err(Error::SizeCap {
            what: "combined Haar degree",
            value: degree,
            cap,
        });
    }
    if d < degree {
        return Err(Error::StableRange { q: degree, d });
    }
    let inv_d = BigRational::new(BigInt::from(-1), BigInt::from(d));
    let mut exact = BigRational::zero();
    for mask in 0u32..(1 << l) {
        let chosen: Vec<(usize, usize)> = (0..l).filter(|i| mask >> i & 1 == 1).map(|i| atoms[i]).collect();
        let mut coef = BigRational::one();
        for _ in 0..(l - chosen.len()) {
            coef *= &inv_d;
        }
        exact += coef * haar_moment_with_cap(&atoms_graph(&chosen).product(g), d, cap)?;
    }
    let full = atoms_graph(atoms).product(g);
    let mut predicted = BigRational::zero();
    if full.q() > 0 {
        let table = wg_table(full.q(), d)?;
        let dd = BigInt::from(d);
        for c in enumerate_coverings(&full, cap)? {
            let a = (0..l).filter(|&i| c.sigma.apply(i) == i && c.tau.apply(i) == i).count();
            let ct = c.omega().cycle_type();
            let omega = ct.remove_fixed_points(a)?;
            let pen = BigRational::new(BigInt::one(), dd.pow(2 * (a as u32).div_ceil(2)));
            predicted += pen * rho_penalty(a, &omega) * table.get(&ct);
        }
    } else {
        predicted = BigRational::one();
    }
    Ok(CenteredMoment { exact, predicted })
}

/// A product of atoms with a non-centered factor ψ_G.
#[derive(Debug, Clone)]
pub struct PenaltyFixture {
    pub name: &'static str,
    pub atoms: Vec<(usize, usize)>,
    pub graph: WeingartenGraph,
}

/// The small L = 1 and L = 2 cases used to check the penalty theorem.
pub fn penalty_fixtures() -> Vec<PenaltyFixture> {
    let g = WeingartenGraph::from_factors;
    let ab2 = || g(vec![(0, 0)], vec![(0, 0)]);
    let fx = |name, atoms: &[(usize, usize)], graph| PenaltyFixture {
        name,
        atoms: atoms.to_vec(),
        graph,
    };
    vec![
        fx("L1-atom-times-itself", &[(0, 0)], ab2()),
        fx("L1-shared-row", &[(0, 0)], g(vec![(0, 1)], vec![(0, 1)])),
        fx("L1-disjoint", &[(0, 0)], g(vec![(1, 1)], vec![(1, 1)])),
        fx("L1-atom-times-square", &[(0, 0)], g(vec![(0, 0), (0, 0)], vec![(0, 0), (0, 0)])),
        fx("L1-four-cycle", &[(0, 0)], g(vec![(0, 0), (1, 1)], vec![(1, 0), (0, 1)])),
        fx("L2-variance", &[(0, 0), (0, 0)], WeingartenGraph::empty()),
        fx("L2-shared-row", &[(0, 0), (0, 1)], WeingartenGraph::empty()),
        fx("L2-disjoint", &[(0, 0), (1, 1)], WeingartenGraph::empty()),
        fx("L2-repeated-with-entry", &[(0, 0), (0, 0)], ab2()),
        fx("L2-disjoint-with-entry", &[(0, 0), (1, 1)], ab2()),
        fx("L2-four-cycle", &[(0, 0), (1, 1)], g(vec![(0, 1), (1, 0)], vec![(1, 1), (0, 0)])),
    ]
}

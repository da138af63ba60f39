use super::perm::{cycle_type_of, CycleType, Permutation};
use super::wg::wg_table;
use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use std::collections::{BTreeMap, HashMap};

/// Default enumeration cap on the Haar degree q.
pub const DEFAULT_COVERING_CAP: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    /// ψ factor: row (black) → column (white).
    Psi,
    /// ψ̄ factor: column (white) → row (black).
    PsiBar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub kind: EdgeKind,
    pub row: usize,
    pub col: usize,
}

/// Directed bipartite multigraph of a product of ψ and ψ̄ entries.
#[derive(Debug, Clone, PartialEq)]
pub struct WeingartenGraph {
    psi: Vec<(usize, usize)>,
    psibar: Vec<(usize, usize)>,
    row_vertices: Vec<usize>,
    col_vertices: Vec<usize>,
    edges: Vec<Edge>,
}

/// Builds the graph of `∏_l ψ_{rows[l], cols[l]} ∏_l ψ̄_{rows_bar[l], cols_bar[l]}`.
/// Row and column labels live in separate namespaces.
pub fn build_graph(
    rows: &[usize],
    cols: &[usize],
    rows_bar: &[usize],
    cols_bar: &[usize],
) -> Result<WeingartenGraph> {
    if rows.len() != cols.len() {
        return Err(Error::Dimension {
            expected: rows.len(),
            got: cols.len(),
        });
    }
    if rows_bar.len() != cols_bar.len() {
        return Err(Error::Dimension {
            expected: rows_bar.len(),
            got: cols_bar.len(),
        });
    }
    let psi: Vec<_> = rows.iter().copied().zip(cols.iter().copied()).collect();
    let psibar: Vec<_> = rows_bar.iter().copied().zip(cols_bar.iter().copied()).collect();
    Ok(WeingartenGraph::from_factors(psi, psibar))
}

impl WeingartenGraph {
    pub fn from_factors(psi: Vec<(usize, usize)>, psibar: Vec<(usize, usize)>) -> Self {
        let mut row_vertices: Vec<usize> = psi.iter().chain(&psibar).map(|f| f.0).collect();
        let mut col_vertices: Vec<usize> = psi.iter().chain(&psibar).map(|f| f.1).collect();
        row_vertices.sort_unstable();
        row_vertices.dedup();
        col_vertices.sort_unstable();
        col_vertices.dedup();
        let edges = psi
            .iter()
            .map(|&(row, col)| Edge {
                kind: EdgeKind::Psi,
                row,
                col,
            })
            .chain(psibar.iter().map(|&(row, col)| Edge {
                kind: EdgeKind::PsiBar,
                row,
                col,
            }))
            .collect();
        Self {
            psi,
            psibar,
            row_vertices,
            col_vertices,
            edges,
        }
    }

    /// The empty product (expectation 1).
    pub fn empty() -> Self {
        Self::from_factors(Vec::new(), Vec::new())
    }

    /// Product of two expressions; labels are shared.
    pub fn product(&self, other: &WeingartenGraph) -> WeingartenGraph {
        let mut psi = self.psi.clone();
        psi.extend_from_slice(&other.psi);
        let mut psibar = self.psibar.clone();
        psibar.extend_from_slice(&other.psibar);
        Self::from_factors(psi, psibar)
    }

    /// The ψ factors (row, col) in order.
    pub fn psi_factors(&self) -> &[(usize, usize)] {
        &self.psi
    }

    pub fn psibar_factors(&self) -> &[(usize, usize)] {
        &self.psibar
    }

    pub fn row_vertices(&self) -> &[usize] {
        &self.row_vertices
    }

    pub fn col_vertices(&self) -> &[usize] {
        &self.col_vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn is_balanced(&self) -> bool {
        self.psi.len() == self.psibar.len()
    }

    /// Number of ψ factors.
    pub fn q(&self) -> usize {
        self.psi.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.row_vertices.len() + self.col_vertices.len()
    }

    pub fn component_count(&self) -> usize {
        let nr = self.row_vertices.len();
        let idx_r: HashMap<usize, usize> =
            self.row_vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let idx_c: HashMap<usize, usize> =
            self.col_vertices.iter().enumerate().map(|(i, &v)| (v, nr + i)).collect();
        let mut parent: Vec<usize> = (0..self.vertex_count()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for e in &self.edges {
            let a = find(&mut parent, idx_r[&e.row]);
            let b = find(&mut parent, idx_c[&e.col]);
            parent[a] = b;
        }
        (0..parent.len()).filter(|&i| find(&mut parent, i) == i).count()
    }
}

/// Admissible pair: σ pairs equal row labels, τ pairs equal column labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CircuitCovering {
    pub sigma: Permutation,
    pub tau: Permutation,
}

impl CircuitCovering {
    /// `στ⁻¹`, whose cycles are the circuits of the covering.
    pub fn omega(&self) -> Permutation {
        self.sigma.compose(&self.tau.inverse())
    }

    pub fn num_circuits(&self) -> usize {
        self.omega().num_cycles()
    }
}

/// All bijections `l ↦ π(l)` with `a[l] == b[π(l)]`.
fn label_matchings(a: &[usize], b: &[usize]) -> Vec<Vec<usize>> {
    fn rec(l: usize, a: &[usize], b: &[usize], used: &mut [bool], cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if l == a.len() {
            out.push(cur.clone());
            return;
        }
        for r in 0..b.len() {
            if !used[r] && b[r] == a[l] {
                used[r] = true;
                cur.push(r);
                rec(l + 1, a, b, used, cur, out);
                cur.pop();
                used[r] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(0, a, b, &mut vec![false; b.len()], &mut Vec::new(), &mut out);
    out
}

fn check_cap(g: &WeingartenGraph, cap: usize) -> Result<()> {
    if g.q() > cap {
        return Err(Error::SizeCap {
            what: "Haar degree q",
            value: g.q(),
            cap,
        });
    }
    Ok(())
}

type Matchings = (Vec<Vec<usize>>, Vec<Vec<usize>>);

fn matchings(g: &WeingartenGraph) -> Matchings {
    let rows: Vec<usize> = g.psi.iter().map(|f| f.0).collect();
    let cols: Vec<usize> = g.psi.iter().map(|f| f.1).collect();
    let rows_bar: Vec<usize> = g.psibar.iter().map(|f| f.0).collect();
    let cols_bar: Vec<usize> = g.psibar.iter().map(|f| f.1).collect();
    (label_matchings(&rows, &rows_bar), label_matchings(&cols, &cols_bar))
}

/// Exhaustive list of admissible (σ, τ); empty for unbalanced graphs.
pub fn enumerate_coverings(g: &WeingartenGraph, cap: usize) -> Result<Vec<CircuitCovering>> {
    if !g.is_balanced() {
        return Ok(Vec::new());
    }
    check_cap(g, cap)?;
    let (sig, tau) = matchings(g);
    let mut out = Vec::with_capacity(sig.len() * tau.len());
    for s in &sig {
        for t in &tau {
            out.push(CircuitCovering {
                sigma: Permutation::from_images_unchecked(s.clone()),
                tau: Permutation::from_images_unchecked(t.clone()),
            });
        }
    }
    Ok(out)
}

/// Number of admissible pairs per cycle type of `στ⁻¹`, without materialising the list.
pub fn covering_class_counts(g: &WeingartenGraph, cap: usize) -> Result<BTreeMap<CycleType, u64>> {
    let mut counts = BTreeMap::new();
    if !g.is_balanced() {
        return Ok(counts);
    }
    check_cap(g, cap)?;
    let (sig, tau) = matchings(g);
    let tau_inv: Vec<Vec<usize>> = tau
        .iter()
        .map(|t| {
            let mut inv = vec![0; t.len()];
            for (i, &j) in t.iter().enumerate() {
                inv[j] = i;
            }
            inv
        })
        .collect();
    let mut buf = vec![0usize; g.q()];
    for s in &sig {
        for ti in &tau_inv {
            for (b, &x) in buf.iter_mut().zip(ti) {
                *b = s[x];
            }
            *counts.entry(cycle_type_of(&buf)).or_insert(0) += 1;
        }
    }
    Ok(counts)
}

/// Exact `E[ψ_G] = Σ_{(σ,τ)} Wg(στ⁻¹, d)`.
pub fn haar_moment(g: &WeingartenGraph, d: usize) -> Result<BigRational> {
    haar_moment_with_cap(g, d, DEFAULT_COVERING_CAP)
}

pub fn haar_moment_with_cap(g: &WeingartenGraph, d: usize, cap: usize) -> Result<BigRational> {
    if !g.is_balanced() {
        return Ok(BigRational::zero());
    }
    if g.q() == 0 {
        return Ok(BigRational::from_integer(1.into()));
    }
    let counts = covering_class_counts(g, cap)?;
    if counts.is_empty() {
        return Ok(BigRational::zero());
    }
    let table = wg_table(g.q(), d)?;
    let mut acc = BigRational::zero();
    for (ct, n) in counts {
        acc += table.get(&ct) * BigRational::from_integer(BigInt::from(n));
    }
    Ok(acc)
}

/// Named test graphs with q ≤ 4 covering the shapes that occur in gamma moments.
pub fn covering_fixtures() -> Vec<(&'static str, WeingartenGraph)> {
    let g = WeingartenGraph::from_factors;
    vec![
        ("entry-squared", g(vec![(0, 0)], vec![(0, 0)])),
        ("entry-fourth", g(vec![(0, 0), (0, 0)], vec![(0, 0), (0, 0)])),
        ("shared-row", g(vec![(0, 0), (0, 1)], vec![(0, 0), (0, 1)])),
        ("four-cycle", g(vec![(0, 0), (1, 1)], vec![(1, 0), (0, 1)])),
        ("two-loops", g(vec![(0, 0), (1, 1)], vec![(0, 0), (1, 1)])),
        ("unbalanced", g(vec![(0, 0), (0, 0)], vec![(0, 0)])),
        ("entry-sixth", g(vec![(0, 0); 3], vec![(0, 0); 3])),
        ("gamma-klmn", g(vec![(0, 1), (0, 3)], vec![(0, 0), (0, 2)])),
        ("gamma-klmn-abs2", g(vec![(0, 1), (0, 3), (1, 0), (1, 2)], vec![(0, 0), (0, 2), (1, 1), (1, 3)])),
        ("gamma-shared-j", g(vec![(0, 1), (0, 3), (0, 0), (0, 2)], vec![(0, 0), (0, 2), (0, 1), (0, 3)])),
        ("six-cycle", g(vec![(0, 0), (1, 1), (2, 2)], vec![(1, 0), (2, 1), (0, 2)])),
        ("entry-eighth", g(vec![(0, 0); 4], vec![(0, 0); 4])),
        ("ladder", g(vec![(0, 0), (0, 1), (1, 0), (1, 1)], vec![(0, 1), (0, 0), (1, 1), (1, 0)])),
    ]
}

/// Order bound exponent `max(−q, c − V)`.
pub fn graph_order_bound(g: &WeingartenGraph) -> i64 {
    let q = g.q() as i64;
    let cv = g.component_count() as i64 - g.vertex_count() as i64;
    (-q).max(cv)
}

/// Maximum circuit count over coverings containing the 2-circuit formed by
/// ψ factor `l` and ψ̄ factor `r`, paired with the global maximum.
/// `None` when the graph has no covering.
pub fn banana_maxima(g: &WeingartenGraph, l: usize, r: usize, cap: usize) -> Result<Option<(Option<usize>, usize)>> {
    let cov = enumerate_coverings(g, cap)?;
    if cov.is_empty() {
        return Ok(None);
    }
    let mut global = 0;
    let mut with = None;
    for c in &cov {
        let n = c.num_circuits();
        global = global.max(n);
        if c.sigma.apply(l) == r && c.tau.apply(l) == r {
            with = Some(with.map_or(n, |w: usize| w.max(n)));
        }
    }
    Ok(Some((with, global)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn fixture_shapes() {
        let g = build_graph(&[0, 0], &[1, 1], &[0, 0], &[1, 1]).unwrap();
        assert_eq!((g.vertex_count(), g.edges().len()), (2, 4));
        let g = build_graph(&[0, 0], &[0, 1], &[0, 0], &[0, 1]).unwrap();
        assert_eq!((g.vertex_count(), g.edges().len()), (3, 4));
        // ψ_{ik} ψ̄_{jk} ψ_{jl} ψ̄_{il}
        let g = build_graph(&[0, 1], &[0, 1], &[1, 0], &[0, 1]).unwrap();
        assert_eq!((g.vertex_count(), g.component_count()), (4, 1));
        assert_eq!(graph_order_bound(&g), -2);
        let cov = enumerate_coverings(&g, 8).unwrap();
        assert_eq!(cov.len(), 1);
        assert_eq!(cov[0].num_circuits(), 1);
    }

    #[test]
    fn basic_moments() {
        for d in [4usize, 8] {
            let di = d as i64;
            let g = build_graph(&[0], &[0], &[0], &[0]).unwrap();
            assert_eq!(haar_moment(&g, d).unwrap(), r(1, di));
            let g = build_graph(&[0, 0], &[0, 0], &[0, 0], &[0, 0]).unwrap();
            assert_eq!(haar_moment(&g, d).unwrap(), r(2, di * (di + 1)));
            let g = build_graph(&[0, 1], &[0, 1], &[1, 0], &[0, 1]).unwrap();
            assert_eq!(haar_moment(&g, d).unwrap(), r(-1, di * (di * di - 1)));
        }
    }

    #[test]
    fn unbalanced_is_zero() {
        let g = build_graph(&[0, 0], &[0, 0], &[0], &[0]).unwrap();
        assert!(enumerate_coverings(&g, 8).unwrap().is_empty());
        assert!(haar_moment(&g, 4).unwrap().is_zero());
    }

    #[test]
    fn row_normalisation() {
        let d = 5;
        let mut acc = BigRational::zero();
        for l in 0..d {
            let g = build_graph(&[0], &[l], &[0], &[l]).unwrap();
            acc += haar_moment(&g, d).unwrap();
        }
        assert!(acc.is_one());
    }

    #[test]
    fn cap_is_enforced() {
        let g = build_graph(&[0; 9], &[0; 9], &[0; 9], &[0; 9]).unwrap();
        assert!(matches!(enumerate_coverings(&g, 8), Err(Error::SizeCap { .. })));
    }
}

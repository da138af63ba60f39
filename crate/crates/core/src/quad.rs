//! Gauss–Legendre rules and panel helpers shared by the time-domain and
//! collision quadratures.

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64 as C64;
use std::collections::HashMap;
use std::num::NonZeroUsize;
use std::sync::{Arc, Mutex, OnceLock};

/// Gauss–Legendre nodes and weights on [-1, 1], nodes ascending.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (c + h * x, h * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }

    pub fn integrate_c<F: FnMut(f64) -> C64>(&self, a: f64, b: f64, mut f: F) -> C64 {
        self.mapped(a, b).map(|(x, w)| f(x) * w).sum()
    }

    /// Composite rule over `panels` equal panels of [a, b].
    pub fn composite<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, panels: usize, mut f: F) -> f64 {
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|p| {
                let lo = a + h * p as f64;
                self.integrate(lo, lo + h, &mut f)
            })
            .sum()
    }

    pub fn composite_c<F: FnMut(f64) -> C64>(
        &self,
        a: f64,
        b: f64,
        panels: usize,
        mut f: F,
    ) -> C64 {
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|p| {
                let lo = a + h * p as f64;
                self.integrate_c(lo, lo + h, &mut f)
            })
            .sum()
    }

    /// Spectral integration matrix on the reference panel:
    /// `S[i][j] = ∫_{-1}^{x_i} L_j(x) dx` for the Lagrange basis on the nodes.
    pub fn integration_matrix(&self) -> Vec<Vec<f64>> {
        let p = self.len();
        // L_j = Σ_n c_jn P_n with c_jn = w_j P_n(x_j) (2n+1)/2 (exact by discrete orthogonality).
        let pv: Vec<Vec<f64>> = self.nodes.iter().map(|&x| legendre_all(p + 1, x)).collect();
        let mut s = vec![vec![0.0; p]; p];
        for (i, row) in s.iter_mut().enumerate() {
            let pi = &pv[i];
            let x = self.nodes[i];
            // ∫_{-1}^{x} P_n = (P_{n+1} - P_{n-1})/(2n+1), and x + 1 for n = 0.
            let ip: Vec<f64> = (0..p)
                .map(|n| {
                    if n == 0 {
                        x + 1.0
                    } else {
                        (pi[n + 1] - pi[n - 1]) / (2 * n + 1) as f64
                    }
                })
                .collect();
            for (j, sij) in row.iter_mut().enumerate() {
                let w = self.weights[j];
                *sij = (0..p)
                    .map(|n| w * pv[j][n] * (2 * n + 1) as f64 * 0.5 * ip[n])
                    .sum();
            }
        }
        s
    }
}

/// Adaptive bisection driven by the gap between 8- and 16-node Gauss–Legendre
/// estimates on each interval. Returns the integral and the summed error estimate.
pub fn adaptive<F: FnMut(f64) -> f64>(a: f64, b: f64, abs_tol: f64, mut f: F) -> (f64, f64) {
    const MAX_DEPTH: u32 = 40;
    let lo = gauss_legendre(8);
    let hi = gauss_legendre(16);
    let mut total = 0.0;
    let mut err = 0.0;
    let mut stack = vec![(a, b, 0u32)];
    while let Some((x0, x1, depth)) = stack.pop() {
        let coarse = lo.integrate(x0, x1, &mut f);
        let fine = hi.integrate(x0, x1, &mut f);
        let e = (fine - coarse).abs();
        let share = abs_tol * (x1 - x0) / (b - a);
        if e <= share || depth >= MAX_DEPTH {
            total += fine;
            err += e;
        } else {
            let mid = 0.5 * (x0 + x1);
            stack.push((mid, x1, depth + 1));
            stack.push((x0, mid, depth + 1));
        }
    }
    (total, err)
}

/// P_0..P_{n} at x by the three-term recurrence.
fn legendre_all(n: usize, x: f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(n + 1);
    p.push(1.0);
    if n >= 1 {
        p.push(x);
    }
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * p[k] - kf * p[k - 1]) / (kf + 1.0);
        p.push(next);
    }
    p
}

/// Cached Gauss–Legendre rule of the given order.
pub fn gauss_legendre(order: usize) -> Arc<GaussRule> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("quadrature cache poisoned");
    guard
        .entry(order)
        .or_insert_with(|| {
            let n = NonZeroUsize::new(order).expect("quadrature order must be positive");
            let mut pairs: Vec<(f64, f64)> = GaussLegendre::new(n).as_node_weight_pairs().to_vec();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            Arc::new(GaussRule {
                nodes: pairs.iter().map(|p| p.0).collect(),
                weights: pairs.iter().map(|p| p.1).collect(),
            })
        })
        .clone()
}

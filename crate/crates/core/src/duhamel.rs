//! Duhamel iterates of the Wick-ordered system.
//!
//! Histories and diagrams give the combinatorial picture of `a^[m]`. Values
//! are computed in the time domain on the interaction-picture profile
//! `f = e^{itΛ}a`, order by order, with panel Gauss–Legendre integration.
//! Closed forms for orders 1 and 2 serve as an independent check.

use crate::dynamics::{initial_data, ModelConfig, StateVector};
use crate::error::{Error, Result};
use crate::quad::gauss_legendre;
use crate::rmt::SpectralData;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Largest order accepted by [`enumerate_histories`].
pub const MAX_HISTORY_ORDER: usize = 4;
/// Largest order accepted by [`iterate`].
pub const MAX_ITERATE_ORDER: usize = 3;
/// Largest N accepted by [`closed_form_low_order`].
pub const MAX_CLOSED_FORM_N: usize = 16;
/// `|ω|t` below which the time integrals switch to their Taylor series.
pub const SERIES_THRESHOLD: f64 = 1e-4;

const I: C64 = C64 { re: 0.0, im: 1.0 };
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// `ℓ = (ℓ_1..ℓ_m)` with `ℓ_r ∈ [1, 2(m−r)+1]` (1-based).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InteractionHistory {
    ell: Vec<usize>,
}

impl InteractionHistory {
    pub fn new(ell: Vec<usize>) -> Result<Self> {
        let m = ell.len();
        if m == 0 {
            return Err(Error::Domain("interaction history needs m >= 1".into()));
        }
        for (i, &l) in ell.iter().enumerate() {
            let r = i + 1;
            if l < 1 || l > 2 * (m - r) + 1 {
                return Err(Error::Domain(format!(
                    "ell_{r} = {l} outside [1, {}]",
                    2 * (m - r) + 1
                )));
            }
        }
        Ok(Self { ell })
    }

    pub fn order(&self) -> usize {
        self.ell.len()
    }

    pub fn ell(&self) -> &[usize] {
        &self.ell
    }
}

/// Every history of order m, lexicographic in `(ℓ_1, .., ℓ_m)`.
pub fn enumerate_histories(m: usize) -> Result<Vec<InteractionHistory>> {
    if m == 0 {
        return Err(Error::Domain("history order must be >= 1".into()));
    }
    if m > MAX_HISTORY_ORDER {
        return Err(Error::SizeCap {
            what: "history order",
            value: m,
            cap: MAX_HISTORY_ORDER,
        });
    }
    let ranges: Vec<usize> = (1..=m).map(|r| 2 * (m - r) + 1).collect();
    let mut out = Vec::new();
    let mut cur = vec![1usize; m];
    loop {
        out.push(InteractionHistory { ell: cur.clone() });
        let mut i = m;
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            if cur[i] < ranges[i] {
                cur[i] += 1;
                for c in cur.iter_mut().skip(i + 1) {
                    *c = 1;
                }
                break;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VertexRole {
    Input,
    Linear,
    Nonlinear,
    Output,
}

/// Vertex `v_{r,j}` (j is 1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vertex {
    pub r: usize,
    pub j: usize,
    pub role: VertexRole,
}

/// Edge `e_{r,j}` joining two entries of the vertex list. Even `j` carries a
/// conjugated wave.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagramEdge {
    pub r: usize,
    pub j: usize,
    pub from: usize,
    pub to: usize,
    pub conjugated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeynmanDiagram {
    pub history: InteractionHistory,
    pub vertices: Vec<Vertex>,
    pub edges: Vec<DiagramEdge>,
}

impl FeynmanDiagram {
    pub fn order(&self) -> usize {
        self.history.order()
    }

    pub fn vertex_index(&self, r: usize, j: usize) -> Option<usize> {
        self.vertices.iter().position(|v| v.r == r && v.j == j)
    }

    pub fn count(&self, role: VertexRole) -> usize {
        self.vertices.iter().filter(|v| v.role == role).count()
    }

    /// Edges entering vertex `idx`, ordered by j.
    pub fn incoming(&self, idx: usize) -> Vec<&DiagramEdge> {
        self.edges.iter().filter(|e| e.to == idx).collect()
    }

    /// Graphviz rendering, time running upward.
    pub fn to_dot(&self) -> String {
        let mut s = String::new();
        let name = self
            .history
            .ell()
            .iter()
            .map(|l| l.to_string())
            .collect::<Vec<_>>()
            .join("_");
        let _ = writeln!(s, "digraph history_{name} {{");
        let _ = writeln!(s, "  rankdir=BT;");
        for v in &self.vertices {
            let shape = match v.role {
                VertexRole::Input => "circle, style=filled, fillcolor=white",
                VertexRole::Linear => "point",
                VertexRole::Nonlinear => "circle, style=filled, fillcolor=black, width=0.15",
                VertexRole::Output => "doublecircle, width=0.15",
            };
            let _ = writeln!(
                s,
                "  v{}_{} [label=\"\", xlabel=\"v{},{}\", shape={shape}];",
                v.r, v.j, v.r, v.j
            );
        }
        for e in &self.edges {
            let a = self.vertices[e.from];
            let b = self.vertices[e.to];
            let style = if e.conjugated { ", style=dashed" } else { "" };
            let _ = writeln!(
                s,
                "  v{}_{} -> v{}_{} [label=\"e{},{}\"{style}];",
                a.r, a.j, b.r, b.j, e.r, e.j
            );
        }
        for r in 0..=self.order() + 1 {
            let ids: Vec<String> = self
                .vertices
                .iter()
                .filter(|v| v.r == r)
                .map(|v| format!("v{}_{}", v.r, v.j))
                .collect();
            let _ = writeln!(s, "  {{ rank=same; {} }}", ids.join("; "));
        }
        s.push_str("}\n");
        s
    }
}

/// Builds the diagram of a history using the row-by-row edge map.
pub fn build_diagram(h: &InteractionHistory) -> FeynmanDiagram {
    let m = h.order();
    let ell = h.ell();
    let width = |r: usize| 2 * (m - r) + 1;
    let mut vertices = Vec::with_capacity((m + 1) * (m + 1) + 1);
    for r in 0..=m {
        for j in 1..=width(r) {
            let role = if r == 0 {
                VertexRole::Input
            } else if j == ell[r - 1] {
                VertexRole::Nonlinear
            } else {
                VertexRole::Linear
            };
            vertices.push(Vertex { r, j, role });
        }
    }
    vertices.push(Vertex {
        r: m + 1,
        j: 1,
        role: VertexRole::Output,
    });
    // Row r occupies a contiguous block starting at Σ_{q<r} width(q).
    let offset = |r: usize| -> usize { (0..r).map(width).sum() };
    let mut edges = Vec::with_capacity((m + 1) * (m + 1));
    for r in 0..m {
        let l = ell[r];
        for j in 1..=width(r) {
            let tj = if j < l {
                j
            } else if j <= l + 2 {
                l
            } else {
                j - 2
            };
            edges.push(DiagramEdge {
                r,
                j,
                from: offset(r) + j - 1,
                to: offset(r + 1) + tj - 1,
                conjugated: j % 2 == 0,
            });
        }
    }
    edges.push(DiagramEdge {
        r: m,
        j: 1,
        from: offset(m),
        to: vertices.len() - 1,
        conjugated: false,
    });
    FeynmanDiagram {
        history: h.clone(),
        vertices,
        edges,
    }
}

/// Cached iterates: `values[m][i] = a^[m](times[i])`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterateSet {
    pub order: usize,
    pub times: Vec<f64>,
    pub values: Vec<Vec<StateVector>>,
    /// Panels per unit time after refinement.
    pub panels_per_unit: f64,
}

impl IterateSet {
    /// `Σ_{m ≤ upto} a^[m](times[i])`.
    pub fn partial_sum(&self, i: usize, upto: usize) -> StateVector {
        let mut acc = self.values[0][i].clone();
        for m in 1..=upto.min(self.order) {
            for (a, b) in acc.amps.iter_mut().zip(&self.values[m][i].amps) {
                *a += b;
            }
        }
        acc
    }

    /// CSV rows `t,k,m,re,im`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,k,m,re,im\n");
        for (m, per_t) in self.values.iter().enumerate() {
            for (t, st) in self.times.iter().zip(per_t) {
                let n = st.n as i64;
                for (i, z) in st.amps.iter().enumerate() {
                    let _ = writeln!(s, "{t:.16e},{},{m},{:.16e},{:.16e}", i as i64 - n, z.re, z.im);
                }
            }
        }
        s
    }
}

/// Tuning for [`iterate_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterateOptions {
    /// Initial panel length.
    pub panel_len: f64,
    /// Gauss–Legendre nodes per panel.
    pub nodes: usize,
    /// Relative change between successive refinements that counts as converged.
    pub rel_tol: f64,
    pub max_refinements: usize,
}

impl Default for IterateOptions {
    fn default() -> Self {
        Self {
            panel_len: 1.0,
            nodes: 16,
            rel_tol: 1e-8,
            max_refinements: 8,
        }
    }
}

struct Backbone {
    d: usize,
    coupling: f64,
    lambda: Vec<f64>,
    psi: DMatrix<C64>,
    psi_adj: DMatrix<C64>,
}

impl Backbone {
    fn new(spec: &SpectralData, mu: f64) -> Self {
        let psi = spec.psi().matrix().clone();
        Self {
            d: spec.dim(),
            coupling: mu * mu / spec.half_size().max(1) as f64,
            lambda: spec.lambda().to_vec(),
            psi_adj: psi.adjoint(),
            psi,
        }
    }

    fn phase(&self, v: &DVector<C64>, t: f64, sign: f64) -> DVector<C64> {
        DVector::from_iterator(
            self.d,
            v.iter()
                .zip(&self.lambda)
                .map(|(z, &l)| z * C64::from_polar(1.0, sign * l * t)),
        )
    }

    /// `Σ_{m1+m2+m3=m} Q(a^[m1], a^[m2], a^[m3])` from the mode vectors and
    /// their images `u = Ψa`.
    fn composed_nonlinearity(&self, m: usize, a: &[DVector<C64>], u: &[DVector<C64>]) -> DVector<C64> {
        let d = self.d;
        let inv_d = 1.0 / d as f64;
        let mut pointwise = DVector::from_element(d, ZERO);
        let mut corr = DVector::from_element(d, ZERO);
        for m1 in 0..=m {
            for m2 in 0..=m - m1 {
                let m3 = m - m1 - m2;
                for j in 0..d {
                    pointwise[j] += u[m1][j] * u[m2][j].conj() * u[m3][j];
                }
                let bc = a[m2].dotc(&a[m3]);
                let ba = a[m2].dotc(&a[m1]);
                corr += &a[m1] * bc + &a[m3] * ba;
            }
        }
        let mut out = &self.psi_adj * pointwise;
        out -= corr * C64::new(inv_d, 0.0);
        out * C64::new(self.coupling, 0.0)
    }
}

/// `a^[0..=M]` at `t_grid` with default tolerances.
pub fn iterate(spec: &SpectralData, cfg: &ModelConfig, m_max: usize, t_grid: &[f64]) -> Result<IterateSet> {
    iterate_with(spec, cfg, m_max, t_grid, IterateOptions::default())
}

pub fn iterate_with(
    spec: &SpectralData,
    cfg: &ModelConfig,
    m_max: usize,
    t_grid: &[f64],
    opts: IterateOptions,
) -> Result<IterateSet> {
    if spec.half_size() != cfg.n {
        return Err(Error::Dimension {
            expected: cfg.dim(),
            got: spec.dim(),
        });
    }
    if t_grid.last().is_some_and(|&t| t > cfg.t_end * (1.0 + 1e-12)) {
        return Err(Error::Domain("t_grid exceeds the configured t_end".into()));
    }
    iterate_from(spec, cfg.mu, &initial_data(cfg), m_max, t_grid, opts)
}

/// Iterates for explicit data `a(0)` and coupling μ.
pub fn iterate_from(
    spec: &SpectralData,
    mu: f64,
    a0: &StateVector,
    m_max: usize,
    t_grid: &[f64],
    opts: IterateOptions,
) -> Result<IterateSet> {
    if m_max > MAX_ITERATE_ORDER {
        return Err(Error::SizeCap {
            what: "iterate order",
            value: m_max,
            cap: MAX_ITERATE_ORDER,
        });
    }
    if a0.amps.len() != spec.dim() {
        return Err(Error::Dimension {
            expected: spec.dim(),
            got: a0.amps.len(),
        });
    }
    if t_grid.is_empty() || t_grid.windows(2).any(|w| w[0] >= w[1]) || t_grid[0] < 0.0 {
        return Err(Error::Domain(
            "t_grid must be nonempty, strictly increasing and >= 0".into(),
        ));
    }
    let n = spec.half_size();
    let bb = Backbone::new(spec, mu);
    let a0 = DVector::from_vec(a0.amps.clone());
    let mut prev = iterate_level(&bb, &a0, m_max, t_grid, opts.panel_len, opts.nodes);
    let mut per_unit = 1.0 / opts.panel_len;
    for _ in 0..opts.max_refinements {
        per_unit *= 2.0;
        let next = iterate_level(&bb, &a0, m_max, t_grid, 1.0 / per_unit, opts.nodes);
        let mut worst: f64 = 0.0;
        for (pm, nm) in prev.iter().zip(&next) {
            for (p, q) in pm.iter().zip(nm) {
                let diff = (p - q).norm();
                let scale = q.norm();
                if diff > 0.0 {
                    worst = worst.max(if scale > 0.0 { diff / scale } else { f64::INFINITY });
                }
            }
        }
        prev = next;
        if worst <= opts.rel_tol {
            return Ok(package(n, m_max, t_grid, prev, &bb, per_unit));
        }
    }
    Err(Error::Quadrature(format!(
        "Duhamel iterates did not converge to {} after {} refinements",
        opts.rel_tol, opts.max_refinements
    )))
}

fn package(
    n: usize,
    m_max: usize,
    t_grid: &[f64],
    profiles: Vec<Vec<DVector<C64>>>,
    bb: &Backbone,
    per_unit: f64,
) -> IterateSet {
    let values = profiles
        .into_iter()
        .map(|per_t| {
            per_t
                .iter()
                .zip(t_grid)
                .map(|(f, &t)| StateVector {
                    n,
                    amps: bb.phase(f, t, -1.0).iter().copied().collect(),
                })
                .collect()
        })
        .collect();
    IterateSet {
        order: m_max,
        times: t_grid.to_vec(),
        values,
        panels_per_unit: per_unit,
    }
}

/// Profiles `f^[m]` at the grid times for one panel resolution.
fn iterate_level(
    bb: &Backbone,
    a0: &DVector<C64>,
    m_max: usize,
    t_grid: &[f64],
    panel_len: f64,
    nodes: usize,
) -> Vec<Vec<DVector<C64>>> {
    let rule = gauss_legendre(nodes);
    let smat = rule.integration_matrix();
    let p = rule.len();
    // Panels: each gap between consecutive grid points is split evenly.
    let mut panels: Vec<(f64, f64)> = Vec::new();
    let mut grid_panel_end: Vec<usize> = Vec::with_capacity(t_grid.len());
    let mut lo = 0.0;
    for &t in t_grid {
        let len = t - lo;
        if len > 0.0 {
            let k = (len / panel_len).ceil().max(1.0) as usize;
            let h = len / k as f64;
            for i in 0..k {
                panels.push((lo + h * i as f64, lo + h * (i + 1) as f64));
            }
        }
        grid_panel_end.push(panels.len());
        lo = t;
    }
    let times: Vec<f64> = panels
        .iter()
        .flat_map(|&(a, b)| rule.nodes.iter().map(move |&x| 0.5 * (a + b) + 0.5 * (b - a) * x))
        .collect();
    let n_nodes = times.len();

    // Mode vectors a^[j](s) and u^[j](s) = Ψ a^[j](s) at every node.
    let mut a_nodes: Vec<Vec<DVector<C64>>> = vec![(0..n_nodes).map(|i| bb.phase(a0, times[i], -1.0)).collect()];
    let mut u_nodes: Vec<Vec<DVector<C64>>> = vec![a_nodes[0].iter().map(|a| &bb.psi * a).collect()];
    let mut out: Vec<Vec<DVector<C64>>> = vec![vec![a0.clone(); t_grid.len()]];

    for m in 0..m_max {
        // Integrand g(s) = −i e^{isΛ} Σ Q(...)(s).
        let g: Vec<DVector<C64>> = (0..n_nodes)
            .map(|i| {
                let a: Vec<DVector<C64>> = a_nodes.iter().map(|v| v[i].clone()).collect();
                let u: Vec<DVector<C64>> = u_nodes.iter().map(|v| v[i].clone()).collect();
                let w = bb.composed_nonlinearity(m, &a, &u);
                bb.phase(&w, times[i], 1.0) * (-I)
            })
            .collect();
        let mut f_nodes = vec![DVector::from_element(bb.d, ZERO); n_nodes];
        let mut panel_start = vec![DVector::from_element(bb.d, ZERO); panels.len() + 1];
        for (pi, &(a, b)) in panels.iter().enumerate() {
            let half = 0.5 * (b - a);
            let base = pi * p;
            for i in 0..p {
                let mut acc = panel_start[pi].clone();
                for (j, sij) in smat[i].iter().enumerate() {
                    acc += &g[base + j] * C64::new(half * sij, 0.0);
                }
                f_nodes[base + i] = acc;
            }
            let mut end = panel_start[pi].clone();
            for (j, w) in rule.weights.iter().enumerate() {
                end += &g[base + j] * C64::new(half * w, 0.0);
            }
            panel_start[pi + 1] = end;
        }
        out.push(grid_panel_end.iter().map(|&e| panel_start[e].clone()).collect());
        if m + 1 < m_max {
            let a_next: Vec<DVector<C64>> = (0..n_nodes).map(|i| bb.phase(&f_nodes[i], times[i], -1.0)).collect();
            u_nodes.push(a_next.iter().map(|a| &bb.psi * a).collect());
            a_nodes.push(a_next);
        }
    }
    out
}

/// `∫₀ᵗ e^{isw} ds` by its Taylor series (valid for small |w|t).
pub fn phase_integral_series(w: f64, t: f64) -> C64 {
    let z = I * (w * t);
    C64::new(t, 0.0) * (1.0 + z * (0.5 + z * (1.0 / 6.0 + z * (1.0 / 24.0 + z / 120.0))))
}

/// `(e^{itw} − 1)/(iw)`.
pub fn phase_integral_exact(w: f64, t: f64) -> C64 {
    (C64::from_polar(1.0, w * t) - 1.0) / (I * w)
}

/// `∫₀ᵗ e^{isw} ds` with the removable singularity at w = 0 handled.
pub fn phase_integral(w: f64, t: f64) -> C64 {
    if (w * t).abs() < SERIES_THRESHOLD {
        phase_integral_series(w, t)
    } else {
        phase_integral_exact(w, t)
    }
}

/// `K_p(x) = ∫₀ᵗ s^p e^{isx} ds` for p = 0..=pmax.
fn moment_integrals(x: f64, t: f64, pmax: usize) -> Vec<C64> {
    if (x * t).abs() <= 2.0 {
        (0..=pmax)
            .map(|p| {
                let mut acc = ZERO;
                let mut term = C64::new(t.powi(p as i32 + 1), 0.0);
                for j in 0..40 {
                    acc += term / (p + j + 1) as f64;
                    term *= I * (x * t) / (j + 1) as f64;
                }
                acc
            })
            .collect()
    } else {
        let e = C64::from_polar(1.0, x * t);
        let mut k = vec![phase_integral_exact(x, t)];
        for p in 1..=pmax {
            let v = (e * t.powi(p as i32) - k[p - 1] * p as f64) / (I * x);
            k.push(v);
        }
        k
    }
}

/// `∫₀ᵗ ∫₀ˢ e^{isx} e^{iσy} dσ ds`.
pub fn double_phase_integral(x: f64, y: f64, t: f64) -> C64 {
    if (y * t).abs() < SERIES_THRESHOLD {
        // Inner integral as a series in y: Σ_n (iy)^n s^{n+1}/(n+1)!.
        let k = moment_integrals(x, t, 4);
        let mut acc = ZERO;
        let mut c = C64::new(1.0, 0.0);
        let mut fact = 1.0;
        for n in 0..4 {
            fact *= (n + 1) as f64;
            acc += c * k[n + 1] / fact;
            c *= I * y;
        }
        acc
    } else {
        (phase_integral(x + y, t) - phase_integral(x, t)) / (I * y)
    }
}

/// Dense γ(k,ℓ,m,n), index `((k·d+ℓ)·d+m)·d+n`.
pub fn gamma_tensor(spec: &SpectralData) -> Vec<C64> {
    let d = spec.dim();
    let psi = spec.psi().matrix();
    let mut g = vec![ZERO; d * d * d * d];
    for j in 0..d {
        let row: Vec<C64> = (0..d).map(|k| psi[(j, k)]).collect();
        for k in 0..d {
            let ck = row[k].conj();
            for l in 0..d {
                let ckl = ck * row[l];
                for m in 0..d {
                    let cklm = ckl * row[m].conj();
                    let base = ((k * d + l) * d + m) * d;
                    for n in 0..d {
                        g[base + n] += cklm * row[n];
                    }
                }
            }
        }
    }
    let inv = 1.0 / d as f64;
    for k in 0..d {
        for m in 0..d {
            // k = ℓ, m = n
            g[((k * d + k) * d + m) * d + m] -= inv;
            // k = n, ℓ = m
            g[((k * d + m) * d + m) * d + k] -= inv;
        }
    }
    g
}

/// `a^[1](t)` and `a^[2](t)` from the explicit sums with analytic time
/// integrals. The second order is a six-fold sum per output mode, so this is
/// only practical for small N.
pub fn closed_form_low_order(spec: &SpectralData, cfg: &ModelConfig, t: f64) -> Result<(StateVector, StateVector)> {
    let n = cfg.n;
    if n > MAX_CLOSED_FORM_N {
        return Err(Error::SizeCap {
            what: "closed-form N",
            value: n,
            cap: MAX_CLOSED_FORM_N,
        });
    }
    if spec.half_size() != n {
        return Err(Error::Dimension {
            expected: cfg.dim(),
            got: spec.dim(),
        });
    }
    let d = spec.dim();
    let lam = spec.lambda();
    let a = initial_data(cfg).amps;
    let c = cfg.mu * cfg.mu / n.max(1) as f64;
    let g = gamma_tensor(spec);
    let idx = |k: usize, l: usize, m: usize, nn: usize| ((k * d + l) * d + m) * d + nn;
    let omega = |k: usize, l: usize, m: usize, nn: usize| lam[k] - lam[l] + lam[m] - lam[nn];

    // Inner contractions per mode: (Ω, weight) for the unconjugated and
    // conjugated insertions.
    let mut inner_plain: Vec<Vec<(f64, C64)>> = Vec::with_capacity(d);
    let mut inner_conj: Vec<Vec<(f64, C64)>> = Vec::with_capacity(d);
    for l in 0..d {
        let mut p = Vec::with_capacity(d * d * d);
        let mut q = Vec::with_capacity(d * d * d);
        for o in 0..d {
            for pp in 0..d {
                for qq in 0..d {
                    let w = omega(l, o, pp, qq);
                    let gam = g[idx(l, o, pp, qq)];
                    p.push((w, gam * a[o] * a[pp].conj() * a[qq]));
                    q.push((-w, gam.conj() * a[o].conj() * a[pp] * a[qq].conj()));
                }
            }
        }
        inner_plain.push(p);
        inner_conj.push(q);
    }

    let mut f1 = vec![ZERO; d];
    let mut f2 = vec![ZERO; d];
    for k in 0..d {
        for l in 0..d {
            for m in 0..d {
                for nn in 0..d {
                    let gam = g[idx(k, l, m, nn)];
                    let x = omega(k, l, m, nn);
                    f1[k] += phase_integral(x, t) * gam * a[l] * a[m].conj() * a[nn];
                    let mut s_plain = ZERO;
                    for &(y, w) in &inner_plain[l] {
                        s_plain += double_phase_integral(x, y, t) * w;
                    }
                    let mut s_conj = ZERO;
                    for &(y, w) in &inner_conj[m] {
                        s_conj += double_phase_integral(x, y, t) * w;
                    }
                    f2[k] += gam * (a[m].conj() * a[nn] * s_plain * (-2.0) + a[l] * a[nn] * s_conj);
                }
            }
        }
    }
    let to_a = |f: Vec<C64>, scale: C64| -> StateVector {
        StateVector {
            n,
            amps: f
                .iter()
                .zip(lam)
                .map(|(z, &l)| z * scale * C64::from_polar(1.0, -l * t))
                .collect(),
        }
    };
    Ok((to_a(f1, -I * c), to_a(f2, C64::new(c * c, 0.0))))
}

/// Both sides of the simplex/contour identity for the modulations `ω_0..ω_m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolventCheck {
    pub lhs: C64,
    pub rhs: C64,
    pub residual: f64,
}

/// Largest m+1 accepted by [`resolvent_identity_check`].
pub const MAX_RESOLVENT_FACTORS: usize = 5;

/// Compares the time-simplex integral `∫ ∏ e^{is_r ω_r} δ(Σs − t) ds` with
/// `(e^{t/T}/2π) i^{m+1} ∫ ∏ (α + ω_r + i/T)⁻¹ e^{−iαt} dα`.
pub fn resolvent_identity_check(omegas: &[f64], t: f64, big_t: f64) -> Result<ResolventCheck> {
    if omegas.is_empty() || omegas.len() > MAX_RESOLVENT_FACTORS {
        return Err(Error::Domain(format!(
            "need 1..={MAX_RESOLVENT_FACTORS} modulations, got {}",
            omegas.len()
        )));
    }
    if !(big_t > 0.0) {
        return Err(Error::Domain("T must be > 0".into()));
    }
    if t == 0.0 || !t.is_finite() {
        return Err(Error::Domain("t must be finite and nonzero".into()));
    }
    let lhs = if t < 0.0 { ZERO } else { simplex_integral(omegas, t) };
    let rhs = contour_integral(omegas, t, big_t);
    Ok(ResolventCheck {
        lhs,
        rhs,
        residual: (lhs - rhs).norm(),
    })
}

fn simplex_integral(omegas: &[f64], t: f64) -> C64 {
    if omegas.len() == 1 {
        return C64::from_polar(1.0, omegas[0] * t);
    }
    if t <= 0.0 {
        return ZERO;
    }
    let rule = gauss_legendre(24);
    let wmax = omegas.iter().fold(0.0f64, |m, w| m.max(w.abs()));
    let panels = ((wmax * t) / 4.0).ceil().max(1.0) as usize;
    rule.composite_c(0.0, t, panels, |s| {
        C64::from_polar(1.0, omegas[0] * s) * simplex_integral(&omegas[1..], t - s)
    })
}

/// Taylor coefficients of `∏ 1/(α − p_r)` at `α0`, up to order `jmax`.
fn product_taylor(poles: &[C64], alpha0: f64, jmax: usize) -> Vec<C64> {
    let mut acc = vec![ZERO; jmax + 1];
    acc[0] = C64::new(1.0, 0.0);
    for &p in poles {
        let dd = C64::new(alpha0, 0.0) - p;
        let f: Vec<C64> = (0..=jmax)
            .map(|j| {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                s / dd.powi(j as i32 + 1)
            })
            .collect();
        let mut next = vec![ZERO; jmax + 1];
        for i in 0..=jmax {
            for j in 0..=jmax - i {
                next[i + j] += acc[i] * f[j];
            }
        }
        acc = next;
    }
    acc
}

fn contour_integral(omegas: &[f64], t: f64, big_t: f64) -> C64 {
    let poles: Vec<C64> = omegas.iter().map(|&w| C64::new(-w, -1.0 / big_t)).collect();
    let g = |alpha: f64| -> C64 {
        poles
            .iter()
            .fold(C64::new(1.0, 0.0), |acc, &p| acc / (C64::new(alpha, 0.0) - p))
    };
    let wmax = omegas.iter().fold(0.0f64, |m, w| m.max(w.abs()));
    let at = t.abs();
    let cut = (100.0f64).max(60.0 / at) + wmax;
    let h = (0.5f64).min(1.0 / big_t).min(1.0 / at);
    let panels = (2.0 * cut / h).ceil() as usize;
    let rule = gauss_legendre(16);
    let direct = rule.composite_c(-cut, cut, panels, |alpha| g(alpha) * C64::from_polar(1.0, -alpha * t));

    // Tails by repeated integration by parts.
    let jmax = 14;
    let it = I * t;
    let mut upper = ZERO;
    let mut lower = ZERO;
    let cu = product_taylor(&poles, cut, jmax);
    let cl = product_taylor(&poles, -cut, jmax);
    let mut fact = 1.0;
    let mut itp = it;
    for j in 0..=jmax {
        if j > 0 {
            fact *= j as f64;
            itp *= it;
        }
        upper += cu[j] * fact / itp;
        lower += cl[j] * fact / itp;
    }
    let tails = C64::from_polar(1.0, -cut * t) * upper - C64::from_polar(1.0, cut * t) * lower;
    let m1 = omegas.len() as i32;
    C64::new((t / big_t).exp() / (2.0 * std::f64::consts::PI), 0.0) * I.powi(m1) * (direct + tails)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn history_counts() {
        assert_eq!(enumerate_histories(1).unwrap().len(), 1);
        let h2: Vec<Vec<usize>> = enumerate_histories(2)
            .unwrap()
            .into_iter()
            .map(|h| h.ell().to_vec())
            .collect();
        assert_eq!(h2, vec![vec![1, 1], vec![2, 1], vec![3, 1]]);
        assert_eq!(enumerate_histories(3).unwrap().len(), 15);
        assert_eq!(enumerate_histories(4).unwrap().len(), 105);
        assert!(enumerate_histories(5).is_err());
    }

    #[test]
    fn order_one_diagram() {
        let d = build_diagram(&enumerate_histories(1).unwrap()[0]);
        assert_eq!(d.vertices.len(), 5);
        assert_eq!(d.edges.len(), 4);
        assert_eq!(d.count(VertexRole::Input), 3);
        assert_eq!(d.count(VertexRole::Nonlinear), 1);
        assert_eq!(d.count(VertexRole::Output), 1);
    }

    #[test]
    fn series_matches_exact_at_switch() {
        for &t in &[0.5, 1.0, 3.0] {
            let w = SERIES_THRESHOLD / t;
            let a = phase_integral_series(w, t);
            let b = phase_integral_exact(w, t);
            assert!((a - b).norm() < 1e-10 * t, "{a} {b}");
        }
        assert!((phase_integral(0.0, 2.0) - C64::new(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn double_integral_branches_agree() {
        let t = 1.7;
        for &x in &[0.0, 0.3, 1.9, -4.0] {
            let y = 0.99 * SERIES_THRESHOLD / t;
            let a = double_phase_integral(x, y, t);
            let y2 = 1.01 * SERIES_THRESHOLD / t;
            let b = double_phase_integral(x, y2, t);
            // Values differ by O(Δy); compare against the derivative scale.
            assert!((a - b).norm() < 1e-5, "{x}: {a} {b}");
            // Direct quadrature oracle.
            let rule = gauss_legendre(30);
            let q = rule.integrate_c(0.0, t, |s| C64::from_polar(1.0, x * s) * phase_integral(y, s));
            assert!((a - q).norm() < 1e-12, "{x}: {a} {q}");
        }
    }
}

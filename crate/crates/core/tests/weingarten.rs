use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use std::collections::BTreeMap;
use wavekin::rmt::{sample_haar_unitary, UnitaryMatrix};
use wavekin::weingarten::*;

fn r(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn perms(q: usize) -> Vec<Vec<usize>> {
    if q == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in perms(q - 1) {
        for pos in 0..q {
            let mut v = p.clone();
            v.insert(pos, q - 1);
            out.push(v);
        }
    }
    out
}

fn cycles(p: &[usize]) -> Vec<usize> {
    let mut seen = vec![false; p.len()];
    let mut parts = Vec::new();
    for s in 0..p.len() {
        let mut len = 0;
        let mut i = s;
        while !seen[i] {
            seen[i] = true;
            i = p[i];
            len += 1;
        }
        if len > 0 {
            parts.push(len);
        }
    }
    parts.sort_unstable_by(|a, b| b.cmp(a));
    parts
}

fn compose_inv(s: &[usize], t: &[usize]) -> Vec<usize> {
    // s ∘ t⁻¹
    let mut inv = vec![0; t.len()];
    for (i, &j) in t.iter().enumerate() {
        inv[j] = i;
    }
    inv.iter().map(|&i| s[i]).collect()
}

/// Wg by inverting the Gram matrix in floating point.
fn wg_float(q: usize, d: usize) -> BTreeMap<Vec<usize>, f64> {
    let ps = perms(q);
    let n = ps.len();
    let g = DMatrix::from_fn(n, n, |i, j| (d as f64).powi(cycles(&compose_inv(&ps[i], &ps[j])).len() as i32));
    let inv = g.try_inverse().expect("Gram matrix is invertible");
    let id = ps.iter().position(|p| p.iter().enumerate().all(|(i, &j)| i == j)).unwrap();
    ps.iter().enumerate().map(|(i, p)| (cycles(p), inv[(i, id)])).collect()
}

fn brute_force(g: &WeingartenGraph) -> BTreeMap<Vec<usize>, u64> {
    let (psi, bar) = (g.psi_factors(), g.psibar_factors());
    let mut out = BTreeMap::new();
    if psi.len() != bar.len() {
        return out;
    }
    let ps = perms(psi.len());
    for s in &ps {
        for t in &ps {
            let ok = (0..psi.len()).all(|l| psi[l].0 == bar[s[l]].0 && psi[l].1 == bar[t[l]].1);
            if ok {
                *out.entry(cycles(&compose_inv(s, t))).or_insert(0) += 1;
            }
        }
    }
    out
}

fn mc_moment(g: &WeingartenGraph, d: usize, samples: usize, seed: u64) -> (f64, f64, f64) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (mut s, mut s2, mut si) = (0.0, 0.0, 0.0);
    for _ in 0..samples {
        let u = sample_haar_unitary(d, &mut rng);
        let mut z = C64::new(1.0, 0.0);
        for &(a, b) in g.psi_factors() {
            z *= u.get(a, b);
        }
        for &(a, b) in g.psibar_factors() {
            z *= u.get(a, b).conj();
        }
        s += z.re;
        s2 += z.re * z.re;
        si += z.im;
    }
    let n = samples as f64;
    let m = s / n;
    (m, ((s2 / n - m * m) / n).sqrt(), si / n)
}

#[test]
fn mobius_examples() {
    assert_eq!(mobius(&CycleType::identity(3)), 1);
    assert_eq!(mobius(&CycleType::new(vec![2]).unwrap()), -1);
    assert_eq!(mobius(&CycleType::new(vec![3]).unwrap()), 2);
    assert_eq!(mobius(&CycleType::new(vec![2, 2]).unwrap()), 1);
}

#[test]
fn wg_matches_float_gram_inversion() {
    for q in 1..=4 {
        for d in [q, q + 1, 7] {
            let oracle = wg_float(q, d);
            for ct in CycleType::all(q) {
                let exact = to_f64(&wg_exact(&ct, q, d).unwrap());
                let f = oracle[ct.parts()];
                assert!((exact - f).abs() <= 1e-9 * f.abs().max(1e-12), "q={q} d={d} {ct}: {exact} vs {f}");
            }
        }
    }
}

#[test]
fn wg_small_closed_forms_and_errors() {
    assert_eq!(wg_exact(&CycleType::identity(1), 1, 9).unwrap(), r(1, 9));
    for d in [3i64, 10] {
        assert_eq!(wg_exact(&CycleType::identity(2), 2, d as usize).unwrap(), r(1, d * d - 1));
        assert_eq!(wg_exact(&CycleType::new(vec![2]).unwrap(), 2, d as usize).unwrap(), r(-1, d * (d * d - 1)));
    }
    assert!(wg_exact(&CycleType::identity(3), 3, 2).is_err());
    for q in 1..=4 {
        assert!(orthogonality_residual(q, 6).unwrap().is_zero());
    }
}

#[test]
fn wg_leading_order() {
    assert_eq!(wg_leading(&CycleType::identity(3), 3, 5), 5f64.powi(-3));
    assert_eq!(wg_leading(&CycleType::new(vec![2]).unwrap(), 2, 10), -1e-3);
    for d in [8usize, 32] {
        for ct in CycleType::all(3) {
            let e = to_f64(&wg_exact(&ct, 3, d).unwrap());
            let l = wg_leading(&ct, 3, d);
            // The 3-cycle has relative correction 1/((1−d⁻²)(1−4d⁻²)) − 1 ≈ 5/d².
            assert!(((e - l) / l).abs() <= 6.0 / (d * d) as f64, "{ct} d={d}");
        }
    }
}

#[test]
fn one_step_identity_is_exact() {
    assert!(one_step_identity_check(&CycleType::identity(1), 1, 5).unwrap().is_zero());
    assert!(one_step_identity_check(&CycleType::new(vec![2]).unwrap(), 2, 6).unwrap().is_zero());
    assert!(one_step_identity_check(&CycleType::identity(2), 2, 4).unwrap().is_zero());
    for ct in CycleType::all(3) {
        assert!(one_step_identity_check(&ct, 3, 7).unwrap().is_zero());
    }
    assert!(one_step_identity_check(&CycleType::identity(3), 3, 3).is_err());
}

#[test]
fn graph_shapes_and_order_bounds() {
    let g = build_graph(&[0, 0], &[1, 1], &[0, 0], &[1, 1]).unwrap();
    assert_eq!((g.vertex_count(), g.edges().len(), graph_order_bound(&g)), (2, 4, -1));
    let g = build_graph(&[0, 0], &[0, 1], &[0, 0], &[0, 1]).unwrap();
    assert_eq!((g.vertex_count(), g.edges().len()), (3, 4));
    let g = build_graph(&[0, 1], &[0, 1], &[1, 0], &[0, 1]).unwrap();
    assert_eq!((g.vertex_count(), graph_order_bound(&g)), (4, -2));
    let g = build_graph(&[0, 1], &[0, 1], &[0, 1], &[0, 1]).unwrap();
    assert_eq!((g.vertex_count(), g.component_count(), graph_order_bound(&g)), (4, 2, -2));
    for (name, g) in covering_fixtures() {
        if !g.is_balanced() || g.q() == 0 {
            continue;
        }
        let e = graph_order_bound(&g);
        let m = [8usize, 16, 32].map(|d| to_f64(&haar_moment(&g, d).unwrap()).abs() * (d as f64).powi(-e as i32));
        // |E ψ_G| d^{-e} stays bounded along the doubling sweep.
        assert!(m[2] <= 2.0 * m[0] + 1e-12, "{name}: {m:?}");
    }
}

#[test]
fn coverings_match_brute_force() {
    for (name, g) in covering_fixtures() {
        let bf = brute_force(&g);
        let total: u64 = bf.values().sum();
        assert_eq!(enumerate_coverings(&g, 8).unwrap().len() as u64, total, "{name}");
        let classes: BTreeMap<Vec<usize>, u64> = covering_class_counts(&g, 8)
            .unwrap()
            .into_iter()
            .map(|(ct, n)| (ct.parts().to_vec(), n))
            .collect();
        assert_eq!(classes, bf, "{name}");
    }
    let g = build_graph(&[0, 0], &[0, 0], &[0, 0], &[0, 0]).unwrap();
    assert_eq!(enumerate_coverings(&g, 8).unwrap().len(), 4);
}

#[test]
fn haar_moment_examples() {
    for d in [4i64, 8, 16] {
        let du = d as usize;
        assert_eq!(haar_moment(&build_graph(&[0], &[0], &[0], &[0]).unwrap(), du).unwrap(), r(1, d));
        assert_eq!(
            haar_moment(&build_graph(&[0, 0], &[0, 0], &[0, 0], &[0, 0]).unwrap(), du).unwrap(),
            r(2, d * (d + 1))
        );
        assert_eq!(
            haar_moment(&build_graph(&[0, 1], &[0, 1], &[1, 0], &[0, 1]).unwrap(), du).unwrap(),
            r(-1, d * (d * d - 1))
        );
    }
    let mut row = BigRational::zero();
    for l in 0..6 {
        row += haar_moment(&build_graph(&[2], &[l], &[2], &[l]).unwrap(), 6).unwrap();
    }
    assert!(row.is_one());
    let big = build_graph(&[0; 3], &[0; 3], &[0; 3], &[0; 3]).unwrap();
    assert!(haar_moment(&big, 2).is_err());
}

#[test]
fn haar_moments_match_monte_carlo() {
    for d in [8usize, 16] {
        for (i, (name, g)) in covering_fixtures().into_iter().enumerate() {
            if g.q() > 4 {
                continue;
            }
            let exact = to_f64(&haar_moment(&g, d).unwrap());
            let (m, se, im) = mc_moment(&g, d, 100_000, 100 + i as u64);
            assert!((m - exact).abs() <= 5.0 * se + 1e-15, "{name} d={d}: {m} ± {se} vs {exact}");
            assert!(im.abs() <= 5.0 * se.max(1e-6) * 2.0, "{name}: imaginary part {im}");
        }
    }
}

#[test]
fn banana_principle_on_fixtures() {
    for (name, g) in covering_fixtures() {
        let (psi, bar) = (g.psi_factors().to_vec(), g.psibar_factors().to_vec());
        for l in 0..psi.len() {
            for rr in 0..bar.len() {
                if psi[l] != bar[rr] {
                    continue;
                }
                if let Some((Some(with), global)) = banana_maxima(&g, l, rr, 8).unwrap() {
                    assert_eq!(with, global, "{name} ({l},{rr})");
                }
            }
        }
    }
}

#[test]
fn gamma_identity_matrix_and_forms() {
    let id = UnitaryMatrix::identity(5);
    assert!((gamma(&id, 1, 1, 1, 1) - C64::new(1.0 - 0.4, 0.0)).norm() < 1e-15);
    assert!((gamma(&id, 1, 1, 3, 3) - C64::new(-0.2, 0.0)).norm() < 1e-15);
    let mut rng = ChaCha20Rng::seed_from_u64(9);
    let u = sample_haar_unitary(6, &mut rng);
    for (k, l, m, n) in [(0, 0, 2, 2), (0, 0, 0, 0), (1, 2, 2, 1), (0, 1, 2, 3), (3, 3, 4, 5)] {
        assert!((gamma(&u, k, l, m, n) - gamma_uncentered(&u, k, l, m, n)).norm() < 1e-12);
    }
}

#[test]
fn gamma_moments_exact() {
    let distinct = IndexPattern::DISTINCT;
    for d in [8usize, 16, 32] {
        let v = to_f64(&gamma_moment_exact(&distinct, 1, 1, d, 8).unwrap()) * (d as f64).powi(3);
        assert!((v - 1.0).abs() <= 8.0 / d as f64, "d={d}: {v}");
        assert!(gamma_moment_exact(&distinct, 2, 0, d, 8).unwrap().is_zero());
        assert!(gamma_moment_exact(&distinct, 2, 1, d, 8).unwrap().is_zero());
    }
    // γ(k,k,m,m) is real, so its square is its modulus squared: order d⁻³, not smaller.
    let kkmm = IndexPattern([0, 0, 1, 1]);
    let s: Vec<f64> = [8usize, 16, 32, 64]
        .iter()
        .map(|&d| {
            let sq = gamma_moment_exact(&kkmm, 2, 0, d, 8).unwrap();
            assert_eq!(sq, gamma_moment_exact(&kkmm, 1, 1, d, 8).unwrap());
            to_f64(&sq) * (d as f64).powi(3)
        })
        .collect();
    let steps: Vec<f64> = s.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    assert!(s[3] > 0.5 && steps[2] < steps[1] && steps[1] < steps[0], "{s:?}");
    assert!(gamma_moment_exact(&distinct, 3, 2, 8, 8).is_err());
}

#[test]
fn gamma_monte_carlo() {
    let d = 16;
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    let n = 100_000;
    let (mut sr, mut si, mut s2, mut s4) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..n {
        let u = sample_haar_unitary(d, &mut rng);
        let g = gamma(&u, 0, 1, 2, 3);
        sr += g.re;
        si += g.im;
        let a = g.norm_sqr() * (d as f64).powi(3);
        s2 += a;
        s4 += a * a;
    }
    let nf = n as f64;
    let m2 = s2 / nf;
    let se2 = ((s4 / nf - m2 * m2) / nf).sqrt();
    let exact = to_f64(&gamma_moment_exact(&IndexPattern::DISTINCT, 1, 1, d, 8).unwrap()) * (d as f64).powi(3);
    assert!((m2 - exact).abs() <= 4.0 * se2, "{m2} ± {se2} vs {exact}");
    let se1 = (exact / (d as f64).powi(3) / 2.0 / nf).sqrt();
    assert!((sr / nf).abs() <= 4.0 * se1 && (si / nf).abs() <= 4.0 * se1);
}

#[test]
fn penalty_examples() {
    let any = CycleType::new(vec![2]).unwrap();
    assert!(rho_penalty(2, &any).is_one());
    assert_eq!(rho_penalty(4, &any), r(3, 1));
    assert_eq!(rho_penalty(6, &any), r(15, 1));
    assert!(rho_penalty(1, &CycleType::identity(1)).is_one());
    for d in [5i64, 9] {
        let du = d as usize;
        let empty = WeingartenGraph::empty();
        assert!(centered_product_moment(&[(0, 0)], &empty, du, 8).unwrap().exact.is_zero());
        let var = centered_product_moment(&[(0, 0), (0, 0)], &empty, du, 8).unwrap();
        assert_eq!(var.exact, r(2, d * (d + 1)) - r(1, d * d));
        let g = build_graph(&[0], &[0], &[0], &[0]).unwrap();
        assert_eq!(centered_product_moment(&[(0, 0)], &g, du, 8).unwrap().exact, var.exact);
    }
}

#[test]
fn penalty_theorem_leading_order() {
    for fx in penalty_fixtures() {
        let dev: Vec<f64> = [8usize, 16, 32, 64]
            .iter()
            .map(|&d| {
                let m = centered_product_moment(&fx.atoms, &fx.graph, d, 8).unwrap();
                (to_f64(&m.exact) / to_f64(&m.predicted) - 1.0).abs()
            })
            .collect();
        let c = [8.0, 16.0, 32.0, 64.0].iter().zip(&dev).map(|(d, e)| d * e).fold(0.0f64, f64::max);
        assert!(c <= 2.0, "{}: {dev:?}", fx.name);
        assert!(dev[3] <= dev[0] + 1e-14, "{}: {dev:?}", fx.name);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn permutation_group_laws(seed in 0u64..10_000, q in 1usize..7) {
        let all = Permutation::all(q);
        let a = &all[(seed as usize) % all.len()];
        let b = &all[(seed as usize / 7) % all.len()];
        prop_assert!(a.compose(&a.inverse()).is_identity());
        prop_assert_eq!(a.compose(b).inverse(), b.inverse().compose(&a.inverse()));
        prop_assert_eq!(a.cycle_type().size(), q);
        // Conjugation preserves cycle type.
        prop_assert_eq!(b.compose(a).compose(&b.inverse()).cycle_type(), a.cycle_type());
    }
}

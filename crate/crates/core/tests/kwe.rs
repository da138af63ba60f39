mod common;

use proptest::prelude::*;
use wavekin::dynamics::DataProfile;
use wavekin::kwe::*;
use wavekin::rmt::{nu, nu_inverse};

fn bump(k: f64) -> f64 {
    1.0 + 0.5 * k * k
}

fn fast() -> CollisionConfig {
    CollisionConfig::with_q(16)
}

#[test]
fn constant_density_is_stationary() {
    let g = KineticGrid::new(65).unwrap();
    let c = collision_operator(&SpectralDensity::constant(g.clone(), 2.5), &CollisionConfig::default()).unwrap();
    assert!(c.iter().all(|v| v.abs() < 1e-13));
    let sol = solve(&SpectralDensity::constant(g, 0.4), 0.5, 0.05, &fast()).unwrap();
    for s in &sol.states {
        assert!(s.values.iter().all(|&v| (v - 0.4).abs() < 1e-14));
    }
}

#[test]
fn rayleigh_jeans_values() {
    let g = KineticGrid::new(33).unwrap();
    let rj = rayleigh_jeans(1.0, 3.0, g.clone()).unwrap();
    for ((k, n), v) in g.k().iter().zip(g.nu()).zip(&rj.values) {
        assert!((v - 1.0 / (3.0 + n)).abs() < 1e-15);
        assert!((v - rayleigh_jeans_value(1.0, 3.0, *k).unwrap()).abs() < 1e-9);
    }
    assert!((rayleigh_jeans_value(1.0, 3.0, 1.0).unwrap() - 0.2).abs() < 1e-14);
    assert!((rayleigh_jeans_value(1.0, 3.0, -1.0).unwrap() - 1.0).abs() < 1e-14);
    assert!(rayleigh_jeans_value(1.0, 2.0, 0.0).is_err());
    let big = rayleigh_jeans(1.0, 1e8, g.clone()).unwrap();
    assert!(big.values.iter().all(|v| (v * 1e8 - 1.0).abs() < 1e-7));
    assert!(rayleigh_jeans(1.0, 1.5, g.clone()).is_err());
    assert!(rayleigh_jeans(0.0, 3.0, g).is_err());
}

#[test]
fn rayleigh_jeans_is_annihilated() {
    let g = KineticGrid::new(65).unwrap();
    let rj = rayleigh_jeans(1.0, 3.0, g).unwrap();
    let mut prev = f64::INFINITY;
    for q in [16, 32, 64] {
        let c = collision_operator(&rj, &CollisionConfig::with_q(q)).unwrap();
        let m = c.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        // Either a clear decrease or already at the roundoff floor.
        assert!(m < 1e-11 || m <= prev / 4.0, "q={q} {m}");
        prev = m;
    }
}

/// `(1/2)∬ √(4−x*²) F dℓ dm` by nested double-exponential quadrature.
fn de_collision(k: f64, rho: &impl Fn(f64) -> f64) -> f64 {
    let de = |f: &dyn Fn(f64) -> f64, a: f64, b: f64| quadrature::double_exponential::integrate(f, a, b, 1e-11).integral;
    let nk = nu(k).unwrap();
    let rk = rho(k);
    let outer = |l: f64| -> f64 {
        let c = nk - nu(l).unwrap();
        // Support of m: ν(m) ∈ [−2−c, 2−c] ∩ [−2, 2].
        let lo = (-2.0 - c).max(-2.0);
        let hi = (2.0 - c).min(2.0);
        if hi <= lo {
            return 0.0;
        }
        let (ml, mh) = (nu_inverse(lo).unwrap(), nu_inverse(hi).unwrap());
        let rl = rho(l);
        de(
            &|m: f64| {
                let xs = (c + nu(m).unwrap()).clamp(-2.0, 2.0);
                let n = nu_inverse(xs).unwrap();
                let (rm, rn) = (rho(m), rho(n));
                (4.0 - xs * xs).max(0.0).sqrt() * (rl * rm * rn - rk * rm * rn + rk * rl * rn - rk * rl * rm)
            },
            ml,
            mh,
        )
    };
    0.5 * (de(&outer, -1.0, k) + de(&outer, k, 1.0))
}

#[test]
fn collision_matches_nested_adaptive_quadrature() {
    let cc = CollisionConfig::default();
    for &k in &[-0.7, -0.1, 0.35, 0.8] {
        let ours = collision_at_k(k, &bump, &cc).unwrap();
        let oracle = de_collision(k, &bump);
        assert!((ours - oracle).abs() < 1e-7 * (1.0 + oracle.abs()), "k={k}: {ours} vs {oracle}");
    }
}

#[test]
fn collision_matches_mollified_delta_on_grid() {
    let g = KineticGrid::new(65).unwrap();
    let rho = SpectralDensity::from_fn(g.clone(), bump);
    let c = collision_operator(&rho, &CollisionConfig::default()).unwrap();
    for &i in &[20usize, 32, 44] {
        let oracle = common::mollified_collision_limit(g.theta()[i], 0.1, &bump, 32);
        assert!((c[i] - oracle).abs() <= 1e-3 * oracle.abs(), "k={}: {} vs {oracle}", g.k()[i], c[i]);
    }
}

#[test]
fn quadrature_order_convergence() {
    for &k in &[-0.5, 0.2, 0.9] {
        let v: Vec<f64> = [16, 32, 64]
            .iter()
            .map(|&q| collision_at_k(k, &bump, &CollisionConfig::with_q(q)).unwrap())
            .collect();
        let d1 = (v[0] - v[1]).abs();
        let d2 = (v[1] - v[2]).abs();
        assert!(d2 <= d1 / 4.0 || d2 < 1e-12, "k={k}: {d1} {d2}");
    }
}

#[test]
fn weak_form_annihilates_collision_invariants() {
    let g = KineticGrid::new(65).unwrap();
    for rho in [
        SpectralDensity::from_fn(g.clone(), bump),
        SpectralDensity::from_profile(g.clone(), &DataProfile::Chirp { amp: 1.0, freq: 1.0 }),
    ] {
        let c = collision_operator(&rho, &CollisionConfig::default()).unwrap();
        let scale = rho.max_abs().powi(3);
        let m: f64 = g.weights().iter().zip(&c).map(|(w, v)| w * v).sum();
        let e: f64 = g.weights().iter().zip(&c).zip(g.nu()).map(|((w, v), n)| w * v * n).sum();
        assert!(m.abs() <= 1e-8 * scale, "mass {m}");
        assert!(e.abs() <= 1e-8 * scale, "energy {e}");
    }
}

#[test]
fn functionals_examples() {
    let g = KineticGrid::new(65).unwrap();
    let f = functionals(&SpectralDensity::constant(g.clone(), 1.0)).unwrap();
    assert!((f.mass - 2.0).abs() < 1e-13 && f.energy.abs() < 1e-13 && f.entropy.abs() < 1e-13);
    let lin = SpectralDensity::from_fn(g.clone(), |k| 1.0 + k);
    let oracle = quadrature::double_exponential::integrate(|k| nu(k).unwrap() * k, -1.0, 1.0, 1e-12).integral;
    assert!((mass(&lin) - 2.0).abs() < 1e-12);
    assert!(oracle > 0.0 && (energy(&lin) - oracle).abs() < 1e-9, "{} {oracle}", energy(&lin));
    let mut z = SpectralDensity::constant(g, 1.0);
    z.values[0] = 0.0;
    assert!(entropy(&z).is_err());
    assert!(functionals(&z).is_err());
}

#[test]
fn rayleigh_jeans_stays_put() {
    let g = KineticGrid::new(65).unwrap();
    let rj = rayleigh_jeans(1.0, 3.0, g).unwrap();
    let sol = solve(&rj, 1.0, 0.05, &fast()).unwrap();
    let drift = sol
        .final_state()
        .values
        .iter()
        .zip(&rj.values)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(drift <= 1e-5, "{drift}");
}

#[test]
fn solve_conserves_and_dissipates() {
    let g = KineticGrid::new(65).unwrap();
    let rho0 = SpectralDensity::from_profile(g.clone(), &DataProfile::Parabola { amp: 1.0 });
    let sol = solve(&rho0, 1.0, 0.01, &fast()).unwrap();
    let m0 = mass(&rho0);
    assert!(sol.states.iter().all(|s| ((mass(s) - m0) / m0).abs() <= 1e-6));

    let pos = SpectralDensity::from_profile(g, &DataProfile::Chirp { amp: 1.0, freq: 1.0 });
    let sol = solve(&pos, 1.0, 0.02, &fast()).unwrap();
    let (m0, e0) = (mass(&pos), energy(&pos));
    let mut h_prev = entropy(&pos).unwrap();
    for s in &sol.states[1..] {
        assert!(((mass(s) - m0) / m0).abs() <= 1e-6);
        assert!(((energy(s) - e0) / e0.abs().max(m0)).abs() <= 1e-5);
        let h = entropy(s).unwrap();
        assert!(h >= h_prev - 1e-8, "{h} < {h_prev}");
        h_prev = h;
    }
    assert!(h_prev > entropy(&pos).unwrap());
    assert!(sol.to_csv().starts_with("t,k,rho\n"));
}

#[test]
fn leading_order_prediction_structure() {
    let g = KineticGrid::new(33).unwrap();
    let cc = fast();
    let a = DataProfile::Chirp { amp: 1.0, freq: 1.0 };
    let p0 = leading_order_prediction(&a, 0.0, 64, 64f64.powf(0.4), g.clone(), &cc).unwrap();
    let base = SpectralDensity::from_profile(g.clone(), &a);
    for (x, y) in p0.values.iter().zip(&base.values) {
        assert!((x - y).abs() < 1e-15);
    }
    let mu = 64f64.powf(0.4);
    let p4 = leading_order_prediction(&a, 4.0, 64, mu, g.clone(), &cc).unwrap();
    let p8 = leading_order_prediction(&a, 8.0, 64, mu, g.clone(), &cc).unwrap();
    for i in 0..g.len() {
        let d4 = p4.values[i] - base.values[i];
        let d8 = p8.values[i] - base.values[i];
        assert!(d4.is_finite() && (d8 - 2.0 * d4).abs() < 1e-12);
    }
    let flat = DataProfile::Constant { value: 1.3 };
    let pf = leading_order_prediction(&flat, 10.0, 64, mu, g, &cc).unwrap();
    assert!(pf.values.iter().all(|v| (v - 1.69).abs() < 1e-12));
    assert!((kinetic_time(64, mu) - wavekin::dynamics::ModelConfig::new(64, 0.4, a).unwrap().kinetic_time()).abs() == 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn collision_is_cubic_and_kills_constants(s in 0.1f64..3.0, c in 0.1f64..5.0, k in -0.95f64..0.95) {
        let cc = fast();
        let base = collision_at_k(k, &bump, &cc).unwrap();
        let scaled = collision_at_k(k, &|x: f64| s * bump(x), &cc).unwrap();
        prop_assert!((scaled - s * s * s * base).abs() < 1e-12 * (1.0 + scaled.abs()));
        let flat = collision_at_k(k, &|_| c, &cc).unwrap();
        prop_assert!(flat.abs() < 1e-12 * c * c * c);
    }
}

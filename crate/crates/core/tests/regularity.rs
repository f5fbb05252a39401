use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use qlab::beltrami::BeltramiField;
use qlab::cauchy::lsq_slope;
use qlab::extension::{cutoff_global, ConformalBoundaryMap};
use qlab::regularity::{
    a_infinity_indicator, beta_log_derivative, bmo_dyadic_norm, chord_arc_metrics, dyadic_lags, dynkin_check,
    hardy_littlewood_fit, holder_exponent, omega_ms, TriState, DEFAULT_DYNKIN_C,
};
use qlab::{Grid, GridField, ParametricCurve};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn grid() -> Grid {
    Grid::centered(c(0.0, 0.0), 4.0, 512).unwrap()
}

fn weierstrass(tau: f64, alpha: f64) -> f64 {
    (1..=12).map(|n| 2f64.powf(-alpha * n as f64) * (2f64.powi(n) * tau).cos()).sum()
}

/// Composite Simpson on `[a, b]`.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn omega_of_zero_and_constant_fields() {
    let g = grid();
    let zero = BeltramiField::zero(g);
    assert_eq!(omega_ms(&zero, c(0.3, 0.1), 0.5).unwrap(), 0.0);
    let k = 0.4;
    let mu = BeltramiField::from_field(GridField::from_fn(g, |z| if z.norm() < 1.8 { c(0.0, k) } else { c(0.0, 0.0) })).unwrap();
    for t in [0.03, 0.2, 0.7] {
        let w = omega_ms(&mu, c(0.1, -0.2), t).unwrap();
        assert!((w - k).abs() <= 0.02 * k, "t = {t}: {w}");
    }
    assert!(omega_ms(&mu, c(3.9, 0.0), 0.5).is_err());
}

#[test]
fn omega_of_band_profile_matches_linear_quadrature() {
    let g = grid();
    let k = 0.5;
    let profile = |y: f64| (y.abs().powf(0.4)).min(k);
    let mu = BeltramiField::from_field(GridField::from_fn(g, |z| if z.norm() < 1.8 { c(profile(z.im), 0.0) } else { c(0.0, 0.0) })).unwrap();
    for t in [0.05, 0.3, 1.0] {
        // ω² = (1/πt²)·2∫₀ᵗ 2√(t²−y²) min(k², y^0.8) dy, split at the kink
        let integrand = |y: f64| 2.0 * (t * t - y * y).max(0.0).sqrt() * profile(y).powi(2);
        let kink = k.powf(2.5).min(t);
        let total = simpson(|s| integrand(s * s) * 2.0 * s, 0.0, kink.sqrt(), 4000) + simpson(integrand, kink, t, 4000);
        let oracle = (2.0 * total / (PI * t * t)).sqrt();
        let w = omega_ms(&mu, c(0.0, 0.0), t).unwrap();
        assert!((w - oracle).abs() <= 0.1 * oracle, "t = {t}: {w} vs {oracle}");
    }
}

#[test]
fn omega_is_monotone_under_domination() {
    let g = grid();
    let small = BeltramiField::from_field(GridField::from_fn(g, |z| if z.norm() < 1.0 { c(0.1 * z.re, 0.0) } else { c(0.0, 0.0) })).unwrap();
    let large = BeltramiField::from_field(GridField::from_fn(g, |z| if z.norm() < 1.5 { c(0.0, 0.2) } else { c(0.0, 0.0) })).unwrap();
    for t in [0.04, 0.3, 1.2] {
        assert!(omega_ms(&small, c(0.2, 0.2), t).unwrap() <= omega_ms(&large, c(0.2, 0.2), t).unwrap());
    }
}

#[test]
fn beta_examples_and_affine_invariance() {
    let b = beta_log_derivative(|z| 1.0 + 0.4 * z, |_| c(0.4, 0.0), c(0.5, 0.0)).unwrap();
    assert!((b - 1.0 / 6.0).abs() < 1e-15);
    assert_eq!(beta_log_derivative(|_| c(1.0, 0.0), |_| c(0.0, 0.0), c(0.3, 0.4)).unwrap(), 0.0);
    let m = ConformalBoundaryMap::moebius(0.3).unwrap();
    let a = c(2.0, -1.5);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let z = Complex64::from_polar(rng.gen_range(0.0..0.99), rng.gen_range(0.0..TAU));
        let b0 = beta_log_derivative(|x| m.df(x), |x| m.d2f(x), z).unwrap();
        let b1 = beta_log_derivative(|x| a * m.df(x), |x| a * m.d2f(x), z).unwrap();
        assert!((b0 - b1).abs() <= 4.0 * f64::EPSILON * b0);
    }
}

#[test]
fn dynkin_bound_for_identity_and_quadratic() {
    let g = grid();
    let id = dynkin_check(|_| c(1.0, 0.0), |_| c(0.0, 0.0), &BeltramiField::zero(g), c(0.2, 0.3), DEFAULT_DYNKIN_C).unwrap();
    assert_eq!(id.lhs, 0.0);
    assert!(id.pass);

    let m = ConformalBoundaryMap::quad(0.2).unwrap();
    let mu = cutoff_global(&m, g, 1.5, 0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let z = Complex64::from_polar(rng.gen_range(0.0..0.995), rng.gen_range(0.0..TAU));
        let chk = dynkin_check(|x| m.df(x), |x| m.d2f(x), &mu, z, DEFAULT_DYNKIN_C).unwrap();
        assert!(chk.pass, "{chk:?}");
    }
}

#[test]
fn omega_squared_decays_like_a_power_at_the_circle() {
    // the extension μ of an analytic map vanishes linearly at the circle
    let g = grid();
    let m = ConformalBoundaryMap::quad(0.2).unwrap();
    let mu = cutoff_global(&m, g, 1.5, 0.5).unwrap();
    let eps = 0.5;
    let ts: Vec<f64> = (0..=8).map(|j| 10f64.powf(-1.0 - 0.25 * j as f64)).collect();
    for theta in [0.0, 1.3, PI] {
        let z = Complex64::from_polar(1.0, theta);
        let w2: Vec<f64> = ts.iter().map(|&t| omega_ms(&mu, z, t).unwrap().powi(2).ln()).collect();
        let slope = lsq_slope(&ts.iter().map(|t| t.ln()).collect::<Vec<_>>(), &w2);
        assert!(slope >= eps / 2.0 - 0.1, "θ = {theta}: slope {slope}");
    }
}

#[test]
fn holder_exponent_oracles() {
    let n = 1 << 16;
    let dtau = TAU / n as f64;
    let w: Vec<f64> = (0..n).map(|i| weierstrass(i as f64 * dtau, 0.5)).collect();
    let fit = holder_exponent(&w, dtau, &dyadic_lags(3, 10), true).unwrap();
    assert!((fit.alpha - 0.5).abs() <= 0.1, "{fit:?}");

    let circle = ParametricCurve::unit_circle(4096).unwrap();
    let fit = holder_exponent(&circle.derivs, circle.dparam(), &dyadic_lags(0, 6), true).unwrap();
    assert!(fit.alpha >= 0.9, "{fit:?}");

    // rough term dominates a smooth one at fine scales
    let rough = 0.3;
    let sum: Vec<f64> = (0..n).map(|i| {
        let t = i as f64 * dtau;
        (2.0 * t).sin() + weierstrass(t, rough)
    }).collect();
    let fit = holder_exponent(&sum, dtau, &dyadic_lags(3, 8), true).unwrap();
    assert!((fit.alpha - rough).abs() <= 0.1, "{fit:?}");
}

#[test]
fn hardy_littlewood_oracles() {
    let radii: Vec<f64> = (1..=5).map(|j| 1.0 - 2f64.powi(-2 * j)).collect();
    let quad = hardy_littlewood_fit(|_| c(0.4, 0.0), &radii);
    assert!((quad.alpha_fit - 1.0).abs() < 1e-12 && !quad.zero_derivative);
    let sing = hardy_littlewood_fit(|z| (1.0 - z).powf(-0.5), &radii);
    assert!((sing.alpha_fit - 0.5).abs() <= 0.05, "{sing:?}");
    let flat = hardy_littlewood_fit(|_| c(0.0, 0.0), &radii);
    assert!(flat.zero_derivative && flat.alpha_fit == 1.0);
}

#[test]
fn chord_arc_oracles() {
    let seg = ParametricCurve::segment(c(-1.0, 0.5), c(2.0, -1.0), 257).unwrap();
    assert!((chord_arc_metrics(&seg).constant - 1.0).abs() < 1e-12);

    let circle = ParametricCurve::unit_circle(512).unwrap();
    let ca = chord_arc_metrics(&circle);
    assert!((ca.constant - PI / 2.0).abs() <= 0.01 * PI / 2.0, "{}", ca.constant);
    for &(s, ratio) in ca.profile.iter().filter(|p| p.0 < 0.5) {
        assert!(ratio >= 1.0);
        assert!(ratio - 1.0 <= s * s / 24.0 * 1.1, "s = {s}: {ratio}");
    }

    let moved = circle.transformed(c(0.6, 0.8) * 3.0, c(-2.0, 5.0)).unwrap();
    assert!((chord_arc_metrics(&moved).constant - ca.constant).abs() <= 1e-12);
}

#[test]
fn bmo_of_log_is_stable_under_refinement() {
    let norm = |n: usize| {
        let xs: Vec<f64> = (0..n).map(|i| (-1.0 + (i as f64 + 0.5) * 2.0 / n as f64).abs().ln()).collect();
        bmo_dyadic_norm(&xs).unwrap()
    };
    let (a, b) = (norm(1 << 12), norm(1 << 13));
    assert!(a.is_finite() && a > 0.0);
    assert!((a - b).abs() <= 0.15 * a, "{a} vs {b}");
}

#[test]
fn a_infinity_flags_concentrated_weight() {
    let n = 1 << 12;
    let w: Vec<f64> = (0..n).map(|i| (-1.0 + (i as f64 + 0.5) * 2.0 / n as f64).powi(-2)).collect();
    assert_eq!(a_infinity_indicator(&w).unwrap().0, TriState::Fail);
    let smooth: Vec<f64> = (0..n).map(|i| 2.0 + (i as f64 * 0.01).sin()).collect();
    assert_eq!(a_infinity_indicator(&smooth).unwrap().0, TriState::Pass);
    assert!(a_infinity_indicator(&w[..32]).is_err());
}

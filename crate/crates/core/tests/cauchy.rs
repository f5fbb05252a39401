use std::f64::consts::PI;

use num_complex::Complex64;
use qlab::cauchy::{cauchy_integral, hinf_profile, plemelj_values, Boundedness, BoundaryFunction, BuiltinG, CauchyEvaluator};
use qlab::{ParametricCurve, Region};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn probes() -> Vec<Complex64> {
    let mut v = Vec::new();
    for r in [0.0, 0.3, 0.6, 0.85, 1.15, 1.5, 3.0] {
        for k in 0..5 {
            v.push(Complex64::from_polar(r, 0.7 + k as f64 * 1.3));
        }
    }
    v
}

#[test]
fn constant_on_circle_gives_indicator() {
    let circ = ParametricCurve::unit_circle(256).unwrap();
    let g = BuiltinG::One.sample(&circ).unwrap();
    for z in probes() {
        let exact = if z.norm() < 1.0 { 1.0 } else { 0.0 };
        let v = cauchy_integral(&circ, &g, z).unwrap();
        assert!((v - exact).norm() < 1e-10, "{z}: {v}");
    }
}

#[test]
fn residue_oracles_on_circle() {
    let circ = ParametricCurve::unit_circle(256).unwrap();
    let id = BuiltinG::Identity.sample(&circ).unwrap();
    let pole = BuiltinG::Pole(c(2.0, 0.0)).sample(&circ).unwrap();
    for z in probes() {
        let inside = z.norm() < 1.0;
        let v = cauchy_integral(&circ, &id, z).unwrap();
        assert!((v - if inside { z } else { c(0.0, 0.0) }).norm() < 1e-8, "identity at {z}: {v}");
        let v = cauchy_integral(&circ, &pole, z).unwrap();
        let exact = if inside { 1.0 / (z - 2.0) } else { c(0.0, 0.0) };
        assert!((v - exact).norm() < 1e-8, "pole at {z}: {v}");
    }
}

#[test]
fn plemelj_values_on_circle() {
    let circ = ParametricCurve::unit_circle(256).unwrap();
    for (name, g) in [("one", BuiltinG::One), ("identity", BuiltinG::Identity), ("pole", BuiltinG::Pole(c(2.0, 0.0)))] {
        let gs = g.sample(&circ).unwrap();
        for j in 0..circ.len() {
            let (gp, gm) = plemelj_values(&circ, &gs, j).unwrap();
            let w = circ.points[j];
            let exact_p = match g {
                BuiltinG::One => c(1.0, 0.0),
                BuiltinG::Identity => w,
                _ => 1.0 / (w - 2.0),
            };
            assert!((gp - exact_p).norm() < 1e-6, "{name} g+ at {j}: {gp} vs {exact_p}");
            assert!(gm.norm() < 1e-6, "{name} g- at {j}: {gm}");
            assert!((gp - gm - gs.samples[j]).norm() <= 1e-3 * (1.0 + gs.sup_norm));
        }
    }
}

#[test]
fn interval_indicator_on_line_splits_evenly() {
    let line = ParametricCurve::real_line(1025, 1.0).unwrap();
    let j = 512;
    assert!(line.points[j].norm() < 1e-12);
    let g = BoundaryFunction::from_fn(&line, |w| if w.re.abs() <= 1.0 { c(1.0, 0.0) } else { c(0.0, 0.0) }).unwrap();
    let (gp, gm) = plemelj_values(&line, &g, j).unwrap();
    assert!((gp - 0.5).norm() < 1e-3, "{gp}");
    assert!((gm + 0.5).norm() < 1e-3, "{gm}");
    // off the jump points the P.V. part is (1/2πi) log|(x−1)/(x+1)|
    let j = 700;
    let x = line.points[j].re;
    let (gp, gm) = plemelj_values(&line, &g, j).unwrap();
    let pv = c(0.0, -1.0) * ((x - 1.0) / (x + 1.0)).abs().ln() / (2.0 * PI);
    let gx = if x.abs() <= 1.0 { 1.0 } else { 0.0 };
    assert!((gp - (0.5 * gx + pv)).norm() < 1e-3, "x = {x}: {gp} vs {}", 0.5 * gx + pv);
    assert!((gm - (-0.5 * gx + pv)).norm() < 1e-3);
}

#[test]
fn step_on_line_matches_logarithm() {
    let line = ParametricCurve::real_line(4096, 1.0).unwrap();
    let g = BuiltinG::Step.sample(&line).unwrap();
    let e = CauchyEvaluator::new(&line, &g).unwrap();
    assert!(e.renormalized());
    // log-subtracted integral i Log(−z)/(2π), the step sitting at 0
    let p = c(0.0, 0.0);
    let oracle = |z: Complex64| Complex64::i() * (p - z).ln() / (2.0 * PI);
    for z in [c(-0.5, 0.2), c(0.7, -0.3), c(0.0, 1.5), c(-2.0, -1.0), c(0.05, 0.05), c(0.3, 0.4)] {
        let v = e.value(z).unwrap();
        assert!((v - oracle(z)).norm() < 1e-4, "{z}: {v} vs {}", oracle(z));
    }
}

#[test]
fn profiles_classify_builtins() {
    let circ = ParametricCurve::unit_circle(4096).unwrap();
    let pole = BuiltinG::Pole(c(2.0, 0.0)).sample(&circ).unwrap();
    let p = hinf_profile(&circ, &pole, Region::InsideCurve, 8).unwrap();
    assert_eq!(p.classification, Boundedness::Bounded);
    assert!((p.sup_values.last().unwrap() - 1.0).abs() < 0.02, "{:?}", p.sup_values);

    let line = ParametricCurve::real_line(4096, 1.0).unwrap();
    let one = BuiltinG::One.sample(&line).unwrap();
    for region in [Region::UpperHalf, Region::LowerHalf] {
        let p = hinf_profile(&line, &one, region, 8).unwrap();
        assert_eq!(p.classification, Boundedness::Bounded);
        for s in &p.sup_values {
            assert!((s - 0.5).abs() < 1e-6, "{s}");
        }
    }
    let step = BuiltinG::Step.sample(&line).unwrap();
    for region in [Region::UpperHalf, Region::LowerHalf] {
        let p = hinf_profile(&line, &step, region, 8).unwrap();
        println!("step {region:?}: slope {} sups {:?}", p.slope, p.sup_values);
        assert_eq!(p.classification, Boundedness::Unbounded);
    }
}

#[test]
fn cauchy_integral_is_holomorphic_off_curve() {
    let circ = ParametricCurve::unit_circle(512).unwrap();
    let g = BoundaryFunction::from_fn(&circ, |w| c(w.re.abs(), 0.0)).unwrap();
    let eps = 1e-4;
    for z in [c(0.5, 0.1), c(-0.2, -0.6), c(1.4, 0.3), c(0.0, 2.0)] {
        let f = |w: Complex64| cauchy_integral(&circ, &g, w).unwrap();
        let dx = (f(z + eps) - f(z - eps)) / (2.0 * eps);
        let dy = (f(z + c(0.0, eps)) - f(z - c(0.0, eps))) / (2.0 * eps);
        let dbar = 0.5 * (dx + c(0.0, 1.0) * dy);
        assert!(dbar.norm() < 1e-4, "{z}: {dbar}");
    }
}

#[test]
fn far_field_decay_bound() {
    let circ = ParametricCurve::circle(c(0.2, -0.1), 0.8, 256).unwrap();
    let g = BoundaryFunction::from_fn(&circ, |w| c(w.im.signum(), 0.0)).unwrap();
    let (_, len) = circ.arclength();
    for r in [3.0, 6.0, 20.0] {
        for k in 0..8 {
            let z = Complex64::from_polar(r, k as f64);
            let d = circ.distance(z);
            let v = cauchy_integral(&circ, &g, z).unwrap();
            assert!(v.norm() <= g.sup_norm * len / (2.0 * PI * d));
        }
    }
}

//! Sampled parametric curves, their regions, and distance queries.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QlabError, Result};

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// A curve sampled at uniform parameters together with its derivative.
///
/// Closed curves are parametrized over `[0, 2π)` and wrap around. Open
/// curves cover their parameter interval only; the compactified real line
/// from [`ParametricCurve::real_line`] is open with parameters in `(-π, π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParametricCurve {
    pub params: Vec<f64>,
    pub points: Vec<Complex64>,
    pub derivs: Vec<Complex64>,
    pub closed: bool,
}

/// Which side of a curve a point set lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    /// Left of an unbounded curve traversed left to right (Ω₊ / upper half-plane).
    UpperHalf,
    /// Right of an unbounded curve (Ω₋ / lower half-plane).
    LowerHalf,
    /// Interior of a positively oriented closed curve.
    InsideCurve,
    /// Exterior of a positively oriented closed curve.
    OutsideCurve,
}

impl Region {
    pub fn check(&self, curve: &ParametricCurve) -> Result<()> {
        match (self, curve.closed) {
            (Region::InsideCurve | Region::OutsideCurve, false) => {
                Err(QlabError::InvalidCurve("inside/outside regions need a closed curve".into()))
            }
            (Region::UpperHalf | Region::LowerHalf, true) => {
                Err(QlabError::InvalidCurve("upper/lower regions need an unbounded curve".into()))
            }
            _ => Ok(()),
        }
    }

    /// +1 for the region on the left of the traversal direction, -1 otherwise.
    pub fn orientation(&self) -> f64 {
        match self {
            Region::UpperHalf | Region::InsideCurve => 1.0,
            Region::LowerHalf | Region::OutsideCurve => -1.0,
        }
    }
}

impl ParametricCurve {
    pub fn new(
        params: Vec<f64>,
        points: Vec<Complex64>,
        derivs: Vec<Complex64>,
        closed: bool,
    ) -> Result<Self> {
        let n = params.len();
        if n < 2 || points.len() != n || derivs.len() != n {
            return Err(QlabError::InvalidCurve(format!(
                "mismatched or too few samples: {} params, {} points, {} derivs",
                n,
                points.len(),
                derivs.len()
            )));
        }
        let dt = params[1] - params[0];
        if !(dt > 0.0) {
            return Err(QlabError::InvalidCurve("parameters must increase".into()));
        }
        for w in params.windows(2) {
            if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(1.0) {
                return Err(QlabError::InvalidCurve("parameters must be uniform".into()));
            }
        }
        if closed {
            let span = dt * n as f64;
            if (span - 2.0 * PI).abs() > 1e-9 || params[0] < -1e-12 {
                return Err(QlabError::InvalidCurve("closed curves are parametrized over [0, 2π)".into()));
            }
        }
        for (j, d) in derivs.iter().enumerate() {
            if !(d.norm() > 0.0) || !d.re.is_finite() || !d.im.is_finite() {
                return Err(QlabError::InvalidCurve(format!("vanishing derivative at sample {j}")));
            }
        }
        for (j, p) in points.iter().enumerate() {
            if !p.re.is_finite() || !p.im.is_finite() {
                return Err(QlabError::InvalidCurve(format!("non-finite point at sample {j}")));
            }
        }
        let m = if closed { n } else { n - 1 };
        for j in 0..m {
            if points[j] == points[(j + 1) % n] {
                return Err(QlabError::InvalidCurve(format!("repeated point at sample {j}")));
            }
        }
        Ok(Self { params, points, derivs, closed })
    }

    /// Closed curve from closed-form `φ` and `φ'` on `[0, 2π)`.
    pub fn closed_from_fn<F, D>(n: usize, phi: F, dphi: D) -> Result<Self>
    where
        F: Fn(f64) -> Complex64,
        D: Fn(f64) -> Complex64,
    {
        let dt = 2.0 * PI / n as f64;
        let params: Vec<f64> = (0..n).map(|j| j as f64 * dt).collect();
        let points = params.iter().map(|&t| phi(t)).collect();
        let derivs = params.iter().map(|&t| dphi(t)).collect();
        Self::new(params, points, derivs, true)
    }

    pub fn circle(center: Complex64, radius: f64, n: usize) -> Result<Self> {
        Self::closed_from_fn(
            n,
            |t| center + Complex64::from_polar(radius, t),
            |t| Complex64::i() * Complex64::from_polar(radius, t),
        )
    }

    pub fn unit_circle(n: usize) -> Result<Self> {
        Self::circle(Complex64::new(0.0, 0.0), 1.0, n)
    }

    /// Open straight segment from `a` to `b` parametrized over `[0, 1]`.
    pub fn segment(a: Complex64, b: Complex64, n: usize) -> Result<Self> {
        let params: Vec<f64> = (0..n).map(|j| j as f64 / (n - 1) as f64).collect();
        let points = params.iter().map(|&t| a + (b - a) * t).collect();
        let derivs = vec![b - a; n];
        Self::new(params, points, derivs, false)
    }

    /// Compactified parameter nodes `θ_j = -π + (j + ½)·2π/n`.
    pub fn compact_params(n: usize) -> Vec<f64> {
        let dt = 2.0 * PI / n as f64;
        (0..n).map(|j| -PI + (j as f64 + 0.5) * dt).collect()
    }

    /// The real line sampled at `x = span·tan(θ/2)` for `θ` in `(-π, π)`.
    pub fn real_line(n: usize, span: f64) -> Result<Self> {
        let params = Self::compact_params(n);
        let points = params.iter().map(|&t| Complex64::new(span * (0.5 * t).tan(), 0.0)).collect();
        let derivs = params
            .iter()
            .map(|&t| Complex64::new(0.5 * span / (0.5 * t).cos().powi(2), 0.0))
            .collect();
        Self::new(params, points, derivs, false)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dparam(&self) -> f64 {
        self.params[1] - self.params[0]
    }

    /// Arc length carried by sample `j`: `|φ'(τ_j)|·Δτ`.
    pub fn local_spacing(&self, j: usize) -> f64 {
        self.derivs[j].norm() * self.dparam()
    }

    /// Unit normal pointing to the left of the traversal direction.
    pub fn left_normal(&self, j: usize) -> Complex64 {
        let d = self.derivs[j];
        Complex64::i() * d / d.norm()
    }

    /// Cumulative arclength at each sample (trapezoid rule on `|φ'|`).
    /// For closed curves the total length is returned as the second value.
    pub fn arclength(&self) -> (Vec<f64>, f64) {
        let n = self.len();
        let dt = self.dparam();
        let mut s = vec![0.0; n];
        for j in 1..n {
            s[j] = s[j - 1] + 0.5 * dt * (self.derivs[j - 1].norm() + self.derivs[j].norm());
        }
        let total = if self.closed {
            s[n - 1] + 0.5 * dt * (self.derivs[n - 1].norm() + self.derivs[0].norm())
        } else {
            s[n - 1]
        };
        (s, total)
    }

    /// Cubic Hermite reconstruction of `φ` at parameter offset `s ∈ [0, 1]`
    /// within the arc from sample `a` to its successor.
    fn hermite(&self, a: usize, s: f64) -> Complex64 {
        let n = self.len();
        let b = if self.closed { (a + 1) % n } else { a + 1 };
        let dt = self.dparam();
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        self.points[a] * h00 + self.derivs[a] * (h10 * dt) + self.points[b] * h01 + self.derivs[b] * (h11 * dt)
    }

    /// Index of the nearest sample; ties go to the smaller index.
    pub fn nearest_sample(&self, z: Complex64) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (j, p) in self.points.iter().enumerate() {
            let d = (z - p).norm();
            if d < best.1 {
                best = (j, d);
            }
        }
        best
    }

    /// Distance from `z` to the curve.
    ///
    /// The nearest sample is refined by golden-section search over the two
    /// adjacent arcs (cubic Hermite reconstruction) to relative accuracy 1e-6
    /// in the parameter.
    pub fn distance(&self, z: Complex64) -> f64 {
        let (j, d0) = self.nearest_sample(z);
        if d0 == 0.0 {
            return 0.0;
        }
        let n = self.len();
        let mut best = d0;
        let mut arcs = Vec::with_capacity(2);
        if self.closed {
            arcs.push((j + n - 1) % n);
            arcs.push(j);
        } else {
            if j > 0 {
                arcs.push(j - 1);
            }
            if j + 1 < n {
                arcs.push(j);
            }
        }
        for a in arcs {
            best = best.min(self.golden_min(z, a));
        }
        best
    }

    fn golden_min(&self, z: Complex64, a: usize) -> f64 {
        let f = |s: f64| (z - self.hermite(a, s)).norm();
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let mut x1 = hi - GOLDEN * (hi - lo);
        let mut x2 = lo + GOLDEN * (hi - lo);
        let mut f1 = f(x1);
        let mut f2 = f(x2);
        while hi - lo > 1e-6 {
            if f1 <= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - GOLDEN * (hi - lo);
                f1 = f(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + GOLDEN * (hi - lo);
                f2 = f(x2);
            }
        }
        f(0.5 * (lo + hi)).min(f(0.0)).min(f(1.0))
    }

    /// Winding number of a closed curve's sample polygon around `z`.
    pub fn winding_number(&self, z: Complex64) -> f64 {
        let n = self.len();
        let mut total = 0.0;
        for j in 0..n {
            let a = self.points[j] - z;
            let b = self.points[(j + 1) % n] - z;
            total += (b / a).arg();
        }
        total / (2.0 * PI)
    }

    /// Whether `z` lies to the left of the curve (inside for closed curves,
    /// above for unbounded curves running left to right).
    pub fn is_left(&self, z: Complex64) -> bool {
        if self.closed {
            return self.winding_number(z) > 0.5;
        }
        // close the open polygon far below and test membership in the lower piece
        let first = self.points[0];
        let last = self.points[self.len() - 1];
        let depth = 1e3 * (1.0 + (last - first).norm() + z.norm());
        let mut poly: Vec<Complex64> = self.points.clone();
        poly.push(Complex64::new(last.re, last.im.min(z.im) - depth));
        poly.push(Complex64::new(first.re, first.im.min(z.im) - depth));
        let mut total = 0.0;
        for j in 0..poly.len() {
            let a = poly[j] - z;
            let b = poly[(j + 1) % poly.len()] - z;
            total += (b / a).arg();
        }
        // the closure runs first -> last -> down -> back: clockwise around points below
        (total / (2.0 * PI)).abs() < 0.5
    }

    /// Rigid motion / scaling `z -> a z + b` applied to the curve.
    pub fn transformed(&self, a: Complex64, b: Complex64) -> Result<Self> {
        Self::new(
            self.params.clone(),
            self.points.iter().map(|&p| a * p + b).collect(),
            self.derivs.iter().map(|&d| a * d).collect(),
            self.closed,
        )
    }

    /// Diameter proxy: the largest distance from the sample centroid, doubled.
    pub fn diameter_proxy(&self) -> f64 {
        let c: Complex64 = self.points.iter().sum::<Complex64>() / self.len() as f64;
        2.0 * self.points.iter().map(|p| (p - c).norm()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn distance_to_real_line() {
        let line = ParametricCurve::real_line(2048, 4.0).unwrap();
        assert!((line.distance(c(3.0, 4.0)) - 4.0).abs() < 1e-6);
    }

    #[test]
    fn distance_to_unit_circle() {
        let circ = ParametricCurve::unit_circle(256).unwrap();
        assert!((circ.distance(c(0.5, 0.0)) - 0.5).abs() < 1e-6);
        assert!((circ.distance(c(0.3, 0.4)) - 0.5).abs() < 1e-6);
    }

    #[test]
    fn distance_to_segment_endpoint() {
        let seg = ParametricCurve::segment(c(0.0, 0.0), c(1.0, 0.0), 2).unwrap();
        assert!((seg.distance(c(2.0, 1.0)) - 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn distance_vanishes_on_samples() {
        let circ = ParametricCurve::unit_circle(64).unwrap();
        for p in &circ.points {
            assert_eq!(circ.distance(*p), 0.0);
        }
    }

    #[test]
    fn rejects_zero_derivative() {
        let r = ParametricCurve::new(vec![0.0, 1.0], vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(0.0, 0.0); 2], false);
        assert!(r.is_err());
    }

    #[test]
    fn region_sides() {
        let circ = ParametricCurve::unit_circle(128).unwrap();
        assert!(circ.is_left(c(0.2, 0.1)));
        assert!(!circ.is_left(c(1.2, 0.1)));
        let line = ParametricCurve::real_line(512, 2.0).unwrap();
        assert!(line.is_left(c(0.3, 0.1)));
        assert!(!line.is_left(c(0.3, -0.1)));
        assert!(line.is_left(c(50.0, 0.5)));
        assert!(Region::InsideCurve.check(&line).is_err());
        assert!(Region::UpperHalf.check(&line).is_ok());
    }

    #[test]
    fn circle_arclength() {
        let circ = ParametricCurve::unit_circle(100).unwrap();
        let (_, total) = circ.arclength();
        assert!((total - 2.0 * PI).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn distance_is_one_lipschitz(ax in -3.0f64..3.0, ay in -3.0f64..3.0, bx in -3.0f64..3.0, by in -3.0f64..3.0) {
            let circ = ParametricCurve::circle(c(0.2, -0.1), 1.3, 128).unwrap();
            let (a, b) = (c(ax, ay), c(bx, by));
            let lhs = (circ.distance(a) - circ.distance(b)).abs();
            prop_assert!(lhs <= (a - b).norm() + 1e-6);
        }
    }
}

//! Cauchy integrals along sampled curves, Plemelj boundary values, H^∞
//! profiles and the correction term `H` of the half-plane reduction.

use std::f64::consts::PI;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beltrami::{BeltramiField, PlanarMap};
use crate::curve::{ParametricCurve, Region};
use crate::error::{QlabError, Result};
use crate::grid::GridField;
use crate::transforms::SUPPORT_EPS;

/// Evaluation points closer than this many local sample spacings are refused.
pub const NEAR_GUARD: f64 = 3.0;
const JUMP_TOL: f64 = 1e-3;
const TAIL_TOL: f64 = 1e-3;

pub const BOUNDED_SLOPE: f64 = -0.05;
pub const UNBOUNDED_SLOPE: f64 = -0.3;

/// Samples `g(φ(τ_j))` of a bounded function on a curve.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFunction {
    pub samples: Vec<Complex64>,
    pub sup_norm: f64,
}

impl BoundaryFunction {
    pub fn new(samples: Vec<Complex64>) -> Result<Self> {
        if samples.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(QlabError::InvalidCurve("boundary function has non-finite samples".into()));
        }
        let sup_norm = samples.iter().map(|v| v.norm()).fold(0.0, f64::max);
        Ok(Self { samples, sup_norm })
    }

    pub fn from_fn<F: Fn(Complex64) -> Complex64>(curve: &ParametricCurve, f: F) -> Result<Self> {
        Self::new(curve.points.iter().map(|&p| f(p)).collect())
    }
}

/// Named boundary functions with closed-form Cauchy integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BuiltinG {
    One,
    Identity,
    Pole(Complex64),
    /// 1 on the second half of the parameter range, 0 on the first.
    Step,
}

impl FromStr for BuiltinG {
    type Err = QlabError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "one" => Ok(Self::One),
            "identity" => Ok(Self::Identity),
            "step" => Ok(Self::Step),
            _ => {
                let p = s
                    .strip_prefix("pole:")
                    .ok_or_else(|| QlabError::Config(format!("unknown boundary function '{s}'")))?;
                let p = Complex64::from_str(p.trim()).map_err(|_| QlabError::Config(format!("bad pole '{p}'")))?;
                Ok(Self::Pole(p))
            }
        }
    }
}

impl BuiltinG {
    pub fn sample(&self, curve: &ParametricCurve) -> Result<BoundaryFunction> {
        let mid = if curve.closed { PI } else { 0.0 };
        let samples = curve
            .points
            .iter()
            .zip(&curve.params)
            .map(|(&w, &t)| match self {
                Self::One => Complex64::new(1.0, 0.0),
                Self::Identity => w,
                Self::Pole(p) => 1.0 / (w - p),
                Self::Step => Complex64::new(if t >= mid { 1.0 } else { 0.0 }, 0.0),
            })
            .collect();
        BoundaryFunction::new(samples)
    }
}

/// Quadrature of `(1/2πi) ∫_Γ g(ω)/(ω − z) dω` with the constant part of
/// `g` near the evaluation point subtracted and integrated exactly.
///
/// On unbounded curves with different limits of `g` at the two ends the
/// integral diverges logarithmically; the kernel is then renormalized to
/// `1/(ω − z) − 1/(ω − z*)`, which shifts the result by a constant. That
/// constant is fixed so that a straight line carrying a unit step between
/// the two middle samples gets `i Log(−(z − p))/(2π)`, the log-subtracted integral.
#[derive(Debug)]
pub struct CauchyEvaluator<'a> {
    curve: &'a ParametricCurve,
    g: &'a BoundaryFunction,
    weights: Vec<Complex64>,
    renorm: Option<Complex64>,
    shift: Complex64,
}

impl<'a> CauchyEvaluator<'a> {
    pub fn new(curve: &'a ParametricCurve, g: &'a BoundaryFunction) -> Result<Self> {
        let n = curve.len();
        if g.samples.len() != n {
            return Err(QlabError::InvalidCurve(format!("{} samples for a curve of {n} points", g.samples.len())));
        }
        let dt = curve.dparam();
        let weights = curve.derivs.iter().map(|&d| d * dt).collect();
        let mut renorm = None;
        let mut shift = Complex64::new(0.0, 0.0);
        if !curve.closed {
            let scale = 1.0 + g.sup_norm;
            let s = &g.samples;
            let settle = (s[0] - s[1]).norm().max((s[n - 1] - s[n - 2]).norm());
            if settle > TAIL_TOL * scale {
                return Err(QlabError::TailDivergence { mismatch: settle });
            }
            if (s[n - 1] - s[0]).norm() > 1e-9 * scale {
                let zs = reference_point(curve);
                let p = 0.5 * (curve.points[n / 2 - 1] + curve.points[n / 2]);
                let log = (p - zs).ln();
                shift = 0.5 * s[0] + (s[n - 1] - s[0]) * Complex64::i() * log / (2.0 * PI);
                renorm = Some(zs);
            }
        }
        Ok(Self { curve, g, weights, renorm, shift })
    }

    pub fn renormalized(&self) -> bool {
        self.renorm.is_some()
    }

    fn guard(&self, z: Complex64) -> Result<usize> {
        let (j, _) = self.curve.nearest_sample(z);
        let d = self.curve.distance(z);
        let guard = NEAR_GUARD * self.curve.local_spacing(j);
        if d < guard {
            return Err(QlabError::NearCurve { distance: d, guard });
        }
        Ok(j)
    }

    /// `(1/2πi) ∫ dω/(ω − z)` in the same (possibly renormalized) sense.
    fn constant_part(&self, z: Complex64) -> f64 {
        let left = self.curve.is_left(z);
        match (self.curve.closed, self.renorm) {
            (true, _) => {
                if left {
                    1.0
                } else {
                    0.0
                }
            }
            (false, None) => {
                if left {
                    0.5
                } else {
                    -0.5
                }
            }
            (false, Some(_)) => {
                if left {
                    0.0
                } else {
                    -1.0
                }
            }
        }
    }

    fn kernel(&self, w: Complex64, z: Complex64) -> Complex64 {
        match self.renorm {
            Some(zs) => (z - zs) / ((w - z) * (w - zs)),
            None => 1.0 / (w - z),
        }
    }

    pub fn value(&self, z: Complex64) -> Result<Complex64> {
        let j = self.guard(z)?;
        let g0 = self.g.samples[j];
        let mut acc = Complex64::new(0.0, 0.0);
        for ((&w, &wt), &gv) in self.curve.points.iter().zip(&self.weights).zip(&self.g.samples) {
            acc += (gv - g0) * wt * self.kernel(w, z);
        }
        Ok(acc / (2.0 * PI * Complex64::i()) + g0 * self.constant_part(z) + self.shift)
    }

    /// `G'(z) = (1/2πi) ∫ g(ω)/(ω − z)² dω`.
    pub fn derivative(&self, z: Complex64) -> Result<Complex64> {
        let j = self.guard(z)?;
        let g0 = self.g.samples[j];
        let mut acc = Complex64::new(0.0, 0.0);
        for ((&w, &wt), &gv) in self.curve.points.iter().zip(&self.weights).zip(&self.g.samples) {
            let u = w - z;
            acc += (gv - g0) * wt / (u * u);
        }
        Ok(acc / (2.0 * PI * Complex64::i()))
    }

    /// Boundary values `(g₊, g₋)` at sample `j`, `+` on the left of the curve.
    pub fn plemelj(&self, j: usize) -> Result<(Complex64, Complex64)> {
        let c = self.curve;
        let n = c.len();
        let zj = c.points[j];
        let gj = self.g.samples[j];
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..n {
            if k != j {
                acc += (self.g.samples[k] - gj) * self.weights[k] * self.kernel(c.points[k], zj);
            }
        }
        // diagonal limit of (g(ω) − g_j)/(ω − z_j) dω is dg/dτ dτ
        acc += self.dg_dtau(j) * c.dparam();
        let pv_const = if c.closed { Complex64::new(0.0, PI) } else { Complex64::new(0.0, self.open_angle(j)) };
        let pv_const = match self.renorm {
            Some(_) => pv_const - Complex64::new(0.0, PI),
            None => pv_const,
        };
        let pv = (acc + gj * pv_const) / (2.0 * PI * Complex64::i()) + self.shift;
        let (gp, gm) = (0.5 * gj + pv, -0.5 * gj + pv);
        let defect = (gp - gm - gj).norm();
        let tolerance = JUMP_TOL * (1.0 + self.g.sup_norm);
        if defect > tolerance {
            return Err(QlabError::JumpMismatch { defect, tolerance });
        }
        Ok((gp, gm))
    }

    /// Fourth-order central difference, second order near open ends.
    fn dg_dtau(&self, j: usize) -> Complex64 {
        let s = &self.g.samples;
        let n = s.len();
        let dt = self.curve.dparam();
        let at = |k: isize| -> Option<Complex64> {
            if self.curve.closed {
                Some(s[k.rem_euclid(n as isize) as usize])
            } else if k >= 0 && (k as usize) < n {
                Some(s[k as usize])
            } else {
                None
            }
        };
        let j = j as isize;
        match (at(j - 2), at(j - 1), at(j + 1), at(j + 2)) {
            (Some(a), Some(b), Some(c), Some(d)) => (a - 8.0 * b + 8.0 * c - d) / (12.0 * dt),
            (_, Some(b), Some(c), _) => (c - b) / (2.0 * dt),
            (_, None, Some(c), _) => (c - s[j as usize]) / dt,
            (_, Some(b), None, _) => (s[j as usize] - b) / dt,
            _ => Complex64::new(0.0, 0.0),
        }
    }

    /// Total turning of `arg(ω − z_j)` along an unbounded curve, excluding the
    /// half-turn at `z_j`, with the ends taken to `∓∞` along the real axis.
    fn open_angle(&self, j: usize) -> f64 {
        let c = self.curve;
        let n = c.len();
        let zj = c.points[j];
        let tangent = c.derivs[j].arg();
        let unwrap = |prev: f64, target: f64| prev + wrap(target - prev);
        // from −∞ (arg π) to the sample before z_j, then into z_j along −φ'
        let mut a = PI;
        for k in 0..j {
            a = unwrap(a, (c.points[k] - zj).arg());
        }
        a = unwrap(a, tangent + PI);
        // leave z_j along +φ' (a half-turn back), continue to +∞ (arg 0);
        // the turning before z_j is a − π and after it b − (a − π), so the
        // total is b
        let mut b = a - PI;
        for k in j + 1..n {
            b = unwrap(b, (c.points[k] - zj).arg());
        }
        unwrap(b, 0.0)
    }
}

fn wrap(a: f64) -> f64 {
    let mut a = a % (2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    } else if a < -PI {
        a += 2.0 * PI;
    }
    a
}

/// A point well above an unbounded curve, for renormalizing the kernel.
fn reference_point(curve: &ParametricCurve) -> Complex64 {
    let mid = curve.points[curve.len() / 2];
    let spread = curve.points.iter().filter(|p| (*p - mid).norm() < 10.0).map(|p| (p.im - mid.im).abs()).fold(0.0, f64::max);
    mid + Complex64::new(0.0, 1.0 + 2.0 * spread)
}

pub fn cauchy_integral(curve: &ParametricCurve, g: &BoundaryFunction, z: Complex64) -> Result<Complex64> {
    CauchyEvaluator::new(curve, g)?.value(z)
}

pub fn plemelj_values(curve: &ParametricCurve, g: &BoundaryFunction, j: usize) -> Result<(Complex64, Complex64)> {
    CauchyEvaluator::new(curve, g)?.plemelj(j)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundedness {
    Bounded,
    Unbounded,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HinfProfile {
    pub levels: Vec<f64>,
    pub sup_values: Vec<f64>,
    /// Evaluation points used per level.
    pub counts: Vec<usize>,
    pub classification: Boundedness,
    pub slope: f64,
}

/// Sup of `|C_Γ(g)|` on offset curves at distances `2^{-m}`, `m = 1..=m_max`,
/// inside `region`, and a boundedness classification from the finest levels.
///
/// The slope is that of `sup/‖g‖∞` against `log10 d`: log growth
/// `(1/2π) log(1/d)` gives `−ln 10/(2π) ≈ −0.37`.
pub fn hinf_profile(curve: &ParametricCurve, g: &BoundaryFunction, region: Region, m_max: usize) -> Result<HinfProfile> {
    region.check(curve)?;
    let eval = CauchyEvaluator::new(curve, g)?;
    let orient = region.orientation();
    let n = curve.len();
    let min_spacing = (0..n).map(|j| curve.local_spacing(j)).fold(f64::INFINITY, f64::min);
    let mut levels = Vec::new();
    let mut sups = Vec::new();
    let mut counts = Vec::new();
    for m in 1..=m_max {
        let d = 0.5f64.powi(m as i32);
        let stride = ((0.5 * d / min_spacing).floor() as usize).max(1);
        let idx: Vec<usize> = (0..n)
            .step_by(stride)
            .filter(|&j| NEAR_GUARD * curve.local_spacing(j) < 0.9 * d)
            .collect();
        let vals: Vec<Option<f64>> = idx
            .par_iter()
            .map(|&j| {
                let z = curve.points[j] + orient * d * curve.left_normal(j);
                if curve.distance(z) < 0.5 * d {
                    return None;
                }
                eval.value(z).ok().map(|v| v.norm())
            })
            .collect();
        let used: Vec<f64> = vals.into_iter().flatten().collect();
        if used.is_empty() {
            continue;
        }
        levels.push(d);
        sups.push(used.iter().copied().fold(0.0, f64::max));
        counts.push(used.len());
    }
    if levels.len() < 3 {
        return Err(QlabError::InsufficientSamples(format!(
            "only {} usable offset levels; refine the curve sampling",
            levels.len()
        )));
    }
    let scale = if g.sup_norm > 0.0 { g.sup_norm } else { 1.0 };
    let k = levels.len();
    let xs: Vec<f64> = levels[k - 3..].iter().map(|d| d.log10()).collect();
    let ys: Vec<f64> = sups[k - 3..].iter().map(|s| s / scale).collect();
    let slope = lsq_slope(&xs, &ys);
    let monotone = ys.windows(2).all(|w| w[1] > w[0]);
    let classification = if slope >= BOUNDED_SLOPE {
        Boundedness::Bounded
    } else if slope <= UNBOUNDED_SLOPE && monotone {
        Boundedness::Unbounded
    } else {
        Boundedness::Inconclusive
    };
    Ok(HinfProfile { levels, sup_values: sups, counts, classification, slope })
}

/// Least-squares slope of `ys` against `xs`.
pub fn lsq_slope(xs: &[f64], ys: &[f64]) -> f64 {
    lsq_fit(xs, ys).0
}

/// Least-squares line `(slope, intercept, r²)`.
pub fn lsq_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, my - slope * mx, r2)
}

/// `∂G̃ = (G'∘ρ)·∂ρ` at the grid nodes where `μ ≠ 0`, zero elsewhere.
pub fn dtilde_g(mu: &BeltramiField, map: &PlanarMap, eval: &CauchyEvaluator) -> Result<GridField> {
    let grid = mu.grid();
    let rho = map.rho_samples();
    let vals: Vec<Result<Complex64>> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            if mu.mu.values[k].norm() < SUPPORT_EPS {
                return Ok(Complex64::new(0.0, 0.0));
            }
            Ok(eval.derivative(rho.values[k])? * map.dz_field.values[k])
        })
        .collect();
    GridField::new(grid, vals.into_iter().collect::<Result<Vec<_>>>()?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HCorrection {
    pub a: f64,
    /// Direct quadrature of `(1/πi) ∬ μ ∂G̃ / (z − a)`.
    pub value: Complex64,
    /// `(k, 2^{k+1} mass_τ(B_k)^{1/2} mass_λ(B_k)^{1/2})` with `B_k = B_a(2^{-k})`.
    pub terms: Vec<(i32, f64)>,
}

impl HCorrection {
    pub fn bound(&self) -> f64 {
        self.terms.iter().map(|t| t.1).sum()
    }
}

/// The correction `H(a)` and its dyadic Cauchy–Schwarz bound terms, for
/// `k` from the first ball containing the support of `μ` up to `k_max`.
///
/// `τ = |μ|²/|y|` and `λ = |∂G̃|²|y|` are taken with `|y|` clamped below at
/// `h/2`; `λ` is restricted to the support of `μ`, which is where the bound
/// is applied.
pub fn h_correction(mu: &BeltramiField, dtilde: &GridField, a: f64, k_max: i32) -> Result<HCorrection> {
    let grid = mu.grid();
    let a_z = Complex64::new(a, 0.0);
    if !grid.contains(a_z) {
        return Err(QlabError::OutOfDomain(a_z));
    }
    let area = grid.cell_area();
    let clamp = 0.5 * grid.h;
    // (distance to a, τ density, λ density, contribution to H)
    let mut support: Vec<(f64, f64, f64)> = Vec::new();
    let mut value = Complex64::new(0.0, 0.0);
    for k in 0..grid.len() {
        let m = mu.mu.values[k];
        if m.norm() < SUPPORT_EPS {
            continue;
        }
        let z = grid.node(k % grid.nx, k / grid.nx);
        let y = z.im.abs().max(clamp);
        let dg = dtilde.values[k];
        let r = (z - a_z).norm();
        if r > 0.0 {
            value += m * dg / (z - a_z) * area;
        }
        support.push((r, m.norm_sqr() / y * area, dg.norm_sqr() * y * area));
    }
    let value = value / (PI * Complex64::i());
    let r_far = support.iter().map(|s| s.0).fold(0.0, f64::max);
    let k_min = if r_far > 0.0 { -(r_far.log2().ceil() as i32) } else { 0 };
    let mut terms = Vec::new();
    for k in k_min..=k_max {
        let r = 2f64.powi(-k);
        let (mut t, mut l) = (0.0, 0.0);
        for s in &support {
            if s.0 < r {
                t += s.1;
                l += s.2;
            }
        }
        terms.push((k, 2f64.powi(k + 1) * t.sqrt() * l.sqrt()));
    }
    Ok(HCorrection { a, value, terms })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn parses_builtins() {
        assert_eq!("one".parse::<BuiltinG>().unwrap(), BuiltinG::One);
        assert_eq!("pole:2i".parse::<BuiltinG>().unwrap(), BuiltinG::Pole(c(0.0, 2.0)));
        assert_eq!("pole:0.5-1i".parse::<BuiltinG>().unwrap(), BuiltinG::Pole(c(0.5, -1.0)));
        assert!("wave".parse::<BuiltinG>().is_err());
    }

    #[test]
    fn near_curve_is_refused() {
        let circ = ParametricCurve::unit_circle(64).unwrap();
        let g = BuiltinG::One.sample(&circ).unwrap();
        assert!(matches!(cauchy_integral(&circ, &g, c(1.01, 0.0)), Err(QlabError::NearCurve { .. })));
    }

    #[test]
    fn unsettled_tail_is_refused() {
        let line = ParametricCurve::real_line(64, 1.0).unwrap();
        let g = BoundaryFunction::from_fn(&line, |w| c((w.re).sin(), 0.0)).unwrap();
        assert!(matches!(CauchyEvaluator::new(&line, &g), Err(QlabError::TailDivergence { .. })));
    }

    #[test]
    fn straight_line_has_no_turning() {
        let line = ParametricCurve::real_line(128, 1.0).unwrap();
        let g = BuiltinG::One.sample(&line).unwrap();
        let e = CauchyEvaluator::new(&line, &g).unwrap();
        for j in [1, 40, 64, 100] {
            assert!(e.open_angle(j).abs() < 1e-12);
        }
    }

    #[test]
    fn lsq_recovers_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x - 1.0).collect();
        let (s, b, r2) = lsq_fit(&xs, &ys);
        assert!((s - 2.0).abs() < 1e-12 && (b + 1.0).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
    }
}

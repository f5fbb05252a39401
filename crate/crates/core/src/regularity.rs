//! Curve and map regularity: dilatation RMS `ω(z,t)`, the logarithmic
//! derivative β and the Dynkin bound, Hölder and Hardy–Littlewood
//! exponents, chord-arc metrics and dyadic BMO / A∞ indicators.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beltrami::BeltramiField;
use crate::cauchy::lsq_fit;
use crate::curve::ParametricCurve;
use crate::error::{QlabError, Result};

pub const DEFAULT_DYNKIN_C: f64 = 10.0;
const DEGENERATE: f64 = 1e-14;
/// Below this many cells of radius, `ω` switches to polar quadrature.
const POLAR_CELLS: f64 = 4.0;
const MIN_PAIRS: usize = 32;
const MIN_DYADIC: usize = 8;
const A_INF_FAIL: f64 = 0.9;
const A_INF_MARGIN: f64 = 0.8;

/// `((1/πt²) ∬_{B_z(t)} |μ|²)^{1/2}`.
pub fn omega_ms(mu: &BeltramiField, z: Complex64, t: f64) -> Result<f64> {
    let f = &mu.mu;
    let g = &f.grid;
    if !(t > 0.0) || !g.contains(z - t) || !g.contains(z + t) || !g.contains(z - Complex64::new(0.0, t)) || !g.contains(z + Complex64::new(0.0, t)) {
        return Err(QlabError::OutOfDomain(z));
    }
    if t < POLAR_CELLS * g.h {
        // polar midpoint rule on interpolated samples, area weighted
        let (nr, nt) = (16, 64);
        let (mut acc, mut wsum) = (0.0, 0.0);
        for a in 0..nr {
            let r = t * (a as f64 + 0.5) / nr as f64;
            for b in 0..nt {
                let w = z + Complex64::from_polar(r, TAU * b as f64 / nt as f64);
                acc += r * f.interpolate(w)?.norm_sqr();
                wsum += r;
            }
        }
        return Ok((acc / wsum).sqrt());
    }
    let t2 = t * t;
    let (mut acc, mut count) = (0.0, 0usize);
    for j in g.y_range(z.im - t, z.im + t) {
        for i in g.x_range(z.re - t, z.re + t) {
            if (g.node(i, j) - z).norm_sqr() < t2 {
                acc += f.at(i, j).norm_sqr();
                count += 1;
            }
        }
    }
    Ok((acc / count.max(1) as f64).sqrt())
}

/// `β(z) = (1 − |z|)|f″(z)/f′(z)|`.
pub fn beta_log_derivative<D1, D2>(df: D1, d2f: D2, z: Complex64) -> Result<f64>
where
    D1: Fn(Complex64) -> Complex64,
    D2: Fn(Complex64) -> Complex64,
{
    if z.norm() >= 1.0 {
        return Err(QlabError::OutOfDomain(z));
    }
    let d1 = df(z);
    if d1.norm() < DEGENERATE {
        return Err(QlabError::DegenerateDerivative(z));
    }
    Ok((1.0 - z.norm()) * (d2f(z) / d1).norm())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynkinCheck {
    pub z: Complex64,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// `(1−|z|)|f″/f′| ≤ C(1−|z|)^{1−k}[1 + ∫_{1−|z|}^1 ω(z,t)/t^{2−k} dt]`.
///
/// The integral is taken in `u = ln t` by trapezoid, doubling the node count
/// until the change drops below 1e-4 relative.
pub fn dynkin_check<D1, D2>(df: D1, d2f: D2, mu: &BeltramiField, z: Complex64, c: f64) -> Result<DynkinCheck>
where
    D1: Fn(Complex64) -> Complex64,
    D2: Fn(Complex64) -> Complex64,
{
    let lhs = beta_log_derivative(df, d2f, z)?;
    let k = mu.k;
    let d = 1.0 - z.norm();
    let (u0, u1) = (d.ln(), 0.0);
    let integrand = |u: f64| -> Result<f64> {
        let t = u.exp();
        Ok(omega_ms(mu, z, t)? * t.powf(k - 1.0))
    };
    let mut n = 8usize;
    let mut vals: Vec<f64> = (0..=n).map(|a| integrand(u0 + (u1 - u0) * a as f64 / n as f64)).collect::<Result<_>>()?;
    let trap = |vals: &[f64]| {
        let m = vals.len() - 1;
        (u1 - u0) / m as f64 * (vals.iter().sum::<f64>() - 0.5 * (vals[0] + vals[m]))
    };
    let mut integral = trap(&vals);
    while n < 512 {
        n *= 2;
        let mut next = Vec::with_capacity(n + 1);
        for a in 0..=n {
            next.push(if a % 2 == 0 { vals[a / 2] } else { integrand(u0 + (u1 - u0) * a as f64 / n as f64)? });
        }
        vals = next;
        let refined = trap(&vals);
        let done = (refined - integral).abs() <= 1e-4 * refined.abs().max(1e-300);
        integral = refined;
        if done {
            break;
        }
    }
    let rhs = c * d.powf(1.0 - k) * (1.0 + integral);
    Ok(DynkinCheck { z, lhs, rhs, pass: lhs <= rhs })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub alpha: f64,
    /// Slope before clamping to `[0, 1]`.
    pub raw: f64,
    pub r2: f64,
}

/// Hölder exponent of uniformly spaced samples with spacing `dtau` from the
/// maximal increments at the given lags (in samples).
pub fn holder_exponent<T>(samples: &[T], dtau: f64, lags: &[usize], periodic: bool) -> Result<ExponentFit>
where
    T: Copy + Sync + Into<Complex64>,
{
    let n = samples.len();
    let pairs = |lag: usize| if periodic { n } else { n.saturating_sub(lag) };
    let usable: Vec<usize> = lags.iter().copied().filter(|&l| l > 0 && pairs(l) >= MIN_PAIRS && (!periodic || l < n)).collect();
    if usable.len() < 4 {
        return Err(QlabError::InsufficientSamples(format!(
            "need 4 scales with {MIN_PAIRS} pairs each, have {}",
            usable.len()
        )));
    }
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for &lag in &usable {
        let m = (0..pairs(lag))
            .into_par_iter()
            .map(|i| (samples[(i + lag) % n].into() - samples[i].into()).norm())
            .reduce(|| 0.0, f64::max);
        if m <= 0.0 {
            continue;
        }
        xs.push((lag as f64 * dtau).ln());
        ys.push(m.ln());
    }
    if xs.len() < 2 {
        // constant samples are as smooth as can be
        return Ok(ExponentFit { alpha: 1.0, raw: f64::INFINITY, r2: 1.0 });
    }
    let (slope, _, r2) = lsq_fit(&xs, &ys);
    Ok(ExponentFit { alpha: slope.clamp(0.0, 1.0), raw: slope, r2 })
}

/// Dyadic lags `2^j` for `j_min ≤ j ≤ j_max`.
pub fn dyadic_lags(j_min: u32, j_max: u32) -> Vec<usize> {
    (j_min..=j_max).map(|j| 1usize << j).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardyLittlewoodFit {
    pub alpha_fit: f64,
    pub r2: f64,
    /// `f″` vanished on every circle.
    pub zero_derivative: bool,
}

/// `α = 1 + slope` of `log max_{|z|=r} |f″|` against `log(1 − r)`.
pub fn hardy_littlewood_fit<D2>(d2f: D2, radii: &[f64]) -> HardyLittlewoodFit
where
    D2: Fn(Complex64) -> Complex64 + Sync,
{
    let nt = 2048;
    let maxima: Vec<f64> = radii
        .iter()
        .map(|&r| (0..nt).into_par_iter().map(|b| d2f(Complex64::from_polar(r, TAU * b as f64 / nt as f64)).norm()).reduce(|| 0.0, f64::max))
        .collect();
    if maxima.iter().all(|&m| m < DEGENERATE) || radii.len() < 2 {
        return HardyLittlewoodFit { alpha_fit: 1.0, r2: 1.0, zero_derivative: true };
    }
    let xs: Vec<f64> = radii.iter().map(|r| (1.0 - r).ln()).collect();
    let ys: Vec<f64> = maxima.iter().map(|m| m.max(DEGENERATE).ln()).collect();
    let (slope, _, r2) = lsq_fit(&xs, &ys);
    HardyLittlewoodFit { alpha_fit: 1.0 + slope, r2, zero_derivative: false }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChordArc {
    pub constant: f64,
    /// `(s, max arc/chord over pairs with chord ≤ s)` for dyadic `s`, increasing.
    pub profile: Vec<(f64, f64)>,
}

impl ChordArc {
    /// Max ratio over pairs with chord at most `s`; 1 below the smallest tabulated chord.
    pub fn at(&self, s: f64) -> f64 {
        self.profile.iter().filter(|p| p.0 <= s).map(|p| p.1).fold(1.0, f64::max)
    }
}

/// Max of shorter-arc length over chord across sample pairs, with its
/// small-chord profile.
pub fn chord_arc_metrics(curve: &ParametricCurve) -> ChordArc {
    // polyline length: derivative quadrature overshoots where the parametrization runs off to infinity
    let n = curve.len();
    let closed = curve.closed;
    let mut s = vec![0.0; n];
    for j in 1..n {
        s[j] = s[j - 1] + (curve.points[j] - curve.points[j - 1]).norm();
    }
    let total = if closed { s[n - 1] + (curve.points[0] - curve.points[n - 1]).norm() } else { s[n - 1] };
    let diam = curve.diameter_proxy().max(f64::MIN_POSITIVE);
    // dyadic chord bins below the diameter
    let n_bins = 40usize;
    let bin_of = |chord: f64| ((diam / chord).log2().floor().max(0.0) as usize).min(n_bins - 1);
    let bins = (0..n)
        .into_par_iter()
        .fold(
            || vec![1.0f64; n_bins],
            |mut acc, i| {
                for j in i + 1..n {
                    let chord = (curve.points[j] - curve.points[i]).norm();
                    if chord <= 0.0 {
                        continue;
                    }
                    let mut arc = s[j] - s[i];
                    if closed {
                        arc = arc.min(total - arc);
                    }
                    let b = bin_of(chord);
                    acc[b] = acc[b].max(arc / chord);
                }
                acc
            },
        )
        .reduce(|| vec![1.0f64; n_bins], |a, b| a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect());
    let constant = bins.iter().copied().fold(1.0, f64::max);
    // bin b holds chords in (diam 2^{-b-1}, diam 2^{-b}]; profile is cumulative from small chords
    let mut profile = Vec::with_capacity(n_bins);
    let mut running: f64 = 1.0;
    for b in (0..n_bins).rev() {
        running = running.max(bins[b]);
        profile.push((diam * 0.5f64.powi(b as i32), running));
    }
    ChordArc { constant, profile }
}

/// Dyadic intervals of sample indices with at least `MIN_DYADIC` samples.
fn dyadic_intervals(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut parts = 1usize;
    while n / parts >= MIN_DYADIC {
        for p in 0..parts {
            out.push((p * n / parts, (p + 1) * n / parts));
        }
        parts *= 2;
    }
    out
}

/// Max over dyadic intervals of the mean absolute deviation from the interval mean.
pub fn bmo_dyadic_norm(samples: &[f64]) -> Result<f64> {
    if samples.len() < 64 {
        return Err(QlabError::InsufficientSamples(format!("BMO needs 64 samples, got {}", samples.len())));
    }
    Ok(dyadic_intervals(samples.len())
        .par_iter()
        .map(|&(a, b)| {
            let w = &samples[a..b];
            let mean = w.iter().sum::<f64>() / w.len() as f64;
            w.iter().map(|v| (v - mean).abs()).sum::<f64>() / w.len() as f64
        })
        .reduce(|| 0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TriState {
    Pass,
    Fail,
    Inconclusive,
}

/// For each dyadic interval, the share of weight carried by its heaviest
/// quarter of samples. Fail above 0.9, Inconclusive above 0.8.
pub fn a_infinity_indicator(weights: &[f64]) -> Result<(TriState, f64)> {
    if weights.len() < 64 {
        return Err(QlabError::InsufficientSamples(format!("A∞ needs 64 samples, got {}", weights.len())));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(QlabError::InsufficientSamples("weights must be finite and nonnegative".into()));
    }
    let worst = dyadic_intervals(weights.len())
        .par_iter()
        .map(|&(a, b)| {
            let mut w = weights[a..b].to_vec();
            let total: f64 = w.iter().sum();
            if total <= 0.0 {
                return 0.0;
            }
            w.sort_by(|x, y| y.total_cmp(x));
            let q = w.len().div_ceil(4);
            w[..q].iter().sum::<f64>() / total
        })
        .reduce(|| 0.0, f64::max);
    let state = if worst > A_INF_FAIL {
        TriState::Fail
    } else if worst > A_INF_MARGIN {
        TriState::Inconclusive
    } else {
        TriState::Pass
    };
    Ok((state, worst))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub alpha_est: f64,
    pub fit_r2: f64,
    pub chord_arc_constant: f64,
    pub asymptotic_ratio_profile: Vec<(f64, f64)>,
    pub bmo_norm: f64,
    pub a_infinity_flag: TriState,
}

/// Hölder exponent of `φ′`, chord-arc metrics, and BMO / A∞ of `log|φ′|` and `|φ′|`.
pub fn curve_report(curve: &ParametricCurve) -> Result<RegularityReport> {
    let n = curve.len();
    let j_max = ((n / (4 * MIN_PAIRS)).max(1) as f64).log2().floor() as u32;
    let fit = holder_exponent(&curve.derivs, curve.dparam(), &dyadic_lags(0, j_max.min(10)), curve.closed)?;
    let ca = chord_arc_metrics(curve);
    let speed: Vec<f64> = curve.derivs.iter().map(|d| d.norm()).collect();
    let logs: Vec<f64> = speed.iter().map(|s| s.max(DEGENERATE).ln()).collect();
    Ok(RegularityReport {
        alpha_est: fit.alpha,
        fit_r2: fit.r2,
        chord_arc_constant: ca.constant,
        asymptotic_ratio_profile: ca.profile,
        bmo_norm: bmo_dyadic_norm(&logs)?,
        a_infinity_flag: a_infinity_indicator(&speed)?.0,
    })
}

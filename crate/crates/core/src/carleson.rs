//! Carleson norms of area densities over dyadic ball families centered on a
//! reference curve, the vanishing profile, and pushforwards under maps.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beltrami::{ball_mean, DifferentiableMap};
use crate::curve::ParametricCurve;
use crate::error::{QlabError, Result};
use crate::grid::{Grid, GridField};

/// Local exponent `α` in `density ~ dist^{-α}` at or above which a density
/// is flagged divergent near the reference curve.
const DIVERGENT_EXPONENT: f64 = 0.85;
/// Smallest usable radius in cells.
pub const MIN_RADIUS_CELLS: f64 = 8.0;
pub const DEFAULT_CENTERS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DensityKind {
    /// `|μ|²/|y|^{1+ε}`
    Mu2OverY { epsilon: f64 },
    /// `|μ|²/(|z| − 1)^{1+ε}` on `|z| > 1`
    Mu2OverDistCircle { epsilon: f64 },
    /// `τ = |μ|²/|y|`
    Mu2OverYPlain,
    /// `|G'|² δ_Γ`
    GPrime2Delta,
    Custom,
}

/// The curve that balls are centered on and distances are measured to.
#[derive(Debug, Clone)]
pub enum Reference {
    RealLine,
    UnitCircle,
    Sampled(ParametricCurve),
}

impl Reference {
    pub fn distance(&self, z: Complex64) -> f64 {
        match self {
            Reference::RealLine => z.im.abs(),
            Reference::UnitCircle => (z.norm() - 1.0).abs(),
            Reference::Sampled(c) => c.distance(z),
        }
    }
}

/// A nonnegative density sampled on a grid.
#[derive(Debug, Clone)]
pub struct CarlesonDensity {
    pub kind: DensityKind,
    pub grid: Grid,
    pub values: Vec<f64>,
    /// Lower clamp applied to the distance in singular weights.
    pub clamp: f64,
}

impl CarlesonDensity {
    pub fn custom(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(QlabError::InvalidGrid(format!("expected {} values, got {}", grid.len(), values.len())));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(QlabError::InvalidGrid("density must be finite and nonnegative".into()));
        }
        Ok(Self { kind: DensityKind::Custom, grid, values, clamp: 0.0 })
    }

    pub fn from_fn<F: Fn(Complex64) -> f64 + Sync>(grid: Grid, f: F) -> Result<Self> {
        let values = (0..grid.len()).into_par_iter().map(|k| f(grid.node(k % grid.nx, k / grid.nx))).collect();
        Self::custom(grid, values)
    }

    fn weighted(kind: DensityKind, mu: &GridField, weight: impl Fn(Complex64, f64) -> f64 + Sync) -> Self {
        let grid = mu.grid;
        let clamp = 0.5 * grid.h;
        let values = (0..grid.len())
            .into_par_iter()
            .map(|k| {
                let m2 = mu.values[k].norm_sqr();
                if m2 == 0.0 {
                    0.0
                } else {
                    m2 * weight(grid.node(k % grid.nx, k / grid.nx), clamp)
                }
            })
            .collect();
        Self { kind, grid, values, clamp }
    }

    pub fn mu2_over_y(mu: &GridField, epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        Ok(Self::weighted(DensityKind::Mu2OverY { epsilon }, mu, |z, cl| z.im.abs().max(cl).powf(-1.0 - epsilon)))
    }

    pub fn mu2_over_y_plain(mu: &GridField) -> Self {
        Self::weighted(DensityKind::Mu2OverYPlain, mu, |z, cl| 1.0 / z.im.abs().max(cl))
    }

    /// Zero inside the closed unit disk.
    pub fn mu2_over_dist_circle(mu: &GridField, epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        Ok(Self::weighted(DensityKind::Mu2OverDistCircle { epsilon }, mu, |z, cl| {
            let d = z.norm() - 1.0;
            if d <= 0.0 {
                0.0
            } else {
                d.max(cl).powf(-1.0 - epsilon)
            }
        }))
    }

    /// `|G'|² δ_Γ` from samples of `G'`; nodes with `G' = 0` are skipped.
    pub fn gprime2_delta(gprime: &GridField, curve: &ParametricCurve) -> Self {
        let grid = gprime.grid;
        let values = (0..grid.len())
            .into_par_iter()
            .map(|k| {
                let g2 = gprime.values[k].norm_sqr();
                if g2 == 0.0 {
                    0.0
                } else {
                    g2 * curve.distance(grid.node(k % grid.nx, k / grid.nx))
                }
            })
            .collect();
        Self { kind: DensityKind::GPrime2Delta, grid, values, clamp: 0.0 }
    }

    /// Mass of the open ball `B_c(r)` by the cell-center rule.
    pub fn mass(&self, c: Complex64, r: f64) -> f64 {
        let g = &self.grid;
        let xs = g.x_range(c.re - r, c.re + r);
        let r2 = r * r;
        let mut acc = 0.0;
        for j in g.y_range(c.im - r, c.im + r) {
            for i in xs.clone() {
                let v = self.values[j * g.nx + i];
                if v != 0.0 && (g.node(i, j) - c).norm_sqr() < r2 {
                    acc += v;
                }
            }
        }
        acc * g.cell_area()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(QlabError::Config(format!("epsilon must be finite and nonnegative, got {epsilon}")));
    }
    Ok(())
}

/// Ball centers on the reference curve and dyadic radii `R_max 2^{-j}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BallFamily {
    pub centers: Vec<Complex64>,
    pub radii: Vec<f64>,
    /// Whether radii below `MIN_RADIUS_CELLS` cells were dropped.
    pub truncated: bool,
}

impl BallFamily {
    pub fn new(centers: Vec<Complex64>, r_max: f64, j_max: usize, h: f64) -> Self {
        let all: Vec<f64> = (0..=j_max).map(|j| r_max * 0.5f64.powi(j as i32)).collect();
        let radii: Vec<f64> = all.iter().copied().filter(|&r| r >= MIN_RADIUS_CELLS * h * (1.0 - 1e-12)).collect();
        let truncated = radii.len() < all.len();
        Self { centers, radii, truncated }
    }

    /// Centers uniform on `[x0, x1] ⊂ ℝ`.
    pub fn on_real_line(x0: f64, x1: f64, n_centers: usize, r_max: f64, j_max: usize, h: f64) -> Self {
        let n = n_centers.max(1);
        let centers = (0..n)
            .map(|k| Complex64::new(if n == 1 { 0.5 * (x0 + x1) } else { x0 + (x1 - x0) * k as f64 / (n - 1) as f64 }, 0.0))
            .collect();
        Self::new(centers, r_max, j_max, h)
    }

    pub fn on_unit_circle(n_centers: usize, r_max: f64, j_max: usize, h: f64) -> Self {
        let centers = (0..n_centers).map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n_centers as f64)).collect();
        Self::new(centers, r_max, j_max, h)
    }

    /// Centers at samples spread uniformly in parameter over the samples lying in `grid`.
    pub fn on_curve(curve: &ParametricCurve, grid: &Grid, n_centers: usize, r_max: f64, j_max: usize) -> Self {
        let inside: Vec<Complex64> = curve.points.iter().copied().filter(|&p| grid.contains(p)).collect();
        let n = n_centers.max(1).min(inside.len().max(1));
        let centers = if inside.is_empty() {
            Vec::new()
        } else {
            (0..n).map(|k| inside[k * inside.len() / n]).collect()
        };
        Self::new(centers, r_max, j_max, grid.h)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CarlesonReport {
    pub centers: Vec<Complex64>,
    pub radii: Vec<f64>,
    /// `mass(B_center(R))/R`, indexed `[center][radius]`.
    pub masses: Vec<Vec<f64>>,
    /// Max of the table, `+∞` when divergent.
    pub norm: f64,
    /// `(r, sup over tabulated R ≤ r of mass/R)` at each tabulated radius, increasing `r`.
    pub vanishing_profile: Vec<(f64, f64)>,
    pub divergent: bool,
    /// Masses of the distance bands `[0,h), [h,2h), [2h,4h), [4h,8h)`.
    pub band_masses: Vec<f64>,
    pub truncated: bool,
    pub clamp: f64,
}

impl CarlesonReport {
    /// Sup of `mass/R` over tabulated `R ≤ r`.
    pub fn vanishing_profile(&self, r: f64) -> Result<f64> {
        let lo = self.vanishing_profile.first().map(|p| p.0).unwrap_or(0.0);
        let hi = self.vanishing_profile.last().map(|p| p.0).unwrap_or(0.0);
        if self.vanishing_profile.is_empty() || r < lo * (1.0 - 1e-12) || r > hi * (1.0 + 1e-12) {
            return Err(QlabError::RangeError { value: r, lo, hi });
        }
        Ok(self
            .vanishing_profile
            .iter()
            .filter(|p| p.0 <= r * (1.0 + 1e-12))
            .map(|p| p.1)
            .fold(0.0, f64::max))
    }

    /// Max of `mass/R` at one tabulated radius over all centers.
    pub fn sup_at(&self, radius_index: usize) -> f64 {
        self.masses.iter().map(|row| row[radius_index]).fold(0.0, f64::max)
    }
}

/// Masses of distance bands to the reference near the curve.
fn band_masses(density: &CarlesonDensity, reference: &Reference) -> Vec<f64> {
    let g = &density.grid;
    let h = g.h;
    let edges = [0.0, h, 2.0 * h, 4.0 * h, 8.0 * h];
    let mut bands = vec![0.0; edges.len() - 1];
    for (k, &v) in density.values.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        let d = reference.distance(g.node(k % g.nx, k / g.nx));
        for b in 0..bands.len() {
            if d >= edges[b] - 1e-9 * h && d < edges[b + 1] - 1e-9 * h {
                bands[b] += v;
            }
        }
    }
    bands.iter().map(|b| b * g.cell_area()).collect()
}

/// Divergence test: the mean density over the bands `[h,2h), [2h,4h), [4h,8h)`
/// grows toward the curve like `dist^{-α}` with `α` near 1 or more.
fn is_divergent(bands: &[f64]) -> bool {
    if bands[1] <= 0.0 || bands[2] <= 0.0 {
        return false;
    }
    // equal-mass dyadic bands mean α = 1
    let alpha = |inner: f64, outer: f64| if outer <= 0.0 { f64::INFINITY } else { (2.0 * inner / outer).log2() };
    alpha(bands[1], bands[2]).min(alpha(bands[2], bands[3])) >= DIVERGENT_EXPONENT
}

pub fn carleson_norm(density: &CarlesonDensity, reference: &Reference, family: &BallFamily) -> CarlesonReport {
    let bands = band_masses(density, reference);
    let divergent = is_divergent(&bands);
    let masses: Vec<Vec<f64>> = family
        .centers
        .par_iter()
        .map(|&c| family.radii.iter().map(|&r| density.mass(c, r) / r).collect())
        .collect();
    let finite_norm = masses.iter().flatten().copied().fold(0.0, f64::max);
    let norm = if divergent { f64::INFINITY } else { finite_norm };
    let mut order: Vec<usize> = (0..family.radii.len()).collect();
    order.sort_by(|&a, &b| family.radii[a].total_cmp(&family.radii[b]));
    let mut running: f64 = 0.0;
    let mut profile = Vec::with_capacity(order.len());
    for &k in &order {
        let col = masses.iter().map(|row| row[k]).fold(0.0, f64::max);
        running = running.max(col);
        profile.push((family.radii[k], if divergent { f64::INFINITY } else { running }));
    }
    CarlesonReport {
        centers: family.centers.clone(),
        radii: family.radii.clone(),
        masses,
        norm,
        vanishing_profile: profile,
        divergent,
        band_masses: bands,
        truncated: family.truncated,
        clamp: density.clamp,
    }
}

/// `ν(E) = Σ a_F(z) density(z) h²` over nodes with `F(z) ∈ E`, for each
/// target ball `E = B_c(r)`. `a_F` uses the ball `B_z(|y|/2)`; nodes on ℝ
/// are skipped.
pub fn pushforward_measure(
    map: &dyn DifferentiableMap,
    density: &CarlesonDensity,
    targets: &[(Complex64, f64)],
) -> Result<Vec<f64>> {
    let g = density.grid;
    // a target whose preimage reaches the grid frame cannot be measured on the grid
    let frame: Vec<Complex64> = (0..g.nx)
        .flat_map(|i| [g.node(i, 0), g.node(i, g.ny - 1)])
        .chain((0..g.ny).flat_map(|j| [g.node(0, j), g.node(g.nx - 1, j)]))
        .collect();
    for z in frame {
        let w = map.eval(z)?;
        if targets.iter().any(|&(c, r)| (w - c).norm() < r) {
            return Err(QlabError::OutOfDomain(z));
        }
    }
    let weighted: Vec<Option<(Complex64, f64)>> = (0..g.len())
        .into_par_iter()
        .map(|k| {
            let v = density.values[k];
            let z = g.node(k % g.nx, k / g.nx);
            if v == 0.0 || z.im == 0.0 {
                return Ok(None);
            }
            let af = ball_mean(z, 0.5 * z.im.abs(), |w| Ok(map.jacobian(w)?.max(0.0).sqrt()))?;
            Ok(Some((map.eval(z)?, af * v)))
        })
        .collect::<Result<Vec<_>>>()?;
    let area = g.cell_area();
    Ok(targets
        .iter()
        .map(|&(c, r)| weighted.iter().flatten().filter(|(w, _)| (w - c).norm() < r).map(|(_, m)| m).sum::<f64>() * area)
        .collect())
}

//! Principal solutions of the Beltrami equation `∂̄ρ = μ ∂ρ`, traced
//! quasicircles, and the distortion coefficient `a_F`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::curve::ParametricCurve;
use crate::error::{QlabError, Result};
use crate::grid::{Grid, GridField, Rect};
use crate::transforms::{cauchy_point, cauchy_point_dz, support_cells, TransformPlan, SUPPORT_EPS};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 200;

/// A compactly supported dilatation with `‖μ‖∞ < 1`.
#[derive(Debug, Clone)]
pub struct BeltramiField {
    pub mu: GridField,
    pub k: f64,
    pub support_box: Rect,
}

impl BeltramiField {
    pub fn new(mu: GridField, support_box: Rect) -> Result<Self> {
        let k = mu.sup_norm();
        if k >= 1.0 {
            return Err(QlabError::InvalidDilatation { k });
        }
        let outside = mu.sup_outside(&support_box);
        if outside >= SUPPORT_EPS {
            return Err(QlabError::SupportViolation { max_outside: outside });
        }
        if !mu.grid.inner_half().contains_rect(&support_box) {
            let inner = mu.grid.inner_half();
            let max_outside = mu.sup_outside(&inner);
            if max_outside >= SUPPORT_EPS {
                return Err(QlabError::SupportViolation { max_outside });
            }
        }
        Ok(Self { mu, k, support_box })
    }

    /// Wraps `mu`, taking the support box to be the bounding box of its
    /// nonzero samples padded by one cell.
    pub fn from_field(mu: GridField) -> Result<Self> {
        let g = mu.grid;
        let mut b = Rect::new(f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for j in 0..g.ny {
            for i in 0..g.nx {
                if mu.at(i, j).norm() >= SUPPORT_EPS {
                    let z = g.node(i, j);
                    b = Rect::new(b.x0.min(z.re), b.x1.max(z.re), b.y0.min(z.im), b.y1.max(z.im));
                }
            }
        }
        if b.x0 > b.x1 {
            let c = g.center();
            b = Rect::new(c.re, c.re, c.im, c.im);
        }
        let pad = g.h;
        Self::new(mu, Rect::new(b.x0 - pad, b.x1 + pad, b.y0 - pad, b.y1 + pad))
    }

    pub fn zero(grid: Grid) -> Self {
        let c = grid.center();
        Self { mu: GridField::zeros(grid), k: 0.0, support_box: Rect::new(c.re, c.re, c.im, c.im) }
    }

    pub fn grid(&self) -> Grid {
        self.mu.grid
    }

    /// `μ(z̄) = conj μ(z)` on the grid, up to `tol`. Requires a grid symmetric about ℝ.
    pub fn is_conjugation_symmetric(&self, tol: f64) -> bool {
        let g = self.grid();
        if (g.y0 + g.y1).abs() > 1e-9 * g.h {
            return false;
        }
        (0..g.ny).all(|j| (0..g.nx).all(|i| (self.mu.at(i, j) - self.mu.at(i, g.ny - 1 - j).conj()).norm() <= tol))
    }
}

/// A planar map with Wirtinger derivatives available pointwise.
pub trait DifferentiableMap: Sync {
    fn eval(&self, z: Complex64) -> Result<Complex64>;

    /// `(∂F, ∂̄F)` at `z`.
    fn derivatives(&self, z: Complex64) -> Result<(Complex64, Complex64)>;

    fn jacobian(&self, z: Complex64) -> Result<f64> {
        let (a, b) = self.derivatives(z)?;
        Ok(a.norm_sqr() - b.norm_sqr())
    }
}

/// `F(z) = a z + b`.
#[derive(Debug, Clone, Copy)]
pub struct AffineMap {
    pub a: Complex64,
    pub b: Complex64,
}

impl AffineMap {
    pub fn identity() -> Self {
        Self { a: Complex64::new(1.0, 0.0), b: Complex64::new(0.0, 0.0) }
    }

    pub fn scaling(s: f64) -> Self {
        Self { a: Complex64::new(s, 0.0), b: Complex64::new(0.0, 0.0) }
    }
}

impl DifferentiableMap for AffineMap {
    fn eval(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.a * z + self.b)
    }

    fn derivatives(&self, _z: Complex64) -> Result<(Complex64, Complex64)> {
        Ok((self.a, Complex64::new(0.0, 0.0)))
    }
}

/// The principal solution `ρ = z + C h` of `∂̄ρ = μ ∂ρ`.
#[derive(Debug, Clone)]
pub struct PlanarMap {
    /// Samples of `ρ(z) − z`.
    pub rho_field: GridField,
    /// Density `h = ∂̄ρ`.
    pub h_field: GridField,
    /// Samples of `∂ρ = 1 + S h`.
    pub dz_field: GridField,
    pub residual: f64,
    pub iterations: usize,
    pub k: f64,
    /// Relative step norms `‖h_{n+1} − h_n‖ / ‖h_n‖` per iteration.
    pub steps: Vec<f64>,
    pub normalization: &'static str,
    cells: Vec<(usize, Complex64)>,
}

impl PlanarMap {
    pub fn identity(grid: Grid) -> Self {
        let one = GridField::from_fn(grid, |_| Complex64::new(1.0, 0.0));
        Self {
            rho_field: GridField::zeros(grid),
            h_field: GridField::zeros(grid),
            dz_field: one,
            residual: 0.0,
            iterations: 0,
            k: 0.0,
            steps: Vec::new(),
            normalization: "principal",
            cells: Vec::new(),
        }
    }

    pub fn grid(&self) -> Grid {
        self.rho_field.grid
    }

    /// Samples of `ρ` itself.
    pub fn rho_samples(&self) -> GridField {
        self.rho_field.map(|z, v| z + v)
    }

    /// Observed contraction ratios between successive steps.
    pub fn contraction_ratios(&self) -> Vec<f64> {
        self.steps.windows(2).filter(|w| w[0] > 0.0).map(|w| w[1] / w[0]).collect()
    }

    /// Max of `|ρ(z) − z|·|z − c|` over the grid frame, `c` the grid center.
    /// Bounded for the principal normalization (`ρ − z = O(1/z)`).
    pub fn frame_decay_constant(&self) -> f64 {
        let g = self.grid();
        let c = g.center();
        let mut m: f64 = 0.0;
        let mut visit = |i: usize, j: usize| {
            m = m.max(self.rho_field.at(i, j).norm() * (g.node(i, j) - c).norm());
        };
        for i in 0..g.nx {
            visit(i, 0);
            visit(i, g.ny - 1);
        }
        for j in 0..g.ny {
            visit(0, j);
            visit(g.nx - 1, j);
        }
        m
    }

    /// Samples `ρ` along `x = span·tan(θ/2)`, `θ` uniform in `(−π, π)`.
    ///
    /// Derivative samples use `dρ/dθ = (∂ρ + ∂̄ρ)·dx/dθ` from the
    /// interpolated derivative fields (the far-field form outside the grid).
    pub fn trace_quasicircle(&self, n_points: usize, span: f64) -> Result<ParametricCurve> {
        let params = ParametricCurve::compact_params(n_points);
        let samples: Vec<Result<(Complex64, Complex64)>> = params
            .par_iter()
            .map(|&t| {
                let x = Complex64::new(span * (0.5 * t).tan(), 0.0);
                let dxdt = 0.5 * span / (0.5 * t).cos().powi(2);
                let (a, b) = self.derivatives(x)?;
                Ok((self.eval(x)?, (a + b) * dxdt))
            })
            .collect();
        let (mut points, mut derivs) = (Vec::with_capacity(n_points), Vec::with_capacity(n_points));
        for s in samples {
            let (p, d) = s?;
            points.push(p);
            derivs.push(d);
        }
        ParametricCurve::new(params, points, derivs, false)
    }

    /// Samples `ρ(c + r e^{iθ})` on a circle, `θ_j = 2πj/n`.
    pub fn trace_circle(&self, center: Complex64, radius: f64, n_points: usize) -> Result<ParametricCurve> {
        let params: Vec<f64> = (0..n_points).map(|j| 2.0 * PI * j as f64 / n_points as f64).collect();
        let samples: Vec<Result<(Complex64, Complex64)>> = params
            .par_iter()
            .map(|&t| {
                let e = Complex64::from_polar(1.0, t);
                let z = center + radius * e;
                let (a, b) = self.derivatives(z)?;
                let dz = Complex64::i() * radius * e;
                Ok((self.eval(z)?, a * dz + b * dz.conj()))
            })
            .collect();
        let (mut points, mut derivs) = (Vec::with_capacity(n_points), Vec::with_capacity(n_points));
        for s in samples {
            let (p, d) = s?;
            points.push(p);
            derivs.push(d);
        }
        ParametricCurve::new(params, points, derivs, true)
    }
}

impl DifferentiableMap for PlanarMap {
    fn eval(&self, z: Complex64) -> Result<Complex64> {
        let g = self.grid();
        if g.contains(z) {
            return Ok(z + self.rho_field.interpolate(z)?);
        }
        Ok(z + cauchy_point(&g, &self.cells, z))
    }

    fn derivatives(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        let g = self.grid();
        if g.contains(z) {
            return Ok((self.dz_field.interpolate(z)?, self.h_field.interpolate(z)?));
        }
        Ok((Complex64::new(1.0, 0.0) + cauchy_point_dz(&g, &self.cells, z), Complex64::new(0.0, 0.0)))
    }
}

/// Solves for the principal solution by the Neumann iteration
/// `h ← μ (S h) + μ`, then `ρ = z + C h`.
pub fn solve_principal(mu: &BeltramiField, tol: f64, max_iter: usize) -> Result<PlanarMap> {
    if mu.k >= 1.0 {
        return Err(QlabError::InvalidDilatation { k: mu.k });
    }
    if !(tol > 0.0) {
        return Err(QlabError::Config(format!("tolerance must be positive, got {tol}")));
    }
    let grid = mu.grid();
    if mu.k == 0.0 {
        return Ok(PlanarMap::identity(grid));
    }
    let plan = TransformPlan::new(grid);
    let m = &mu.mu.values;
    let mut h = mu.mu.clone();
    let mut steps = Vec::new();
    let mut iterations = 0;
    loop {
        let sh = plan.beurling_transform(&h)?;
        let next: Vec<Complex64> = m.par_iter().zip(sh.values.par_iter()).map(|(&a, &s)| a * s + a).collect();
        let diff: f64 = next.par_iter().zip(h.values.par_iter()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        let norm: f64 = h.values.par_iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let step = diff / norm;
        h.values = next;
        iterations += 1;
        steps.push(step);
        if step <= tol {
            break;
        }
        if iterations >= max_iter {
            return Err(QlabError::NoConvergence { max_iter, last: step });
        }
    }
    let sh = plan.beurling_transform(&h)?;
    let dz_field = sh.map(|_, s| Complex64::new(1.0, 0.0) + s);
    let resid_num: f64 = h
        .values
        .par_iter()
        .zip(m.par_iter())
        .zip(dz_field.values.par_iter())
        .map(|((&hv, &mv), &d)| (hv - mv * d).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let mu_norm: f64 = m.par_iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let rho_field = plan.cauchy_transform(&h)?;
    let cells = support_cells(&h);
    Ok(PlanarMap {
        rho_field,
        h_field: h,
        dz_field,
        residual: resid_num / mu_norm,
        iterations,
        k: mu.k,
        steps,
        normalization: "principal",
        cells,
    })
}

/// Side of the midpoint sub-grid used for ball averages.
const BALL_SUBDIV: usize = 24;

/// `a_F(z)`: the mean of `J_F^{1/2}` over the ball `B_z(y/2)`, `y = Im z`.
pub fn af_coefficient(map: &dyn DifferentiableMap, z: Complex64) -> Result<f64> {
    if z.im <= 0.0 {
        return Err(QlabError::OutOfDomain(z));
    }
    ball_mean(z, 0.5 * z.im, |w| Ok(map.jacobian(w)?.max(0.0).sqrt()))
}

/// Mean of `f` over the disk `B_c(r)` by a midpoint sub-grid, normalized by
/// the number of sub-grid points that fall in the disk.
pub(crate) fn ball_mean<F>(c: Complex64, r: f64, f: F) -> Result<f64>
where
    F: Fn(Complex64) -> Result<f64>,
{
    let n = BALL_SUBDIV;
    let step = 2.0 * r / n as f64;
    let mut acc = 0.0;
    let mut count = 0usize;
    for a in 0..n {
        for b in 0..n {
            let w = Complex64::new(-r + (a as f64 + 0.5) * step, -r + (b as f64 + 0.5) * step);
            if w.norm() < r {
                acc += f(c + w)?;
                count += 1;
            }
        }
    }
    Ok(acc / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_mu_gives_identity() {
        let g = Grid::centered(c(0.0, 0.0), 2.0, 64).unwrap();
        let map = solve_principal(&BeltramiField::zero(g), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(map.iterations, 0);
        assert_eq!(map.residual, 0.0);
        assert_eq!(map.eval(c(0.3, 0.2)).unwrap(), c(0.3, 0.2));
        assert_eq!(map.eval(c(5.0, 1.0)).unwrap(), c(5.0, 1.0));
        let line = map.trace_quasicircle(64, 1.0).unwrap();
        let reference = ParametricCurve::real_line(64, 1.0).unwrap();
        for (p, q) in line.points.iter().zip(&reference.points) {
            assert!((p - q).norm() < 1e-14);
        }
    }

    #[test]
    fn rejects_k_at_least_one() {
        let g = Grid::centered(c(0.0, 0.0), 2.0, 32).unwrap();
        let mu = GridField::from_fn(g, |z| if z.norm() < 0.5 { c(1.0, 0.0) } else { c(0.0, 0.0) });
        assert!(matches!(BeltramiField::from_field(mu), Err(QlabError::InvalidDilatation { .. })));
    }

    #[test]
    fn rejects_support_outside_inner_half() {
        let g = Grid::centered(c(0.0, 0.0), 2.0, 32).unwrap();
        let mu = GridField::from_fn(g, |z| if (z - 1.5).norm() < 0.3 { c(0.2, 0.0) } else { c(0.0, 0.0) });
        assert!(matches!(BeltramiField::from_field(mu), Err(QlabError::SupportViolation { .. })));
    }

    #[test]
    fn iteration_cap_reports_no_convergence() {
        let g = Grid::centered(c(0.0, 0.0), 2.0, 64).unwrap();
        let mu = GridField::from_fn(g, |z| if z.norm() < 0.6 { c(0.0, 0.7) * z / z.norm().max(1e-9) } else { c(0.0, 0.0) });
        let mu = BeltramiField::from_field(mu).unwrap();
        assert!(matches!(solve_principal(&mu, 1e-12, 2), Err(QlabError::NoConvergence { max_iter: 2, .. })));
    }

    #[test]
    fn affine_distortion() {
        assert!((af_coefficient(&AffineMap::identity(), c(0.3, 0.7)).unwrap() - 1.0).abs() < 1e-14);
        assert!((af_coefficient(&AffineMap::scaling(2.0), c(-1.0, 2.0)).unwrap() - 2.0).abs() < 1e-14);
        assert!(af_coefficient(&AffineMap::identity(), c(0.3, -0.1)).is_err());
    }
}

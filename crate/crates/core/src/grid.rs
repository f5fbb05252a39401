//! Uniform square-cell grids and complex fields sampled on them.
//!
//! Samples are stored row-major: node `(i, j)` sits at
//! `x0 + i*h + i*(y0 + j*h)` and lives at index `j*nx + i`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{QlabError, Result};

const SQUARE_CELL_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
}

impl Grid {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64, nx: usize, ny: usize) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(QlabError::InvalidGrid(format!("need nx, ny >= 2, got {nx}x{ny}")));
        }
        if !(x1 > x0 && y1 > y0) || ![x0, x1, y0, y1].iter().all(|v| v.is_finite()) {
            return Err(QlabError::InvalidGrid("degenerate or non-finite box".into()));
        }
        let hx = (x1 - x0) / (nx - 1) as f64;
        let hy = (y1 - y0) / (ny - 1) as f64;
        if ((hx - hy) / hx).abs() > SQUARE_CELL_RTOL {
            return Err(QlabError::InvalidGrid(format!(
                "cells are not square: hx = {hx}, hy = {hy}"
            )));
        }
        Ok(Self { x0, x1, y0, y1, nx, ny, h: hx })
    }

    /// Square grid `[cx - a, cx + a] x [cy - a, cy + a]` with `n` nodes per axis.
    pub fn centered(center: Complex64, half_width: f64, n: usize) -> Result<Self> {
        Self::new(
            center.re - half_width,
            center.re + half_width,
            center.im - half_width,
            center.im + half_width,
            n,
            n,
        )
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.x0 + i as f64 * self.h, self.y0 + j as f64 * self.h)
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }

    pub fn cell_area(&self) -> f64 {
        self.h * self.h
    }

    pub fn contains(&self, z: Complex64) -> bool {
        let tol = 1e-9 * self.h;
        z.re >= self.x0 - tol && z.re <= self.x1 + tol && z.im >= self.y0 - tol && z.im <= self.y1 + tol
    }

    /// The central box with half the width and height of the grid box.
    pub fn inner_half(&self) -> Rect {
        let qx = 0.25 * self.width();
        let qy = 0.25 * self.height();
        Rect { x0: self.x0 + qx, x1: self.x1 - qx, y0: self.y0 + qy, y1: self.y1 - qy }
    }

    pub fn bounds(&self) -> Rect {
        Rect { x0: self.x0, x1: self.x1, y0: self.y0, y1: self.y1 }
    }

    /// Half-open node index range along x covering `[a, b]`, clipped to the grid.
    pub fn x_range(&self, a: f64, b: f64) -> std::ops::Range<usize> {
        axis_range(a - self.x0, b - self.x0, self.h, self.nx)
    }

    pub fn y_range(&self, a: f64, b: f64) -> std::ops::Range<usize> {
        axis_range(a - self.y0, b - self.y0, self.h, self.ny)
    }
}

fn axis_range(a: f64, b: f64, h: f64, n: usize) -> std::ops::Range<usize> {
    let lo = (a / h).ceil().clamp(0.0, n as f64) as usize;
    let hi = ((b / h).floor() + 1.0).clamp(0.0, n as f64) as usize;
    lo..hi.max(lo)
}

/// Axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Self { x0, x1, y0, y1 }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.x0 && z.re <= self.x1 && z.im >= self.y0 && z.im <= self.y1
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.x0 >= self.x0 && other.x1 <= self.x1 && other.y0 >= self.y0 && other.y1 <= self.y1
    }

    pub fn radius(&self) -> f64 {
        0.5 * ((self.x1 - self.x0).hypot(self.y1 - self.y0))
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }
}

/// Complex samples on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub grid: Grid,
    pub values: Vec<Complex64>,
}

impl GridField {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(QlabError::InvalidGrid(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(QlabError::InvalidGrid(format!("non-finite value at index {k}")));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    /// Samples `f` at every node, in parallel over rows.
    pub fn from_fn<F>(grid: Grid, f: F) -> Self
    where
        F: Fn(Complex64) -> Complex64 + Sync,
    {
        let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
        values.par_chunks_mut(grid.nx).enumerate().for_each(|(j, row)| {
            for (i, v) in row.iter_mut().enumerate() {
                *v = f(grid.node(i, j));
            }
        });
        Self { grid, values }
    }

    /// Cell averages of `f` estimated with `sub x sub` midpoint samples per cell.
    ///
    /// Used for piecewise-smooth data (indicators) where point sampling
    /// would leave a staircase boundary layer.
    pub fn cell_average<F>(grid: Grid, sub: usize, f: F) -> Self
    where
        F: Fn(Complex64) -> Complex64 + Sync,
    {
        let sub = sub.max(1);
        let h = grid.h;
        let w = 1.0 / (sub * sub) as f64;
        Self::from_fn(grid, |z| {
            let mut acc = Complex64::new(0.0, 0.0);
            for a in 0..sub {
                for b in 0..sub {
                    let dx = ((a as f64 + 0.5) / sub as f64 - 0.5) * h;
                    let dy = ((b as f64 + 0.5) / sub as f64 - 0.5) * h;
                    acc += f(z + Complex64::new(dx, dy));
                }
            }
            acc * w
        })
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn map<F>(&self, f: F) -> Self
    where
        F: Fn(Complex64, Complex64) -> Complex64 + Sync,
    {
        let grid = self.grid;
        let mut values = self.values.clone();
        values.par_chunks_mut(grid.nx).enumerate().for_each(|(j, row)| {
            for (i, v) in row.iter_mut().enumerate() {
                *v = f(grid.node(i, j), *v);
            }
        });
        Self { grid, values }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Discrete L² norm `(sum |v|² h²)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_area()).sqrt()
    }

    pub fn sup_outside(&self, rect: &Rect) -> f64 {
        let mut m: f64 = 0.0;
        for j in 0..self.grid.ny {
            for i in 0..self.grid.nx {
                let z = self.grid.node(i, j);
                if !rect.contains(z) {
                    m = m.max(self.at(i, j).norm());
                }
            }
        }
        m
    }

    /// Bicubic interpolation using tensor-product cubic Lagrange stencils.
    ///
    /// Reproduces the samples at nodes and is exact on fields that are cubic
    /// in x and y separately. Stencils shift inward at the box edges.
    pub fn interpolate(&self, z: Complex64) -> Result<Complex64> {
        let g = &self.grid;
        if !g.contains(z) {
            return Err(QlabError::OutOfDomain(z));
        }
        let (si, wx) = stencil((z.re - g.x0) / g.h, g.nx);
        let (sj, wy) = stencil((z.im - g.y0) / g.h, g.ny);
        let mut acc = Complex64::new(0.0, 0.0);
        for (b, &wyb) in wy.iter().enumerate() {
            if wyb == 0.0 {
                continue;
            }
            let row = (sj + b) * g.nx;
            let mut racc = Complex64::new(0.0, 0.0);
            for (a, &wxa) in wx.iter().enumerate() {
                racc += self.values[row + si + a] * wxa;
            }
            acc += racc * wyb;
        }
        Ok(acc)
    }
}

/// Start index and Lagrange weights of the interpolation stencil around
/// fractional node coordinate `u` on an axis with `n` nodes.
fn stencil(u: f64, n: usize) -> (usize, [f64; 4]) {
    let m = n.min(4);
    let u = u.clamp(0.0, (n - 1) as f64);
    let i0 = u.floor() as isize;
    let start = (i0 - 1).clamp(0, n as isize - m as isize) as usize;
    let t = u - start as f64;
    let mut w = [0.0; 4];
    for (a, wa) in w.iter_mut().enumerate().take(m) {
        let mut p = 1.0;
        for b in 0..m {
            if a != b {
                p *= (t - b as f64) / (a as f64 - b as f64);
            }
        }
        *wa = p;
    }
    (start, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rejects_rectangular_cells() {
        assert!(Grid::new(0.0, 1.0, 0.0, 2.0, 11, 11).is_err());
        assert!(Grid::new(0.0, 1.0, 0.0, 2.0, 11, 21).is_ok());
        assert!(Grid::new(0.0, 1.0, 0.0, 1.0, 1, 1).is_err());
    }

    #[test]
    fn constant_field_interpolates_to_constant() {
        let g = Grid::centered(c(0.0, 0.0), 1.0, 17).unwrap();
        let f = GridField::from_fn(g, |_| c(2.5, -1.0));
        let v = f.interpolate(c(0.123, -0.77)).unwrap();
        assert!((v - c(2.5, -1.0)).norm() < 1e-13);
    }

    #[test]
    fn linear_field_is_exact_at_cell_midpoints() {
        let g = Grid::centered(c(0.3, -0.2), 2.0, 21).unwrap();
        let f = GridField::from_fn(g, |z| z);
        for j in 0..g.ny - 1 {
            for i in 0..g.nx - 1 {
                let z = g.node(i, j) + c(0.5 * g.h, 0.5 * g.h);
                assert!((f.interpolate(z).unwrap() - z).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn separable_cubic_is_exact() {
        let g = Grid::centered(c(0.0, 0.0), 1.0, 9).unwrap();
        let p = |z: Complex64| c(z.re.powi(3) * z.im.powi(2) - z.re, z.im.powi(3) + 2.0 * z.re * z.im);
        let f = GridField::from_fn(g, p);
        for &z in &[c(0.91, -0.97), c(-0.99, 0.13), c(0.0, 0.0), c(0.333, 0.777)] {
            assert!((f.interpolate(z).unwrap() - p(z)).norm() < 1e-12, "{z}");
        }
    }

    #[test]
    fn gaussian_interpolation_error_is_fourth_order() {
        let g = Grid::centered(c(0.0, 0.0), 2.0, 256).unwrap();
        let gauss = |z: Complex64| c((-z.norm_sqr()).exp(), 0.0);
        let f = GridField::from_fn(g, gauss);
        let mut err: f64 = 0.0;
        for k in 0..200 {
            let t = k as f64 * 0.0137;
            let z = c(1.5 * (3.1 * t).sin(), 1.5 * (1.7 * t).cos());
            err = err.max((f.interpolate(z).unwrap() - gauss(z)).norm());
        }
        // C h^4 with a modest constant
        assert!(err < 2.0 * g.h.powi(4), "err = {err:e}, h^4 = {:e}", g.h.powi(4));
    }

    #[test]
    fn outside_box_is_an_error() {
        let g = Grid::centered(c(0.0, 0.0), 1.0, 8).unwrap();
        let f = GridField::zeros(g);
        assert!(matches!(f.interpolate(c(1.5, 0.0)), Err(QlabError::OutOfDomain(_))));
    }

    #[test]
    fn interpolation_reproduces_nodes() {
        let g = Grid::centered(c(0.0, 0.0), 1.0, 12).unwrap();
        let f = GridField::from_fn(g, |z| c((3.0 * z.re).sin(), z.im * z.re.exp()));
        for j in 0..g.ny {
            for i in 0..g.nx {
                let v = f.interpolate(g.node(i, j)).unwrap();
                assert!((v - f.at(i, j)).norm() < 1e-13);
            }
        }
    }
}

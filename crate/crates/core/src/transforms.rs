//! Planar Cauchy and Beurling transforms and Wirtinger derivatives on grids.
//!
//! Conventions: `(C h)(z) = (1/π) ∬ h(ζ)/(z − ζ) dξdη`, so that `∂̄(C h) = h`,
//! and `S h = ∂(C h)`. On the padded frequency lattice with `ξ = kx + i ky`,
//! `∂̄ ↔ (i/2) ξ`, `∂ ↔ (i/2) conj(ξ)`, `C ↔ 2/(i ξ)` and `S ↔ conj(ξ)/ξ`,
//! all zero at `ξ = 0`.
//!
//! The periodic inverse of `∂̄` only sees mean-free data, so the Cauchy
//! and Beurling transforms split off the monopole onto a Gaussian whose
//! transforms are known in closed form. The bare Beurling multiplier on the
//! padded lattice (`beurling_padded`) is an exact isometry.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{QlabError, Result};
use crate::fft2::Fft2;
use crate::grid::{Grid, GridField};

pub const DEFAULT_PAD_FACTOR: usize = 2;
/// Values below this modulus count as zero for the support guard.
pub const SUPPORT_EPS: f64 = 1e-12;
const MIN_DERIV_NODES: usize = 8;

/// Precomputed FFT plans and multipliers for one grid.
#[derive(Debug)]
pub struct TransformPlan {
    pub grid: Grid,
    pub pad_factor: usize,
    fft: Fft2,
    /// `ξ = kx + i ky` on the padded lattice, row-major.
    xi: Vec<Complex64>,
    beurling: Vec<Complex64>,
    cauchy: Vec<Complex64>,
}

/// Kept at Nyquist so that `∂ ∘ C` and `S` share one multiplier exactly.
fn wavenumbers(n: usize, h: f64) -> Vec<f64> {
    let scale = 2.0 * PI / (n as f64 * h);
    (0..n)
        .map(|m| {
            if m < n / 2 + n % 2 {
                m as f64 * scale
            } else {
                (m as f64 - n as f64) * scale
            }
        })
        .collect()
}

impl TransformPlan {
    pub fn new(grid: Grid) -> Self {
        Self::with_padding(grid, DEFAULT_PAD_FACTOR)
    }

    pub fn with_padding(grid: Grid, pad_factor: usize) -> Self {
        let pad_factor = pad_factor.max(2);
        let n1 = (grid.nx * pad_factor).next_multiple_of(2);
        let n2 = (grid.ny * pad_factor).next_multiple_of(2);
        let kx = wavenumbers(n1, grid.h);
        let ky = wavenumbers(n2, grid.h);
        let xi: Vec<Complex64> =
            ky.iter().flat_map(|&y| kx.iter().map(move |&x| Complex64::new(x, y))).collect();
        let beurling = xi
            .iter()
            .map(|&x| if x.norm_sqr() == 0.0 { Complex64::new(0.0, 0.0) } else { x.conj() / x })
            .collect();
        let cauchy = xi
            .iter()
            .map(|&x| {
                if x.norm_sqr() == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, -2.0) / x
                }
            })
            .collect();
        Self { grid, pad_factor, fft: Fft2::new(n1, n2), xi, beurling, cauchy }
    }

    pub fn padded_shape(&self) -> (usize, usize) {
        (self.fft.n1, self.fft.n2)
    }

    fn check_grid(&self, field: &GridField) -> Result<()> {
        if field.grid != self.grid {
            return Err(QlabError::InvalidGrid("field grid differs from plan grid".into()));
        }
        Ok(())
    }

    /// Zero-pads grid samples into the padded lattice.
    pub fn embed(&self, values: &[Complex64]) -> Vec<Complex64> {
        let (n1, n2) = self.padded_shape();
        let mut buf = vec![Complex64::new(0.0, 0.0); n1 * n2];
        for j in 0..self.grid.ny {
            let src = &values[j * self.grid.nx..(j + 1) * self.grid.nx];
            buf[j * n1..j * n1 + self.grid.nx].copy_from_slice(src);
        }
        buf
    }

    pub fn crop(&self, buf: &[Complex64]) -> Vec<Complex64> {
        let n1 = self.fft.n1;
        let mut out = Vec::with_capacity(self.grid.len());
        for j in 0..self.grid.ny {
            out.extend_from_slice(&buf[j * n1..j * n1 + self.grid.nx]);
        }
        out
    }

    /// Applies a multiplier to a padded buffer in place.
    pub fn apply_padded(&self, buf: &mut [Complex64], mult: &[Complex64]) {
        self.fft.forward(buf);
        buf.par_iter_mut().zip(mult.par_iter()).for_each(|(v, m)| *v *= m);
        self.fft.inverse(buf);
    }

    fn apply(&self, values: &[Complex64], mult: &[Complex64]) -> Vec<Complex64> {
        let mut buf = self.embed(values);
        self.apply_padded(&mut buf, mult);
        self.crop(&buf)
    }

    pub fn beurling_multiplier(&self) -> &[Complex64] {
        &self.beurling
    }

    fn deriv_multiplier(&self, conj: bool) -> Vec<Complex64> {
        let half_i = Complex64::new(0.0, 0.5);
        self.xi.iter().map(|&x| half_i * if conj { x.conj() } else { x }).collect()
    }

    fn check_deriv_size(&self) -> Result<()> {
        if self.grid.nx < MIN_DERIV_NODES || self.grid.ny < MIN_DERIV_NODES {
            return Err(QlabError::GridTooSmall { min: MIN_DERIV_NODES, nx: self.grid.nx, ny: self.grid.ny });
        }
        Ok(())
    }

    /// Spectral `∂̄ = ½(∂x + i∂y)` on the zero-padded periodic extension.
    pub fn dbar(&self, field: &GridField) -> Result<GridField> {
        self.check_grid(field)?;
        self.check_deriv_size()?;
        let values = self.apply(&field.values, &self.deriv_multiplier(false));
        Ok(GridField { grid: self.grid, values })
    }

    /// Spectral `∂ = ½(∂x − i∂y)` on the zero-padded periodic extension.
    pub fn dz(&self, field: &GridField) -> Result<GridField> {
        self.check_grid(field)?;
        self.check_deriv_size()?;
        let values = self.apply(&field.values, &self.deriv_multiplier(true));
        Ok(GridField { grid: self.grid, values })
    }

    pub fn check_support(&self, h: &GridField) -> Result<()> {
        let inner = self.grid.inner_half();
        let m = h.sup_outside(&inner);
        if m > SUPPORT_EPS {
            return Err(QlabError::SupportViolation { max_outside: m });
        }
        Ok(())
    }

    /// Beurling transform: the multiplier `conj(ξ)/ξ` on the padded lattice.
    pub fn beurling_transform(&self, h: &GridField) -> Result<GridField> {
        self.check_grid(h)?;
        self.check_support(h)?;
        let grid = self.grid;
        let (mass, residual) = self.split_monopole(h);
        let (c0, s) = (grid.center(), self.gauss_width());
        let mut values = self.apply(&residual, &self.beurling);
        values.par_chunks_mut(grid.nx).enumerate().for_each(|(j, row)| {
            for (i, v) in row.iter_mut().enumerate() {
                *v += mass * gaussian_beurling(grid.node(i, j) - c0, s);
            }
        });
        Ok(GridField { grid, values })
    }

    /// Beurling transform returning the whole padded lattice (no crop).
    pub fn beurling_padded(&self, h: &GridField) -> Result<Vec<Complex64>> {
        self.check_grid(h)?;
        self.check_support(h)?;
        let mut buf = self.embed(&h.values);
        self.apply_padded(&mut buf, &self.beurling);
        Ok(buf)
    }

    /// Width of the monopole-carrying Gaussian.
    fn gauss_width(&self) -> f64 {
        self.grid.width().min(self.grid.height()) / 16.0
    }

    /// Cauchy transform `(1/π) ∬ h(ζ)/(z − ζ)`.
    pub fn cauchy_transform(&self, h: &GridField) -> Result<GridField> {
        self.check_grid(h)?;
        self.check_support(h)?;
        let grid = self.grid;
        let (mass, residual) = self.split_monopole(h);
        let (c0, s) = (grid.center(), self.gauss_width());
        let mut buf = self.embed(&residual);
        self.apply_padded(&mut buf, &self.cauchy);
        // The periodic inverse fixes the solution only up to a constant. The
        // remaining far field is dipole-like, whose mean over the pad region
        // (symmetric about the grid center) vanishes, so pin that mean to zero.
        let offset = self.pad_mean(&buf);
        let mut values = self.crop(&buf);
        values.par_chunks_mut(grid.nx).enumerate().for_each(|(j, row)| {
            for (i, v) in row.iter_mut().enumerate() {
                *v += mass * gaussian_cauchy(grid.node(i, j) - c0, s) - offset;
            }
        });
        Ok(GridField { grid, values })
    }

    /// Total mass of `h` and `h` minus a Gaussian of equal mass at the grid center.
    fn split_monopole(&self, h: &GridField) -> (Complex64, Vec<Complex64>) {
        let grid = self.grid;
        let area = grid.cell_area();
        let mass: Complex64 = h.values.iter().sum::<Complex64>() * area;
        let c0 = grid.center();
        let s = self.gauss_width();
        let gauss = |z: Complex64| (-(z - c0).norm_sqr() / (s * s)).exp() / (PI * s * s);
        let gsum: f64 = (0..grid.ny)
            .flat_map(|j| (0..grid.nx).map(move |i| (i, j)))
            .map(|(i, j)| gauss(grid.node(i, j)))
            .sum::<f64>()
            * area;
        let scale = mass / gsum;
        let mut residual = h.values.clone();
        residual.par_chunks_mut(grid.nx).enumerate().for_each(|(j, row)| {
            for (i, v) in row.iter_mut().enumerate() {
                *v -= scale * gauss(grid.node(i, j));
            }
        });
        (mass, residual)
    }

    /// Mean of a padded buffer over the nodes outside the grid.
    fn pad_mean(&self, buf: &[Complex64]) -> Complex64 {
        let (n1, n2) = self.padded_shape();
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..n2 {
            for i in 0..n1 {
                if i >= nx || j >= ny {
                    acc += buf[j * n1 + i];
                }
            }
        }
        acc / (n1 * n2 - nx * ny) as f64
    }
}

/// Closed-form Cauchy transform of the unit-mass Gaussian `e^{-|w|²/s²}/(π s²)`.
pub fn gaussian_cauchy(w: Complex64, s: f64) -> Complex64 {
    let r2 = w.norm_sqr();
    let q = r2 / (s * s);
    if q < 1e-8 {
        // (1 - e^{-q})/(π w) = w̄ (1 - q/2 + ...)/(π s²)
        return w.conj() * (1.0 - 0.5 * q) / (PI * s * s);
    }
    (1.0 - (-q).exp()) / (PI * w)
}

/// Closed-form Beurling transform of the same Gaussian.
pub fn gaussian_beurling(w: Complex64, s: f64) -> Complex64 {
    let q = w.norm_sqr() / (s * s);
    if q < 1e-8 {
        return -w.conj() * w.conj() / (2.0 * PI * s.powi(4));
    }
    let e = (-q).exp();
    -(1.0 - e) / (PI * w * w) + e * w.conj() / (PI * s * s * w)
}

/// `∬_cell 1/(z − ζ) dξdη` over the axis-aligned cell `[x0,x1]×[y0,y1]`.
pub fn cell_integral_inv(z: Complex64, x0: f64, x1: f64, y0: f64, y1: f64) -> Complex64 {
    // u = z - ζ ranges over [z.re - x1, z.re - x0] x [z.im - y1, z.im - y0]
    let (a0, a1) = (z.re - x1, z.re - x0);
    let (b0, b1) = (z.im - y1, z.im - y0);
    let re = |x: f64, y: f64| -> f64 {
        let r2 = x * x + y * y;
        let l = if r2 > 0.0 { 0.5 * y * r2.ln() } else { 0.0 };
        let t = if x != 0.0 { x * (y / x).atan() } else { 0.0 };
        l + t
    };
    let im = |x: f64, y: f64| -> f64 {
        let r2 = x * x + y * y;
        let l = if r2 > 0.0 { 0.5 * x * r2.ln() } else { 0.0 };
        let t = if y != 0.0 { y * (x / y).atan() } else { 0.0 };
        l + t
    };
    let mixed = |f: &dyn Fn(f64, f64) -> f64| f(a1, b1) - f(a0, b1) - f(a1, b0) + f(a0, b0);
    Complex64::new(mixed(&re), -mixed(&im))
}

/// Pointwise Cauchy transform by direct quadrature over the given nonzero cells.
///
/// Cells within two spacings of `z` use the exact cell integral of the
/// kernel, the rest the midpoint rule.
pub fn cauchy_point(grid: &Grid, cells: &[(usize, Complex64)], z: Complex64) -> Complex64 {
    let h = grid.h;
    let area = h * h;
    let near = 2.0 * h;
    let mut acc = Complex64::new(0.0, 0.0);
    for &(idx, val) in cells {
        let (i, j) = (idx % grid.nx, idx / grid.nx);
        let zeta = grid.node(i, j);
        let w = z - zeta;
        if w.re.abs() < near && w.im.abs() < near {
            acc += val * cell_integral_inv(z, zeta.re - 0.5 * h, zeta.re + 0.5 * h, zeta.im - 0.5 * h, zeta.im + 0.5 * h);
        } else {
            acc += val * area / w;
        }
    }
    acc / PI
}

/// `∂` of the pointwise Cauchy transform away from the support:
/// `-(1/π) Σ h(ζ) h² / (z − ζ)²`.
pub fn cauchy_point_dz(grid: &Grid, cells: &[(usize, Complex64)], z: Complex64) -> Complex64 {
    let area = grid.h * grid.h;
    let mut acc = Complex64::new(0.0, 0.0);
    for &(idx, val) in cells {
        let zeta = grid.node(idx % grid.nx, idx / grid.nx);
        let w = z - zeta;
        acc -= val * area / (w * w);
    }
    acc / PI
}

/// Nonzero cells of a field, for the pointwise slow path.
pub fn support_cells(field: &GridField) -> Vec<(usize, Complex64)> {
    field
        .values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.norm() > SUPPORT_EPS)
        .map(|(k, v)| (k, *v))
        .collect()
}

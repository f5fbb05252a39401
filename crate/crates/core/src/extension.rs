//! Reflection extension of a conformal map of the disk across the unit
//! circle, its dilatation, and a tapered global Beltrami field.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::beltrami::{BeltramiField, DifferentiableMap};
use crate::error::{QlabError, Result};
use crate::grid::{Grid, GridField, Rect};

pub const DEFAULT_R0: f64 = 0.25;
const DEGENERATE: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MapKind {
    Identity,
    /// `z + a z²`, `|a| < 1/2`
    Quad(Complex64),
    /// `z/(1 − b z)`, `|b| < 1`
    Moebius(Complex64),
}

impl FromStr for MapKind {
    type Err = QlabError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let param = |p: &str| {
            Complex64::from_str(p.trim()).map_err(|_| QlabError::Config(format!("bad map parameter `{p}`")))
        };
        if s == "identity" {
            Ok(MapKind::Identity)
        } else if let Some(p) = s.strip_prefix("quad:") {
            Ok(MapKind::Quad(param(p)?))
        } else if let Some(p) = s.strip_prefix("moebius:") {
            Ok(MapKind::Moebius(param(p)?))
        } else {
            Err(QlabError::Config(format!("unknown map `{s}` (identity, quad:a, moebius:b)")))
        }
    }
}

impl fmt::Display for MapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapKind::Identity => write!(f, "identity"),
            MapKind::Quad(a) => write!(f, "quad:{a}"),
            MapKind::Moebius(b) => write!(f, "moebius:{b}"),
        }
    }
}

/// A closed-form conformal map of the disk, evaluated on `r₀ < |z| ≤ 1`
/// and on the disk itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConformalBoundaryMap {
    pub kind: MapKind,
    pub r0: f64,
}

impl ConformalBoundaryMap {
    pub fn new(kind: MapKind, r0: f64) -> Result<Self> {
        match kind {
            MapKind::Quad(a) if a.norm() >= 0.5 => {
                return Err(QlabError::Config(format!("quad:{a} is not univalent on the disk (need |a| < 1/2)")))
            }
            MapKind::Moebius(b) if b.norm() >= 1.0 => {
                return Err(QlabError::Config(format!("moebius:{b} has a pole in the closed disk (need |b| < 1)")))
            }
            _ => {}
        }
        if !(r0 > 0.0 && r0 < 1.0) {
            return Err(QlabError::Config(format!("r0 must lie in (0, 1), got {r0}")));
        }
        Ok(Self { kind, r0 })
    }

    pub fn identity() -> Self {
        Self { kind: MapKind::Identity, r0: DEFAULT_R0 }
    }

    pub fn quad(a: f64) -> Result<Self> {
        Self::new(MapKind::Quad(Complex64::new(a, 0.0)), DEFAULT_R0)
    }

    pub fn moebius(b: f64) -> Result<Self> {
        Self::new(MapKind::Moebius(Complex64::new(b, 0.0)), DEFAULT_R0)
    }

    /// Outer radius `1/r₀` of the extension annulus.
    pub fn r1(&self) -> f64 {
        1.0 / self.r0
    }

    pub fn f(&self, z: Complex64) -> Complex64 {
        match self.kind {
            MapKind::Identity => z,
            MapKind::Quad(a) => z + a * z * z,
            MapKind::Moebius(b) => z / (1.0 - b * z),
        }
    }

    pub fn df(&self, z: Complex64) -> Complex64 {
        match self.kind {
            MapKind::Identity => Complex64::new(1.0, 0.0),
            MapKind::Quad(a) => 1.0 + 2.0 * a * z,
            MapKind::Moebius(b) => (1.0 - b * z).powi(-2),
        }
    }

    pub fn d2f(&self, z: Complex64) -> Complex64 {
        match self.kind {
            MapKind::Identity => Complex64::new(0.0, 0.0),
            MapKind::Quad(a) => 2.0 * a,
            MapKind::Moebius(b) => 2.0 * b * (1.0 - b * z).powi(-3),
        }
    }

    /// `f″/f′`, rejecting vanishing `f′`.
    pub fn pre_schwarzian(&self, z: Complex64) -> Result<Complex64> {
        let d1 = self.df(z);
        if d1.norm() < DEGENERATE {
            return Err(QlabError::DegenerateDerivative(z));
        }
        Ok(self.d2f(z) / d1)
    }

    fn reflect(&self, z: Complex64) -> Result<Complex64> {
        let r = z.norm();
        if !(r > 1.0 && 1.0 / r > self.r0) {
            return Err(QlabError::OutOfAnnulus(z));
        }
        Ok(1.0 / z.conj())
    }

    /// `f(w) + f′(w)(z − w)` with `w = 1/z̄`, for `1 < |z| < 1/r₀`.
    pub fn reflect_extend(&self, z: Complex64) -> Result<Complex64> {
        let w = self.reflect(z)?;
        Ok(self.f(w) + self.df(w) * (z - w))
    }

    /// Wirtinger derivatives of the extension: `∂F = f′(w)`, `∂̄F = −f″(w)(z − w)/z̄²`.
    pub fn extension_derivatives(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        let w = self.reflect(z)?;
        let zb = z.conj();
        Ok((self.df(w), -self.d2f(w) * (z - w) / (zb * zb)))
    }

    /// `μ = −(f″/f′)(w)(z − w)/z̄²`; `|μ| = β(w)(|z| + 1)/|z|²`.
    pub fn extension_dilatation(&self, z: Complex64) -> Result<Complex64> {
        let w = self.reflect(z)?;
        let zb = z.conj();
        Ok(-self.pre_schwarzian(w)? * (z - w) / (zb * zb))
    }

    /// `β(z) = (1 − |z|)|f″/f′|` on the disk.
    pub fn beta(&self, z: Complex64) -> Result<f64> {
        crate::regularity::beta_log_derivative(|w| self.df(w), |w| self.d2f(w), z)
    }

    /// `sup |μ|` of the tapered field over `1 < |z| ≤ R₀ + w`, by a polar scan.
    pub fn analytic_k(&self, r_cut: f64, taper: f64) -> Result<f64> {
        let (nr, nt) = (400, 720);
        let mut k: f64 = 0.0;
        for a in 1..=nr {
            let r = 1.0 + (r_cut + taper - 1.0) * a as f64 / nr as f64;
            for b in 0..nt {
                let z = Complex64::from_polar(r, std::f64::consts::TAU * b as f64 / nt as f64);
                k = k.max(self.extension_dilatation(z)?.norm() * quintic_taper(r, r_cut, taper));
            }
        }
        Ok(k)
    }
}

/// `f` on the closed disk glued to its reflection extension on `1 < |z| < 1/r₀`.
impl DifferentiableMap for ConformalBoundaryMap {
    fn eval(&self, z: Complex64) -> Result<Complex64> {
        if z.norm() <= 1.0 {
            Ok(self.f(z))
        } else {
            self.reflect_extend(z)
        }
    }

    fn derivatives(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        if z.norm() <= 1.0 {
            Ok((self.df(z), Complex64::new(0.0, 0.0)))
        } else {
            self.extension_derivatives(z)
        }
    }
}

/// 1 below `r0`, 0 above `r0 + w`, quintic smoothstep between (C² at both ends).
pub fn quintic_taper(r: f64, r0: f64, w: f64) -> f64 {
    if r <= r0 {
        return 1.0;
    }
    if w <= 0.0 || r >= r0 + w {
        return 0.0;
    }
    let s = (r - r0) / w;
    1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
}

/// Grid-sampled extension dilatation on `1 < |z| < R₀ + w`, tapered to zero
/// across `[R₀, R₀ + w]`.
pub fn cutoff_global(map: &ConformalBoundaryMap, grid: Grid, r_cut: f64, taper: f64) -> Result<BeltramiField> {
    if !(r_cut > 1.0 && taper >= 0.0 && r_cut + taper < map.r1()) {
        return Err(QlabError::Config(format!(
            "need 1 < R0 and R0 + taper < {} (got R0 = {r_cut}, taper = {taper})",
            map.r1()
        )));
    }
    let values = (0..grid.len())
        .map(|k| {
            let z = grid.node(k % grid.nx, k / grid.nx);
            let r = z.norm();
            if r <= 1.0 || r >= r_cut + taper {
                return Ok(Complex64::new(0.0, 0.0));
            }
            Ok(map.extension_dilatation(z)? * quintic_taper(r, r_cut, taper))
        })
        .collect::<Result<Vec<_>>>()?;
    let mu = GridField::new(grid, values)?;
    let rr = r_cut + taper;
    BeltramiField::new(mu, Rect::new(-rr, rr, -rr, rr))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn quad_example_value() {
        let m = ConformalBoundaryMap::quad(0.2).unwrap();
        let v = m.reflect_extend(c(2.0, 0.0)).unwrap();
        assert!((v - c(2.35, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn parse_and_display() {
        assert_eq!("identity".parse::<MapKind>().unwrap(), MapKind::Identity);
        assert_eq!("quad:0.2".parse::<MapKind>().unwrap(), MapKind::Quad(c(0.2, 0.0)));
        assert_eq!("moebius:0.3".parse::<MapKind>().unwrap(), MapKind::Moebius(c(0.3, 0.0)));
        assert!("quad:x".parse::<MapKind>().is_err());
        assert!("cubic:1".parse::<MapKind>().is_err());
    }

    #[test]
    fn rejects_out_of_range_parameters() {
        assert!(ConformalBoundaryMap::quad(0.5).is_err());
        assert!(ConformalBoundaryMap::moebius(1.0).is_err());
    }

    #[test]
    fn annulus_guard() {
        let m = ConformalBoundaryMap::quad(0.2).unwrap();
        assert!(matches!(m.reflect_extend(c(0.5, 0.0)), Err(QlabError::OutOfAnnulus(_))));
        assert!(matches!(m.reflect_extend(c(5.0, 0.0)), Err(QlabError::OutOfAnnulus(_))));
    }

    #[test]
    fn taper_is_smooth_step() {
        assert_eq!(quintic_taper(1.0, 1.5, 0.5), 1.0);
        assert_eq!(quintic_taper(2.1, 1.5, 0.5), 0.0);
        assert!((quintic_taper(1.75, 1.5, 0.5) - 0.5).abs() < 1e-15);
    }
}

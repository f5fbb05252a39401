//! CSV serialization for grid fields and curves.
//!
//! Fields are written as `x,y,re,im` rows with a sidecar `<file>.meta.toml`
//! holding the box and node counts. Curves are written as `tau,re,im,dre,dim`.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::curve::ParametricCurve;
use crate::error::{QlabError, Result};
use crate::grid::{Grid, GridField};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GridMeta {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub nx: usize,
    pub ny: usize,
}

impl From<&Grid> for GridMeta {
    fn from(g: &Grid) -> Self {
        Self { x0: g.x0, x1: g.x1, y0: g.y0, y1: g.y1, nx: g.nx, ny: g.ny }
    }
}

impl GridMeta {
    pub fn to_grid(&self) -> Result<Grid> {
        Grid::new(self.x0, self.x1, self.y0, self.y1, self.nx, self.ny)
    }
}

pub fn meta_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.toml");
    PathBuf::from(s)
}

pub fn write_field(path: &Path, field: &GridField) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x", "y", "re", "im"])?;
    let g = &field.grid;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let z = g.node(i, j);
            let v = field.at(i, j);
            w.write_record(&[
                format!("{:.17e}", z.re),
                format!("{:.17e}", z.im),
                format!("{:.17e}", v.re),
                format!("{:.17e}", v.im),
            ])?;
        }
    }
    w.flush()?;
    let meta = toml::to_string(&GridMeta::from(g)).map_err(|e| QlabError::Config(e.to_string()))?;
    fs::write(meta_path(path), meta)?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<GridField> {
    let meta_text = fs::read_to_string(meta_path(path))?;
    let meta: GridMeta = toml::from_str(&meta_text).map_err(|e| QlabError::Config(e.to_string()))?;
    let grid = meta.to_grid()?;
    let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut rdr = csv::Reader::from_path(path)?;
    let mut count = 0usize;
    for rec in rdr.records() {
        let rec = rec?;
        let parse = |k: usize| -> Result<f64> {
            rec.get(k)
                .ok_or_else(|| QlabError::Config(format!("missing column {k}")))?
                .trim()
                .parse::<f64>()
                .map_err(|e| QlabError::Config(e.to_string()))
        };
        let (x, y, re, im) = (parse(0)?, parse(1)?, parse(2)?, parse(3)?);
        let i = ((x - grid.x0) / grid.h).round();
        let j = ((y - grid.y0) / grid.h).round();
        if i < 0.0 || j < 0.0 || i as usize >= grid.nx || j as usize >= grid.ny {
            return Err(QlabError::OutOfDomain(Complex64::new(x, y)));
        }
        values[grid.index(i as usize, j as usize)] = Complex64::new(re, im);
        count += 1;
    }
    if count != grid.len() {
        return Err(QlabError::InvalidGrid(format!("expected {} rows, read {count}", grid.len())));
    }
    GridField::new(grid, values)
}

pub fn write_curve(path: &Path, curve: &ParametricCurve) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["tau", "re", "im", "dre", "dim"])?;
    for j in 0..curve.len() {
        let (p, d) = (curve.points[j], curve.derivs[j]);
        w.write_record(&[
            format!("{:.17e}", curve.params[j]),
            format!("{:.17e}", p.re),
            format!("{:.17e}", p.im),
            format!("{:.17e}", d.re),
            format!("{:.17e}", d.im),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a curve; it is treated as closed when its parameters tile `[0, 2π)`.
pub fn read_curve(path: &Path) -> Result<ParametricCurve> {
    let mut rdr = csv::Reader::from_path(path)?;
    let (mut params, mut points, mut derivs) = (Vec::new(), Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec?;
        let v: Vec<f64> = (0..5)
            .map(|k| {
                rec.get(k)
                    .ok_or_else(|| QlabError::Config(format!("missing column {k}")))
                    .and_then(|s| s.trim().parse::<f64>().map_err(|e| QlabError::Config(e.to_string())))
            })
            .collect::<Result<_>>()?;
        params.push(v[0]);
        points.push(Complex64::new(v[1], v[2]));
        derivs.push(Complex64::new(v[3], v[4]));
    }
    if params.len() < 2 {
        return Err(QlabError::InvalidCurve("fewer than two samples".into()));
    }
    let dt = params[1] - params[0];
    let closed = params[0].abs() < 1e-12 && (dt * params.len() as f64 - 2.0 * PI).abs() < 1e-9;
    ParametricCurve::new(params, points, derivs, closed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        let g = Grid::new(-1.0, 1.0, 0.0, 1.0, 9, 5).unwrap();
        let f = GridField::from_fn(g, |z| z * z + Complex64::new(0.1, 0.0));
        write_field(&p, &f).unwrap();
        let back = read_field(&p).unwrap();
        assert_eq!(back.grid, f.grid);
        for (a, b) in back.values.iter().zip(&f.values) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn curve_roundtrip_keeps_closedness() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.csv");
        let circ = ParametricCurve::unit_circle(32).unwrap();
        write_curve(&p, &circ).unwrap();
        assert!(read_curve(&p).unwrap().closed);
        let line = ParametricCurve::real_line(32, 1.0).unwrap();
        write_curve(&p, &line).unwrap();
        assert!(!read_curve(&p).unwrap().closed);
    }
}

//! Numerical toolkit for quasiconformal maps, quasicircles, Carleson
//! measures and Cauchy integrals.

pub mod beltrami;
pub mod carleson;
pub mod cauchy;
pub mod curve;
pub mod error;
pub mod experiments;
pub mod extension;
mod fft2;
pub mod grid;
pub mod io;
pub mod regularity;
pub mod transforms;

pub use curve::{ParametricCurve, Region};
pub use error::{QlabError, Result};
pub use grid::{Grid, GridField, Rect};
pub use num_complex::Complex64;

//! Row-parallel 2D FFT on row-major buffers.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

const ROWS_PER_TASK: usize = 16;

pub(crate) struct Fft2 {
    pub n1: usize,
    pub n2: usize,
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2").field("n1", &self.n1).field("n2", &self.n2).finish()
    }
}

impl Fft2 {
    /// Plans transforms for a buffer of `n2` rows with `n1` columns each.
    pub fn new(n1: usize, n2: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n1,
            n2,
            fwd_x: planner.plan_fft_forward(n1),
            inv_x: planner.plan_fft_inverse(n1),
            fwd_y: planner.plan_fft_forward(n2),
            inv_y: planner.plan_fft_inverse(n2),
        }
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.run(buf, &self.fwd_x, &self.fwd_y);
    }

    /// Inverse transform including the `1/(n1 n2)` normalization.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.run(buf, &self.inv_x, &self.inv_y);
        let s = 1.0 / (self.n1 * self.n2) as f64;
        buf.par_iter_mut().for_each(|v| *v *= s);
    }

    fn run(&self, buf: &mut [Complex64], fx: &Arc<dyn Fft<f64>>, fy: &Arc<dyn Fft<f64>>) {
        let (n1, n2) = (self.n1, self.n2);
        debug_assert_eq!(buf.len(), n1 * n2);
        buf.par_chunks_mut(n1 * ROWS_PER_TASK).for_each(|chunk| fx.process(chunk));
        let mut t = transpose(buf, n1, n2);
        t.par_chunks_mut(n2 * ROWS_PER_TASK).for_each(|chunk| fy.process(chunk));
        let back = transpose(&t, n2, n1);
        buf.copy_from_slice(&back);
    }
}

/// Transposes an `rows x cols` row-major buffer.
fn transpose(src: &[Complex64], cols: usize, rows: usize) -> Vec<Complex64> {
    let mut dst = vec![Complex64::new(0.0, 0.0); src.len()];
    dst.par_chunks_mut(rows).enumerate().for_each(|(c, out)| {
        for (r, v) in out.iter_mut().enumerate() {
            *v = src[r * cols + c];
        }
    });
    dst
}

//! Orthonormal DST-I through a complex FFT of the odd extension.

use std::sync::Arc;

use nalgebra::DMatrix;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// `y_k = √(2/n)·Σ_j sin(jkπ/n)·x_j` for `j, k = 1..n−1`.
///
/// The transform is symmetric and orthogonal, hence its own inverse.
#[derive(Clone)]
pub struct Dst1 {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Dst1 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Dst1").field("len", &self.len()).finish()
    }
}

impl Dst1 {
    /// Transform acting on vectors of length `n − 1`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "DST-I needs n >= 2");
        let fft = FftPlanner::new().plan_fft_forward(2 * n);
        Self { n, fft }
    }

    /// Length of the vectors the transform acts on (`n − 1`).
    pub fn len(&self) -> usize {
        self.n - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Transforms every column of `x` in a single batched FFT call.
    pub fn apply_columns(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let (m, r) = x.shape();
        assert_eq!(m, self.len(), "DST-I length mismatch");
        let n2 = 2 * self.n;
        let mut buf = vec![Complex64::new(0.0, 0.0); n2 * r];
        for (c, chunk) in buf.chunks_exact_mut(n2).enumerate() {
            let col = x.column(c);
            for j in 0..m {
                chunk[j + 1].re = col[j];
                chunk[n2 - 1 - j].re = -col[j];
            }
        }
        if r > 0 {
            self.fft.process(&mut buf);
        }
        // Z_k = −2i·Σ_j x_j sin(πjk/n)
        let scale = -0.5 * (2.0 / self.n as f64).sqrt();
        DMatrix::from_fn(m, r, |k, c| scale * buf[c * n2 + k + 1].im)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let m = DMatrix::from_column_slice(x.len(), 1, x);
        self.apply_columns(&m).as_slice().to_vec()
    }

    /// Dense `(n−1)×(n−1)` transform matrix. Only for small oracles.
    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.n as f64;
        DMatrix::from_fn(self.len(), self.len(), |k, j| {
            (2.0 / n).sqrt() * (((j + 1) * (k + 1)) as f64 * std::f64::consts::PI / n).sin()
        })
    }
}

//! Square multi-dimensional transforms built from rustfft row transforms.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

pub(crate) type C64 = Complex<f64>;

pub(crate) struct Plan {
    dim: usize,
    p: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Plan {
    pub fn new(dim: usize, p: usize) -> Self {
        let mut planner = FftPlanner::new();
        Plan {
            dim,
            p,
            fwd: planner.plan_fft_forward(p),
            inv: planner.plan_fft_inverse(p),
        }
    }

    pub fn len(&self) -> usize {
        self.p.pow(self.dim as u32)
    }

    /// Unnormalized forward transform. In d = 2 the spectrum is left transposed;
    /// [`Plan::inverse`] undoes that, so pointwise products between spectra from
    /// the same plan are consistent.
    pub fn forward(&self, buf: &mut [C64]) {
        self.run(&self.fwd, buf);
    }

    /// Unnormalized inverse transform (divide by `len()` to invert `forward`).
    pub fn inverse(&self, buf: &mut [C64]) {
        self.run(&self.inv, buf);
    }

    fn run(&self, fft: &Arc<dyn Fft<f64>>, buf: &mut [C64]) {
        debug_assert_eq!(buf.len(), self.len());
        let mut scratch = vec![C64::default(); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(buf, &mut scratch);
        if self.dim == 2 {
            transpose(buf, self.p);
            fft.process_with_scratch(buf, &mut scratch);
        }
    }
}

/// In-place transpose of a square row-major matrix.
pub(crate) fn transpose<T: Copy>(buf: &mut [T], p: usize) {
    const B: usize = 32;
    for bi in (0..p).step_by(B) {
        for bj in (bi..p).step_by(B) {
            for i in bi..(bi + B).min(p) {
                let start = if bi == bj { i + 1 } else { bj };
                for j in start..(bj + B).min(p) {
                    buf.swap(i * p + j, j * p + i);
                }
            }
        }
    }
}

/// Places kernel-grid samples (zero displacement at index `p/2`) into circular
/// order (zero displacement at index 0).
pub(crate) fn circular_shift(values: &[f64], dim: usize, p: usize) -> Vec<f64> {
    let half = p / 2;
    match dim {
        1 => (0..p).map(|q| values[(q + half) % p]).collect(),
        _ => {
            let mut out = vec![0.0; p * p];
            for a in 0..p {
                let sa = (a + half) % p;
                for b in 0..p {
                    out[a * p + b] = values[sa * p + (b + half) % p];
                }
            }
            out
        }
    }
}

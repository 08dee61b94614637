use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fft::{circular_shift, Plan, C64};
use crate::error::{Error, Result};
use crate::gridfn::{sample_dilated, Extension, Grid, GridFunction, KernelSpec};

/// Evaluation route for a discrete convolution.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConvPath {
    #[default]
    Fft,
    Direct,
}

/// Samples `t^{-d} phi(x / t)` on the displacement grid of `grid`, renormalized
/// to unit discrete mass.
pub fn dilate(kernel: &KernelSpec, t: f64, grid: &Grid) -> Result<GridFunction> {
    let min = grid.h() / 2.0;
    if t < min * (1.0 - 1e-12) {
        return Err(Error::ScaleBelowResolution { t, min });
    }
    if kernel.exceeds_box(t, grid) {
        log::warn!(
            "{} kernel at t = {t} reaches beyond the grid box",
            kernel.name()
        );
    }
    sample_dilated(kernel, t, grid)
}

/// Padded transform length per axis.
pub(crate) fn transform_len(grid: &Grid) -> usize {
    match grid.extension() {
        Extension::Zero => 2 * grid.n(),
        Extension::Periodic => grid.n(),
    }
}

fn check_pair(f: &GridFunction, k: &GridFunction) -> Result<()> {
    let expected = f.grid.with_extension(f.extension).kernel_grid();
    if !k.grid.same_box(&expected) {
        return Err(Error::GridMismatch(format!(
            "kernel sampled on {} points per axis, {} expected for {:?} extension",
            k.grid.n(),
            expected.n(),
            f.extension
        )));
    }
    Ok(())
}

/// Discrete convolution `h^d sum_j k(x_i - y_j) f(y_j)`; `k` lives on the
/// displacement grid of `f` (see [`Grid::kernel_grid`]).
pub fn convolve(f: &GridFunction, k: &GridFunction) -> Result<GridFunction> {
    convolve_with(f, k, ConvPath::Fft)
}

pub fn convolve_with(f: &GridFunction, k: &GridFunction, path: ConvPath) -> Result<GridFunction> {
    check_pair(f, k)?;
    let values = match path {
        ConvPath::Fft => fft_values(f, k),
        ConvPath::Direct => direct_values(f, k),
    };
    Ok(GridFunction::from_parts(
        f.grid.with_extension(f.extension),
        values,
    ))
}

/// Kernel index for a signed displacement (in samples) along one axis.
#[inline]
fn kernel_index(delta: i64, n: i64, ext: Extension) -> usize {
    match ext {
        Extension::Zero => (delta + n) as usize,
        Extension::Periodic => (delta + n / 2).rem_euclid(n) as usize,
    }
}

fn direct_values(f: &GridFunction, k: &GridFunction) -> Vec<f64> {
    let g = &f.grid;
    let n = g.n() as i64;
    let nk = k.grid.n();
    let ext = f.extension;
    let cell = g.cell();
    let nonzero: Vec<usize> = (0..f.len()).filter(|&j| f.values[j] != 0.0).collect();
    (0..f.len())
        .into_par_iter()
        .map(|i| {
            let [ia, ib] = g.unflatten(i);
            let mut s = 0.0;
            for &j in &nonzero {
                let [ja, jb] = g.unflatten(j);
                let ka = kernel_index(ia as i64 - ja as i64, n, ext);
                let kv = if g.dim() == 1 {
                    k.values[ka]
                } else {
                    k.values[ka * nk + kernel_index(ib as i64 - jb as i64, n, ext)]
                };
                s += kv * f.values[j];
            }
            s * cell
        })
        .collect()
}

/// Real input zero-padded into a complex transform buffer.
pub(crate) fn padded(values: &[f64], dim: usize, n: usize, p: usize) -> Vec<C64> {
    let mut buf = vec![C64::default(); p.pow(dim as u32)];
    match dim {
        1 => {
            for (b, &v) in buf.iter_mut().zip(values) {
                b.re = v;
            }
        }
        _ => {
            for a in 0..n {
                for b in 0..n {
                    buf[a * p + b].re = values[a * n + b];
                }
            }
        }
    }
    buf
}

/// Real and imaginary parts of the first `n^d` samples of a transform buffer, scaled.
pub(crate) fn unpad(
    buf: &[C64],
    dim: usize,
    n: usize,
    p: usize,
    scale: f64,
) -> (Vec<f64>, Vec<f64>) {
    let len = n.pow(dim as u32);
    let mut re = Vec::with_capacity(len);
    let mut im = Vec::with_capacity(len);
    match dim {
        1 => {
            for z in &buf[..n] {
                re.push(z.re * scale);
                im.push(z.im * scale);
            }
        }
        _ => {
            for a in 0..n {
                for z in &buf[a * p..a * p + n] {
                    re.push(z.re * scale);
                    im.push(z.im * scale);
                }
            }
        }
    }
    (re, im)
}

/// Transform of the circularly arranged kernel samples (imaginary part from `second`).
pub(crate) fn kernel_spectrum(
    plan: &Plan,
    dim: usize,
    p: usize,
    first: &[f64],
    second: Option<&[f64]>,
) -> Vec<C64> {
    let a = circular_shift(first, dim, p);
    let mut buf: Vec<C64> = match second {
        Some(s) => {
            let b = circular_shift(s, dim, p);
            a.iter()
                .zip(&b)
                .map(|(&re, &im)| C64::new(re, im))
                .collect()
        }
        None => a.iter().map(|&re| C64::new(re, 0.0)).collect(),
    };
    plan.forward(&mut buf);
    buf
}

fn fft_values(f: &GridFunction, k: &GridFunction) -> Vec<f64> {
    let g = &f.grid;
    let (d, n) = (g.dim(), g.n());
    let p = transform_len(&g.with_extension(f.extension));
    let plan = Plan::new(d, p);
    let spec = kernel_spectrum(&plan, d, p, &k.values, None);
    let mut buf = padded(&f.values, d, n, p);
    plan.forward(&mut buf);
    for (z, s) in buf.iter_mut().zip(&spec) {
        *z *= s;
    }
    plan.inverse(&mut buf);
    unpad(&buf, d, n, p, g.cell() / plan.len() as f64).0
}

use rayon::prelude::*;

use super::engine::{kernel_spectrum, padded, transform_len, unpad};
use super::fft::{transpose, Plan, C64};
use super::scales::ScaleSet;
use crate::error::{Error, Result};
use crate::gridfn::{sample_dilated, Grid, GridFunction, KernelFamily, KernelSpec};

/// Streams `phi_t * input` over all scales (ascending) for several inputs on one grid.
///
/// `visit(k, t_k, layers)` receives one layer per input, in input order. Layers
/// are computed independently of each other and of the worker count.
pub fn sweep<V>(
    inputs: &[&GridFunction],
    kernel: &KernelSpec,
    scales: &ScaleSet,
    mut visit: V,
) -> Result<()>
where
    V: FnMut(usize, f64, Vec<Vec<f64>>) -> Result<()>,
{
    let Some(first) = inputs.first() else {
        return Ok(());
    };
    let grid = first.grid.with_extension(first.extension);
    for f in inputs {
        if !f.grid.same_box(&grid) || f.extension != grid.extension() {
            return Err(Error::GridMismatch(
                "all sweep inputs must share grid and extension".into(),
            ));
        }
    }
    if kernel.dim != grid.dim() {
        return Err(Error::GridMismatch(format!(
            "{}-d kernel on a {}-d grid",
            kernel.dim,
            grid.dim()
        )));
    }
    scales.validate(&grid)?;
    for &t in scales.as_slice() {
        if kernel.exceeds_box(t, &grid) {
            log::warn!(
                "{} kernel at t = {t} reaches beyond the grid box",
                kernel.name()
            );
        }
    }
    match (&kernel.family, grid.dim()) {
        (KernelFamily::Gaussian { sigma }, 2) => {
            separable_sweep(inputs, *sigma, &grid, scales, &mut visit)
        }
        _ => paired_sweep(inputs, kernel, &grid, scales, &mut visit),
    }
}

/// Two scales per transform: the kernels ride in the real and imaginary parts,
/// and since the inputs are real the two convolutions separate exactly.
fn paired_sweep<V>(
    inputs: &[&GridFunction],
    kernel: &KernelSpec,
    grid: &Grid,
    scales: &ScaleSet,
    visit: &mut V,
) -> Result<()>
where
    V: FnMut(usize, f64, Vec<Vec<f64>>) -> Result<()>,
{
    let (d, n) = (grid.dim(), grid.n());
    let p = transform_len(grid);
    let plan = Plan::new(d, p);
    let scale = grid.cell() / plan.len() as f64;
    let spectra: Vec<Vec<C64>> = inputs
        .par_iter()
        .map(|f| {
            let mut buf = padded(&f.values, d, n, p);
            plan.forward(&mut buf);
            buf
        })
        .collect();
    let ts = scales.as_slice();
    for k in (0..ts.len()).step_by(2) {
        let second = ts.get(k + 1).copied();
        let (a, b) = rayon::join(
            || sample_dilated(kernel, ts[k], grid),
            || second.map(|t| sample_dilated(kernel, t, grid)).transpose(),
        );
        let (a, b) = (a?, b?);
        let spec = kernel_spectrum(
            &plan,
            d,
            p,
            &a.values,
            b.as_ref().map(|g| g.values.as_slice()),
        );
        let (re, im): (Vec<Vec<f64>>, Vec<Vec<f64>>) = spectra
            .par_iter()
            .map(|fs| {
                let mut buf: Vec<C64> = fs.iter().zip(&spec).map(|(x, y)| x * y).collect();
                plan.inverse(&mut buf);
                unpad(&buf, d, n, p, scale)
            })
            .unzip();
        visit(k, ts[k], re)?;
        if let Some(t) = second {
            visit(k + 1, t, im)?;
        }
    }
    Ok(())
}

/// Gaussian kernels factor over axes: one 1-d convolution per axis, two rows per transform.
fn separable_sweep<V>(
    inputs: &[&GridFunction],
    sigma: f64,
    grid: &Grid,
    scales: &ScaleSet,
    visit: &mut V,
) -> Result<()>
where
    V: FnMut(usize, f64, Vec<Vec<f64>>) -> Result<()>,
{
    let n = grid.n();
    let line = Grid::new(1, grid.extent(), n, grid.origin(), grid.extension())?;
    let factor = KernelSpec::new(KernelFamily::Gaussian { sigma }, 1)?;
    let p = transform_len(&line);
    let plan = Plan::new(1, p);
    let scale = line.h() / p as f64;
    for (k, &t) in scales.as_slice().iter().enumerate() {
        let g = sample_dilated(&factor, t, &line)?;
        let spec = kernel_spectrum(&plan, 1, p, &g.values, None);
        let layers: Vec<Vec<f64>> = inputs
            .par_iter()
            .map(|f| {
                let mut v = f.values.clone();
                rows_convolve(&mut v, n, p, &plan, &spec, scale);
                transpose(&mut v, n);
                rows_convolve(&mut v, n, p, &plan, &spec, scale);
                transpose(&mut v, n);
                v
            })
            .collect();
        visit(k, t, layers)?;
    }
    Ok(())
}

fn rows_convolve(values: &mut [f64], n: usize, p: usize, plan: &Plan, spec: &[C64], scale: f64) {
    values.par_chunks_mut(2 * n).for_each(|pair| {
        let mut buf = vec![C64::default(); p];
        for q in 0..n {
            buf[q] = C64::new(pair[q], pair[n + q]);
        }
        plan.forward(&mut buf);
        for (z, s) in buf.iter_mut().zip(spec) {
            *z *= s;
        }
        plan.inverse(&mut buf);
        for q in 0..n {
            pair[q] = buf[q].re * scale;
            pair[n + q] = buf[q].im * scale;
        }
    });
}

/// Collects every layer of a sweep over a single input.
pub(crate) fn collect_layers(
    f: &GridFunction,
    kernel: &KernelSpec,
    scales: &ScaleSet,
) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(scales.len());
    sweep(&[f], kernel, scales, |_, _, mut layers| {
        out.push(layers.pop().expect("one input"));
        Ok(())
    })?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convolve::{convolve_with, dilate, ConvPath};
    use crate::gridfn::{make_grid, Extension};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(grid: &Grid, seed: u64) -> GridFunction {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = (0..grid.len())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        GridFunction::new(grid.clone(), v).unwrap()
    }

    #[test]
    fn sweep_matches_direct_convolution() {
        for (dim, n) in [(1, 64), (2, 16)] {
            for ext in [Extension::Zero, Extension::Periodic] {
                let g = make_grid(dim, 2.0, n, ext).unwrap();
                let f = random(&g, 3);
                let scales = ScaleSet::log_uniform(g.h(), 3.0, 5).unwrap();
                for kernel in [
                    KernelSpec::gaussian(dim),
                    KernelSpec::poisson(dim),
                    KernelSpec::bump(dim),
                ] {
                    let layers = collect_layers(&f, &kernel, &scales).unwrap();
                    assert_eq!(layers.len(), 5);
                    for (layer, &t) in layers.iter().zip(scales.as_slice()) {
                        let k = dilate(&kernel, t, &g).unwrap();
                        let direct = convolve_with(&f, &k, ConvPath::Direct).unwrap();
                        for (a, b) in layer.iter().zip(&direct.values) {
                            assert!(
                                (a - b).abs() < 1e-12,
                                "{dim}d {ext:?} {} t={t}: {a} vs {b}",
                                kernel.name()
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn several_inputs_match_single_runs() {
        let g = make_grid(1, 2.0, 32, Extension::Zero).unwrap();
        let fs: Vec<GridFunction> = (0..3).map(|s| random(&g, s)).collect();
        let refs: Vec<&GridFunction> = fs.iter().collect();
        let scales = ScaleSet::log_uniform(0.1, 2.0, 4).unwrap();
        let kernel = KernelSpec::gaussian(1);
        let mut joint = vec![Vec::new(); 3];
        sweep(&refs, &kernel, &scales, |_, _, layers| {
            for (acc, l) in joint.iter_mut().zip(layers) {
                acc.push(l);
            }
            Ok(())
        })
        .unwrap();
        for (f, j) in fs.iter().zip(&joint) {
            assert_eq!(&collect_layers(f, &kernel, &scales).unwrap(), j);
        }
    }
}

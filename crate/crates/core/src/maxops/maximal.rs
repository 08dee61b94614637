use serde::{Deserialize, Serialize};

use super::filter::disk_max;
use crate::convolve::{sweep, ScaleSet, ScaleStack};
use crate::error::{Error, Result};
use crate::gridfn::{GridFunction, KernelSpec};

/// Cone `{(y, t) : |x - y| <= a t, t <= t_cap}` of a nontangential supremum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeParams {
    pub aperture: f64,
    #[serde(default = "unbounded")]
    pub t_cap: f64,
}

fn unbounded() -> f64 {
    f64::INFINITY
}

impl ConeParams {
    pub fn new(aperture: f64) -> Self {
        ConeParams {
            aperture,
            t_cap: f64::INFINITY,
        }
    }

    pub fn truncated(aperture: f64, t_cap: f64) -> Self {
        ConeParams { aperture, t_cap }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.aperture > 0.0) || !self.aperture.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "aperture {} must be positive",
                self.aperture
            )));
        }
        if !(self.t_cap > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "t_cap {} must be positive",
                self.t_cap
            )));
        }
        Ok(())
    }
}

fn fold_max(acc: &mut [f64], layer: &[f64]) {
    for (a, v) in acc.iter_mut().zip(layer) {
        if *v > *a {
            *a = *v;
        }
    }
}

fn require_absolute(stack: &ScaleStack, want: bool) -> Result<()> {
    if stack.is_empty() {
        return Err(Error::EmptyStack);
    }
    if stack.absolute != want {
        let msg = if want {
            "needs a stack of phi_t * |f|"
        } else {
            "needs a stack of phi_t * f"
        };
        return Err(Error::InvalidParameter(msg.into()));
    }
    Ok(())
}

/// `M_phi f = max_k phi_{t_k} * |f|` from a stack built with `absolute = true`.
///
/// Layers of `|f|` are nonnegative up to transform round-off; the fold starts at
/// zero so that round-off never produces negative output.
pub fn maximal_convolution(stack: &ScaleStack) -> Result<GridFunction> {
    require_absolute(stack, true)?;
    let mut out = vec![0.0; stack.base.len()];
    for l in &stack.layers {
        fold_max(&mut out, &l.values);
    }
    Ok(GridFunction::from_parts(stack.base.grid.clone(), out))
}

/// Maximal function together with the first scale index attaining the maximum.
pub fn maximal_with_argmax(stack: &ScaleStack) -> Result<(GridFunction, Vec<usize>)> {
    require_absolute(stack, true)?;
    let mut out = vec![0.0; stack.base.len()];
    let mut arg = vec![0; out.len()];
    for (k, l) in stack.layers.iter().enumerate() {
        for ((o, a), v) in out.iter_mut().zip(arg.iter_mut()).zip(&l.values) {
            if *v > *o {
                *o = *v;
                *a = k;
            }
        }
    }
    Ok((GridFunction::from_parts(stack.base.grid.clone(), out), arg))
}

/// `m_phi f = max_{t_k <= t_cap} phi_{t_k} * |f|`.
pub fn truncated_maximal(stack: &ScaleStack, t_cap: f64) -> Result<GridFunction> {
    require_absolute(stack, true)?;
    let count = stack.scales.capped(t_cap)?.len();
    let mut out = vec![0.0; stack.base.len()];
    for l in &stack.layers[..count] {
        fold_max(&mut out, &l.values);
    }
    Ok(GridFunction::from_parts(stack.base.grid.clone(), out))
}

/// `max { |phi_{t_k} * f(y)| : |x - y| <= a t_k, t_k <= t_cap }` from a stack with `absolute = false`.
pub fn nontangential_maximal(stack: &ScaleStack, cone: &ConeParams) -> Result<GridFunction> {
    require_absolute(stack, false)?;
    cone.validate()?;
    let count = stack.scales.count_up_to(cone.t_cap);
    if count == 0 {
        return Err(Error::EmptyCone);
    }
    let grid = &stack.base.grid;
    let mut out = vec![0.0; grid.len()];
    for (l, &t) in stack.layers.iter().zip(stack.scales.as_slice()).take(count) {
        let mags: Vec<f64> = l.values.iter().map(|v| v.abs()).collect();
        fold_max(&mut out, &disk_max(&mags, grid, cone.aperture * t));
    }
    Ok(GridFunction::from_parts(grid.clone(), out))
}

/// `M_phi` (or its truncation at `t_cap`) for several inputs without storing stacks.
pub fn maximal_many(
    inputs: &[&GridFunction],
    kernel: &KernelSpec,
    scales: &ScaleSet,
    t_cap: f64,
) -> Result<Vec<GridFunction>> {
    let scales = scales.capped(t_cap)?;
    let abs: Vec<GridFunction> = inputs.iter().map(|f| f.abs()).collect();
    let refs: Vec<&GridFunction> = abs.iter().collect();
    let mut acc: Vec<Vec<f64>> = abs.iter().map(|f| vec![0.0; f.len()]).collect();
    sweep(&refs, kernel, &scales, |_, _, layers| {
        for (a, l) in acc.iter_mut().zip(&layers) {
            fold_max(a, l);
        }
        Ok(())
    })?;
    Ok(acc
        .into_iter()
        .zip(&abs)
        .map(|(v, f)| GridFunction::from_parts(f.grid.clone(), v))
        .collect())
}

/// Nontangential maximal functions of several inputs without storing stacks.
pub fn nontangential_many(
    inputs: &[&GridFunction],
    kernel: &KernelSpec,
    scales: &ScaleSet,
    cone: &ConeParams,
) -> Result<Vec<GridFunction>> {
    cone.validate()?;
    if scales.count_up_to(cone.t_cap) == 0 {
        return Err(Error::EmptyCone);
    }
    let scales = scales.capped(cone.t_cap)?;
    let Some(first) = inputs.first() else {
        return Ok(Vec::new());
    };
    let grid = first.grid.with_extension(first.extension);
    let mut acc: Vec<Vec<f64>> = inputs.iter().map(|f| vec![0.0; f.len()]).collect();
    sweep(inputs, kernel, &scales, |_, t, layers| {
        for (a, l) in acc.iter_mut().zip(layers) {
            let mags: Vec<f64> = l.into_iter().map(f64::abs).collect();
            fold_max(a, &disk_max(&mags, &grid, cone.aperture * t));
        }
        Ok(())
    })?;
    Ok(acc
        .into_iter()
        .map(|v| GridFunction::from_parts(grid.clone(), v))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convolve::build_scale_stack;
    use crate::gridfn::{make_grid, Extension};
    use approx::assert_abs_diff_eq;

    fn indicator(g: &crate::gridfn::Grid) -> GridFunction {
        GridFunction::from_fn(g, |x| {
            if x[0] > 0.0 && x[0] < 1.0 {
                1.0
            } else if x[0] == 0.0 || x[0] == 1.0 {
                0.5
            } else {
                0.0
            }
        })
        .unwrap()
    }

    #[test]
    fn indicator_with_box_kernel() {
        let g = make_grid(1, 8.0, 1024, Extension::Zero).unwrap();
        let f = indicator(&g);
        let scales = ScaleSet::log_uniform(g.h(), 8.0, 1024).unwrap();
        let k = KernelSpec::unit_box(1);
        let at2 = g.nearest_axis_index(2.0).unwrap();
        let full = build_scale_stack(&f, &k, &scales, true).unwrap();
        // (t - 1) / (2t) on [1, 2] and 1 / (2t) after: maximum 1/4 at t = 2.
        assert_abs_diff_eq!(
            maximal_convolution(&full).unwrap().values[at2],
            0.25,
            epsilon = 1e-3
        );
        assert!(truncated_maximal(&full, 1.0).unwrap().values[at2] < 1e-12);
        let signed = build_scale_stack(&f, &k, &scales, false).unwrap();
        let nt = nontangential_maximal(&signed, &ConeParams::new(1.0)).unwrap();
        // y = 2 - t, t = 1: the window [0, 2] covers all of [0, 1].
        assert_abs_diff_eq!(nt.values[at2], 0.5, epsilon = 1e-3);
    }

    #[test]
    fn truncation_edge_cases() {
        let g = make_grid(1, 4.0, 64, Extension::Zero).unwrap();
        let f = GridFunction::from_fn(&g, |x| (-x[0] * x[0]).exp()).unwrap();
        let scales = ScaleSet::default_for(&g, 8.0).unwrap();
        let s = build_scale_stack(&f, &KernelSpec::gaussian(1), &scales, true).unwrap();
        assert_eq!(
            truncated_maximal(&s, scales.t_max()).unwrap(),
            maximal_convolution(&s).unwrap()
        );
        let first: Vec<f64> = s.layers[0].values.iter().map(|v| v.max(0.0)).collect();
        assert_eq!(truncated_maximal(&s, scales.t_min()).unwrap().values, first);
        assert!(matches!(
            truncated_maximal(&s, scales.t_min() / 2.0),
            Err(Error::CapBelowMinScale { .. })
        ));
    }

    #[test]
    fn streaming_matches_stacks() {
        let g = make_grid(1, 4.0, 64, Extension::Zero).unwrap();
        let f = GridFunction::from_fn(&g, |x| x[0].sin() * (-x[0] * x[0]).exp()).unwrap();
        let scales = ScaleSet::default_for(&g, 16.0).unwrap();
        let k = KernelSpec::poisson(1);
        let s = build_scale_stack(&f, &k, &scales, true).unwrap();
        assert_eq!(
            maximal_many(&[&f], &k, &scales, f64::INFINITY).unwrap()[0],
            maximal_convolution(&s).unwrap()
        );
        let s = build_scale_stack(&f, &k, &scales, false).unwrap();
        let cone = ConeParams::truncated(2.0, 1.0);
        assert_eq!(
            nontangential_many(&[&f], &k, &scales, &cone).unwrap()[0],
            nontangential_maximal(&s, &cone).unwrap()
        );
    }

    #[test]
    fn wrong_stack_kind_is_rejected() {
        let g = make_grid(1, 4.0, 64, Extension::Zero).unwrap();
        let f = GridFunction::zeros(&g);
        let scales = ScaleSet::default_for(&g, 8.0).unwrap();
        let s = build_scale_stack(&f, &KernelSpec::gaussian(1), &scales, false).unwrap();
        assert!(maximal_convolution(&s).is_err());
    }
}

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::function::GridFunction;
use super::grid::{Extension, Grid};
use crate::error::{Error, Result};

fn one() -> f64 {
    1.0
}

/// Radial profile families. Every kernel here is a function of `|x|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KernelFamily {
    /// `exp(-|x|^2 / (2 sigma^2))`.
    Gaussian {
        #[serde(default = "one")]
        sigma: f64,
    },
    /// `(1 + |x|^2)^{-(d+1)/2}`.
    Poisson,
    /// `exp(-1 / (1 - |x|^2 / R^2))` on `|x| < R`.
    Bump {
        #[serde(default = "one")]
        radius: f64,
    },
    /// Normalized indicator of the closed ball of radius `R`.
    Box {
        #[serde(default = "one")]
        radius: f64,
    },
    /// Radial table, linearly interpolated, zero past the last radius.
    CustomTable {
        radii: Vec<f64>,
        values: Vec<f64>,
        #[serde(default)]
        decay_exponent: Option<f64>,
    },
}

/// A unit-mass radial kernel in a fixed dimension.
///
/// Serializes as the family table plus `dim`; derived fields are recomputed on load.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "KernelRepr", try_from = "KernelRepr")]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub dim: usize,
    /// Multiplier applied to the raw profile so that the continuum integral is 1.
    pub normalization: f64,
    /// Radius of the support, `f64::INFINITY` for non-compact kernels.
    pub support_radius: f64,
    /// Smallest `beta` with `phi(x) <= C (1 + |x|)^{-beta}`; infinite for rapid decay.
    pub decay_exponent: f64,
}

#[derive(Clone, Serialize, Deserialize)]
struct KernelRepr {
    dim: usize,
    #[serde(flatten)]
    family: KernelFamily,
}

impl From<KernelSpec> for KernelRepr {
    fn from(k: KernelSpec) -> Self {
        KernelRepr {
            dim: k.dim,
            family: k.family,
        }
    }
}

impl TryFrom<KernelRepr> for KernelSpec {
    type Error = Error;
    fn try_from(r: KernelRepr) -> Result<Self> {
        KernelSpec::new(r.family, r.dim)
    }
}

fn ball_volume(dim: usize, r: f64) -> f64 {
    match dim {
        1 => 2.0 * r,
        _ => PI * r * r,
    }
}

/// Surface factor `omega_d` with `int_{R^d} g(|x|) dx = omega_d int_0^inf g(r) r^{d-1} dr`.
fn sphere_factor(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        _ => 2.0 * PI,
    }
}

fn bump_profile(u: f64) -> f64 {
    if u >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - u * u)).exp()
    }
}

/// `int_0^1 exp(-1/(1-u^2)) u^{d-1} du` by composite Simpson.
fn bump_radial_integral(dim: usize) -> f64 {
    let m = 200_000;
    let du = 1.0 / m as f64;
    let g = |u: f64| bump_profile(u) * u.powi(dim as i32 - 1);
    let mut s = g(0.0) + g(1.0);
    for i in 1..m {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * g(i as f64 * du);
    }
    s * du / 3.0
}

fn table_value(radii: &[f64], values: &[f64], r: f64) -> f64 {
    let last = radii.len() - 1;
    if r > radii[last] {
        return 0.0;
    }
    let k = radii.partition_point(|&ri| ri <= r);
    if k == 0 {
        return values[0];
    }
    if k > last {
        return values[last];
    }
    let (a, b) = (radii[k - 1], radii[k]);
    let s = (r - a) / (b - a);
    values[k - 1] + s * (values[k] - values[k - 1])
}

fn table_integral(dim: usize, radii: &[f64], values: &[f64]) -> f64 {
    let mut total = 0.0;
    for k in 0..radii.len() - 1 {
        let (a, b) = (radii[k], radii[k + 1]);
        let (va, vb) = (values[k], values[k + 1]);
        let slope = (vb - va) / (b - a);
        total += match dim {
            1 => 0.5 * (va + vb) * (b - a),
            _ => (va - slope * a) * (b * b - a * a) / 2.0 + slope * (b * b * b - a * a * a) / 3.0,
        };
    }
    total * sphere_factor(dim)
}

impl KernelSpec {
    pub fn new(family: KernelFamily, dim: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidDimension(dim));
        }
        let d = dim as f64;
        let (normalization, support_radius, decay_exponent) = match &family {
            KernelFamily::Gaussian { sigma } => {
                positive("sigma", *sigma)?;
                (
                    (2.0 * PI * sigma * sigma).powf(-d / 2.0),
                    f64::INFINITY,
                    f64::INFINITY,
                )
            }
            KernelFamily::Poisson => {
                // Gamma((d+1)/2) / pi^{(d+1)/2}: Gamma(1) = 1, Gamma(3/2) = sqrt(pi)/2.
                let c = match dim {
                    1 => 1.0 / PI,
                    _ => 1.0 / (2.0 * PI),
                };
                (c, f64::INFINITY, d + 1.0)
            }
            KernelFamily::Bump { radius } => {
                positive("radius", *radius)?;
                let mass = sphere_factor(dim) * radius.powi(dim as i32) * bump_radial_integral(dim);
                (1.0 / mass, *radius, f64::INFINITY)
            }
            KernelFamily::Box { radius } => {
                positive("radius", *radius)?;
                (1.0 / ball_volume(dim, *radius), *radius, f64::INFINITY)
            }
            KernelFamily::CustomTable {
                radii,
                values,
                decay_exponent,
            } => {
                if radii.len() < 2 || radii.len() != values.len() {
                    return Err(Error::InvalidParameter(
                        "custom table needs at least two (radius, value) pairs of equal length"
                            .into(),
                    ));
                }
                if radii[0] != 0.0 || radii.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::InvalidParameter(
                        "custom table radii must start at 0 and increase strictly".into(),
                    ));
                }
                if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                    return Err(Error::InvalidParameter(
                        "custom table values must be finite and >= 0".into(),
                    ));
                }
                let mass = table_integral(dim, radii, values);
                if !(mass > 0.0) {
                    return Err(Error::NonNormalizable);
                }
                let support = *radii.last().unwrap();
                (1.0 / mass, support, decay_exponent.unwrap_or(f64::INFINITY))
            }
        };
        Ok(KernelSpec {
            family,
            dim,
            normalization,
            support_radius,
            decay_exponent,
        })
    }

    pub fn gaussian(dim: usize) -> Self {
        KernelSpec::new(KernelFamily::Gaussian { sigma: 1.0 }, dim).expect("unit gaussian")
    }

    pub fn poisson(dim: usize) -> Self {
        KernelSpec::new(KernelFamily::Poisson, dim).expect("poisson")
    }

    pub fn bump(dim: usize) -> Self {
        KernelSpec::new(KernelFamily::Bump { radius: 1.0 }, dim).expect("unit bump")
    }

    pub fn unit_box(dim: usize) -> Self {
        KernelSpec::new(KernelFamily::Box { radius: 1.0 }, dim).expect("unit box")
    }

    pub fn name(&self) -> &'static str {
        match self.family {
            KernelFamily::Gaussian { .. } => "gaussian",
            KernelFamily::Poisson => "poisson",
            KernelFamily::Bump { .. } => "bump",
            KernelFamily::Box { .. } => "box",
            KernelFamily::CustomTable { .. } => "custom-table",
        }
    }

    pub fn is_compact(&self) -> bool {
        self.support_radius.is_finite()
    }

    /// Smooth with rapid decay (the hypothesis class of the boundedness results).
    pub fn is_schwartz(&self) -> bool {
        matches!(
            self.family,
            KernelFamily::Gaussian { .. } | KernelFamily::Bump { .. }
        )
    }

    /// Characteristic width used for resolution requirements.
    pub fn width(&self) -> f64 {
        match &self.family {
            KernelFamily::Gaussian { sigma } => *sigma,
            KernelFamily::Poisson => 1.0,
            _ => self.support_radius,
        }
    }

    /// Radius beyond which the dilated kernel at scale `t` is treated as zero.
    fn cutoff(&self, t: f64) -> f64 {
        match &self.family {
            KernelFamily::Gaussian { sigma } => 40.0 * sigma * t,
            _ => self.support_radius * t,
        }
    }

    /// Normalized kernel value at radius `r`.
    pub fn eval_radial(&self, r: f64) -> f64 {
        let d = self.dim as f64;
        let raw = match &self.family {
            KernelFamily::Gaussian { sigma } => (-(r * r) / (2.0 * sigma * sigma)).exp(),
            KernelFamily::Poisson => (1.0 + r * r).powf(-(d + 1.0) / 2.0),
            KernelFamily::Bump { radius } => bump_profile(r / radius),
            KernelFamily::Box { radius } => {
                if (r - radius).abs() <= 1e-12 * radius {
                    0.5
                } else if r < *radius {
                    1.0
                } else {
                    0.0
                }
            }
            KernelFamily::CustomTable { radii, values, .. } => table_value(radii, values, r),
        };
        self.normalization * raw
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.eval_radial(x.iter().map(|c| c * c).sum::<f64>().sqrt())
    }

    /// `t^{-d} phi(r / t)` without any discrete renormalization.
    pub fn eval_dilated(&self, r: f64, t: f64) -> f64 {
        t.powi(-(self.dim as i32)) * self.eval_radial(r / t)
    }

    /// Digest of the kernel parameters (stable across runs).
    pub fn digest(&self) -> String {
        crate::digest::of_json(self)
    }

    /// Whether the support of the dilated kernel reaches past the zero-extension window.
    pub fn exceeds_box(&self, t: f64, grid: &Grid) -> bool {
        self.is_compact()
            && grid.extension() == Extension::Zero
            && self.support_radius * t > 2.0 * grid.extent()
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be positive, got {v}"
        )))
    }
}

/// Raw (unnormalized-on-the-grid) samples of `phi_t` on the kernel grid of `grid`.
///
/// Periodic grids sum periodic images so that the wrapped kernel is the
/// periodization of `phi_t`.
fn raw_dilated_samples(kernel: &KernelSpec, t: f64, grid: &Grid) -> Vec<f64> {
    let kg = grid.kernel_grid();
    let nk = kg.n();
    let h = grid.h();
    let half = (nk / 2) as i64;
    let cutoff = kernel.cutoff(t);
    let eval = |r: f64| {
        if r > cutoff {
            0.0
        } else {
            kernel.eval_dilated(r, t)
        }
    };
    let period = 2.0 * grid.extent();
    let images: i64 = match grid.extension() {
        Extension::Zero => 0,
        Extension::Periodic => {
            if cutoff.is_finite() {
                ((cutoff / period).ceil() as i64).min(8)
            } else {
                4
            }
        }
    };
    // Radial values on one axis of offsets are reused for every image combination.
    match grid.dim() {
        1 => (0..nk)
            .map(|m| {
                let base = (m as i64 - half) as f64 * h;
                let mut s = 0.0;
                for j in -images..=images {
                    s += eval((base + j as f64 * period).abs());
                }
                s
            })
            .collect(),
        _ => {
            let mut out = vec![0.0; nk * nk];
            let cut2 = cutoff * cutoff;
            for a in 0..nk {
                let xa = (a as i64 - half) as f64 * h;
                for b in 0..nk {
                    let xb = (b as i64 - half) as f64 * h;
                    let mut s = 0.0;
                    for ja in -images..=images {
                        let ya = xa + ja as f64 * period;
                        for jb in -images..=images {
                            let yb = xb + jb as f64 * period;
                            let r2 = ya * ya + yb * yb;
                            if r2 <= cut2 {
                                s += eval(r2.sqrt());
                            }
                        }
                    }
                    out[a * nk + b] = s;
                }
            }
            out
        }
    }
}

/// Discrete mass `h^d * sum` of the raw dilated samples (ascending index order).
fn renormalize(values: &mut [f64], cell: f64) -> Result<f64> {
    let mass = values.iter().sum::<f64>() * cell;
    if !(mass > 0.0) {
        return Err(Error::NonNormalizable);
    }
    for v in values.iter_mut() {
        *v /= mass;
    }
    Ok(mass)
}

/// Samples `phi_t` on the kernel grid and rescales to unit discrete mass.
pub(crate) fn sample_dilated(kernel: &KernelSpec, t: f64, grid: &Grid) -> Result<GridFunction> {
    if kernel.dim != grid.dim() {
        return Err(Error::GridMismatch(format!(
            "kernel dimension {} on a {}-dimensional grid",
            kernel.dim,
            grid.dim()
        )));
    }
    let mut values = raw_dilated_samples(kernel, t, grid);
    renormalize(&mut values, grid.cell())?;
    Ok(GridFunction::from_parts(grid.kernel_grid(), values))
}

/// Kernel samples on the displacement grid of `grid`, rescaled to unit discrete mass.
pub fn sample_kernel(kernel: &KernelSpec, grid: &Grid) -> Result<GridFunction> {
    let h = grid.h();
    let limit = kernel.width() / 4.0;
    if h > limit * (1.0 + 1e-12) {
        return Err(Error::UnderResolvedKernel { h, limit });
    }
    sample_dilated(kernel, 1.0, grid)
}

use serde::{Deserialize, Serialize};

use crate::convolve::ScaleSet;
use crate::error::Result;
use crate::gridfn::{make_grid, Extension, Grid};

/// Tolerances of every check. [`Tolerances::scaled`] multiplies all of them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Allowed excess of `|d_j M f|` over `M(d_j f)`, relative to `max |grad f|`.
    pub kinnunen: f64,
    /// Relative change of a measured constant under one refinement.
    pub refinement: f64,
    /// Same, for the per-ball oscillation inequality.
    pub lerner_perez: f64,
    /// Same, for the split-integral constants.
    pub e1_e2: f64,
    /// Largest admissible `max / min` over a family of measured ratios.
    pub band: f64,
    /// Allowed relative spread of the Poisson/Gaussian ratio across dilations.
    pub equivalence: f64,
    /// Allowed deviation of a fitted log-log slope.
    pub slope: f64,
    /// Argmax scale must satisfy `t / |x|` in `[1/argmax_ratio, argmax_ratio]`.
    pub argmax_ratio: f64,
    /// Absolute slack for inequalities that hold exactly in discrete form.
    pub exact: f64,
    /// Absolute agreement of the transform and direct convolution paths.
    pub convolution: f64,
    /// Absolute mismatch of the split integrals against the whole-ball integral.
    pub partition: f64,
    /// Absolute error of closed-form values of `N_p` for linear data.
    pub np_linear: f64,
    /// Same, for the step function.
    pub np_step: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            kinnunen: 0.05,
            refinement: 0.10,
            lerner_perez: 0.15,
            e1_e2: 0.15,
            band: 10.0,
            equivalence: 0.20,
            slope: 0.15,
            argmax_ratio: 4.0,
            exact: 1e-12,
            convolution: 1e-10,
            partition: 1e-10,
            np_linear: 1e-2,
            np_step: 2e-2,
        }
    }
}

impl Tolerances {
    pub fn scaled(&self, alpha: f64) -> Tolerances {
        Tolerances {
            kinnunen: self.kinnunen * alpha,
            refinement: self.refinement * alpha,
            lerner_perez: self.lerner_perez * alpha,
            e1_e2: self.e1_e2 * alpha,
            band: self.band * alpha,
            equivalence: self.equivalence * alpha,
            slope: self.slope * alpha,
            argmax_ratio: self.argmax_ratio * alpha,
            exact: self.exact * alpha,
            convolution: self.convolution * alpha,
            partition: self.partition * alpha,
            np_linear: self.np_linear * alpha,
            np_step: self.np_step * alpha,
        }
    }
}

/// A zero-extended grid plus the density of its scale set.
///
/// [`Resolution::refined`] halves the spacing and doubles the scale density,
/// which is what every stability check compares against.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Resolution {
    pub dim: usize,
    pub extent: f64,
    pub n: usize,
    #[serde(default = "default_per_decade")]
    pub per_decade: f64,
    /// Number of times the base grid has been refined.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub level: u32,
}

fn default_per_decade() -> f64 {
    32.0
}

fn is_zero(v: &u32) -> bool {
    *v == 0
}

impl Resolution {
    pub fn new(dim: usize, extent: f64, n: usize) -> Self {
        Resolution {
            dim,
            extent,
            n,
            per_decade: default_per_decade(),
            level: 0,
        }
    }

    pub fn with_per_decade(mut self, per_decade: f64) -> Self {
        self.per_decade = per_decade;
        self
    }

    pub fn grid(&self) -> Result<Grid> {
        make_grid(self.dim, self.extent, self.n, Extension::Zero)
    }

    pub fn h(&self) -> f64 {
        2.0 * self.extent / self.n as f64
    }

    /// Scales from `h0 / 2` to `2 L`, where `h0` is the spacing before refinement.
    ///
    /// Refined levels insert geometric midpoints, so every refined set contains
    /// the coarser one.
    pub fn scales(&self) -> Result<ScaleSet> {
        let h0 = self.h() * 2f64.powi(self.level as i32);
        let mut s = ScaleSet::per_decade(
            h0 / 2.0,
            2.0 * self.extent,
            self.per_decade / 2f64.powi(self.level as i32),
        )?;
        for _ in 0..self.level {
            s = s.refined();
        }
        Ok(s)
    }

    pub fn refined(&self) -> Resolution {
        Resolution {
            n: self.n * 2,
            per_decade: self.per_decade * 2.0,
            level: self.level + 1,
            ..self.clone()
        }
    }
}

/// `|b - a| / |a|`, infinite when `a` vanishes and `b` does not.
pub fn relative_change(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (b - a).abs() / a.abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refinement_nests_scales() {
        let r = Resolution::new(1, 8.0, 256);
        let s0 = r.scales().unwrap();
        let s1 = r.refined().scales().unwrap();
        assert_eq!(s1.len(), 2 * s0.len() - 1);
        assert!(s0.as_slice().iter().all(|t| s1.as_slice().contains(t)));
        assert_eq!(r.refined().grid().unwrap().h(), r.h() / 2.0);
        assert!(s1.validate(&r.refined().grid().unwrap()).is_ok());
    }

    #[test]
    fn scaling_multiplies_everything() {
        let t = Tolerances::default().scaled(2.0);
        assert_eq!(t.kinnunen, 0.1);
        assert_eq!(t.band, 20.0);
    }
}

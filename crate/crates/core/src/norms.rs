//! Lebesgue, Hardy and Hardy-Sobolev quasi-norms and discrete derivatives.

use serde::{Deserialize, Serialize};

use crate::convolve::ScaleSet;
use crate::error::{Error, Result};
use crate::gridfn::{Extension, GridFunction, KernelSpec};
use crate::maxops::{nontangential_many, ConeParams};

/// `(h^d sum |f|^p)^{1/p}`.
pub fn lp_norm(f: &GridFunction, p: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::ExponentOutOfRange(format!(
            "p = {p} must be positive"
        )));
    }
    Ok(lp_norm_values(&f.values, f.grid.cell(), p))
}

pub(crate) fn lp_norm_values(values: &[f64], cell: f64, p: f64) -> f64 {
    if p == 1.0 {
        return values.iter().map(|v| v.abs()).sum::<f64>() * cell;
    }
    (values.iter().map(|v| v.abs().powf(p)).sum::<f64>() * cell).powf(1.0 / p)
}

/// Treatment of the outermost samples in [`gradient`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeRule {
    /// Centered differences reading neighbours through the extension rule.
    #[default]
    Extension,
    /// Second-order one-sided differences on the first and last sample of each
    /// axis (zero extension only; periodic data always wraps).
    OneSided,
}

/// Centered differences `(f(x + h e_j) - f(x - h e_j)) / (2h)`, one function per axis.
pub fn gradient(f: &GridFunction) -> Vec<GridFunction> {
    gradient_with(f, EdgeRule::Extension)
}

pub fn gradient_with(f: &GridFunction, rule: EdgeRule) -> Vec<GridFunction> {
    let g = &f.grid;
    let n = g.n();
    let h = g.h();
    let one_sided = rule == EdgeRule::OneSided && f.extension == Extension::Zero;
    (0..g.dim())
        .map(|axis| {
            let values = (0..f.len())
                .map(|i| {
                    let idx = g.unflatten(i);
                    let at = |shift: i64| {
                        let mut k = [idx[0] as i64, idx[1] as i64];
                        k[axis] += shift;
                        f.value_at(k)
                    };
                    if one_sided && idx[axis] == 0 {
                        (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h)
                    } else if one_sided && idx[axis] == n - 1 {
                        (3.0 * at(0) - 4.0 * at(-1) + at(-2)) / (2.0 * h)
                    } else {
                        (at(1) - at(-1)) / (2.0 * h)
                    }
                })
                .collect();
            GridFunction::from_parts(g.with_extension(f.extension), values)
        })
        .collect()
}

/// Exponents `p`, `q` and `r = dq / (d - q)`, `r' = r / (r - 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentConfig {
    pub dim: usize,
    pub p: f64,
    pub q: Option<f64>,
    pub r: Option<f64>,
    pub r_conj: Option<f64>,
}

/// Message used whenever an exponent falls outside the Hardy-Sobolev range.
pub const RANGE_RULE: &str = "1/p < 1 + 1/d";

impl ExponentConfig {
    pub fn new(p: f64, dim: usize) -> Result<Self> {
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::ExponentOutOfRange(format!(
                "p = {p} must be positive and finite"
            )));
        }
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidDimension(dim));
        }
        Ok(ExponentConfig {
            dim,
            p,
            q: None,
            r: None,
            r_conj: None,
        })
    }

    /// Checks `1/p < 1 + 1/d`, required wherever Hardy-Sobolev semantics are claimed.
    pub fn hardy_sobolev(p: f64, dim: usize) -> Result<Self> {
        let e = ExponentConfig::new(p, dim)?;
        if 1.0 / p >= 1.0 + 1.0 / dim as f64 {
            return Err(Error::ExponentOutOfRange(format!(
                "p = {p} in dimension {dim} violates {RANGE_RULE} (need p > {})",
                dim as f64 / (dim as f64 + 1.0)
            )));
        }
        Ok(e)
    }

    /// Sets `q` with `1/p < 1/q < 1 + 1/d` and derives `r`, `r'`.
    pub fn with_q(mut self, q: f64) -> Result<Self> {
        let d = self.dim as f64;
        if !(1.0 / self.p < 1.0 / q && 1.0 / q < 1.0 + 1.0 / d) {
            return Err(Error::ExponentOutOfRange(format!(
                "q = {q} must satisfy 1/p < 1/q < 1 + 1/d with p = {}, d = {}",
                self.p, self.dim
            )));
        }
        let r = d * q / (d - q);
        if !(r > 1.0) {
            return Err(Error::ExponentOutOfRange(format!(
                "r = dq/(d-q) = {r} must exceed 1"
            )));
        }
        self.q = Some(q);
        self.r = Some(r);
        self.r_conj = Some(r / (r - 1.0));
        Ok(self)
    }

    /// `q = (d/(d+1) + p) / 2`, the midpoint of the admissible interval `(d/(d+1), p)`.
    pub fn with_default_q(self) -> Result<Self> {
        let d = self.dim as f64;
        let q = (d / (d + 1.0) + self.p) / 2.0;
        self.with_q(q)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormMethod {
    Direct,
    MaximalCharacterization,
    Oscillation,
}

/// A quasi-norm value with the provenance needed to reproduce it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub value: f64,
    pub method: NormMethod,
    pub kernel_digest: String,
    pub scale_digest: String,
    /// Per-axis contributions for Hardy-Sobolev norms.
    pub components: Vec<f64>,
    pub refinement_delta: Option<f64>,
}

impl NormReport {
    /// Records `|value(refined) - value| / value`.
    pub fn with_refinement(mut self, refined: &NormReport) -> Self {
        self.refinement_delta = Some((refined.value - self.value).abs() / self.value);
        self
    }
}

/// Parameters shared by the Hardy-type quasi-norms.
#[derive(Clone, Debug, PartialEq)]
pub struct HardyParams {
    pub p: f64,
    pub kernel: KernelSpec,
    pub cone: ConeParams,
    pub scales: ScaleSet,
}

impl HardyParams {
    /// Poisson kernel with aperture 1 (the defining choice for `H^p`).
    pub fn poisson(p: f64, dim: usize, scales: ScaleSet) -> Self {
        HardyParams {
            p,
            kernel: KernelSpec::poisson(dim),
            cone: ConeParams::new(1.0),
            scales,
        }
    }

    /// Same parameters with the cone truncated at `t <= t_cap`.
    pub fn local(&self, t_cap: f64) -> Self {
        HardyParams {
            cone: ConeParams::truncated(self.cone.aperture, t_cap),
            ..self.clone()
        }
    }

    fn report(&self, value: f64, components: Vec<f64>) -> NormReport {
        NormReport {
            value,
            method: NormMethod::MaximalCharacterization,
            kernel_digest: self.kernel.digest(),
            scale_digest: self.scales.digest(),
            components,
            refinement_delta: None,
        }
    }
}

/// `||M~^a_phi f||_p` for several functions sharing one sweep.
pub fn hardy_quasinorms(inputs: &[&GridFunction], params: &HardyParams) -> Result<Vec<NormReport>> {
    if !(params.p > 0.0) {
        return Err(Error::ExponentOutOfRange(format!(
            "p = {} must be positive",
            params.p
        )));
    }
    let maxes = nontangential_many(inputs, &params.kernel, &params.scales, &params.cone)?;
    Ok(maxes
        .iter()
        .map(|m| {
            let v = lp_norm_values(&m.values, m.grid.cell(), params.p);
            params.report(v, Vec::new())
        })
        .collect())
}

/// `||f||_{H^p} = ||M~^a_phi f||_p`.
pub fn hardy_quasinorm(f: &GridFunction, params: &HardyParams) -> Result<NormReport> {
    Ok(hardy_quasinorms(&[f], params)?.remove(0))
}

/// `||f||_{h^p}`: the cone truncated at `t <= 1`.
pub fn local_hardy_quasinorm(f: &GridFunction, params: &HardyParams) -> Result<NormReport> {
    hardy_quasinorm(f, &params.local(1.0))
}

/// `sum_j ||d_j f||_{H^p}` for several functions; requires `1/p < 1 + 1/d`.
pub fn hardy_sobolev_quasinorms(
    inputs: &[&GridFunction],
    params: &HardyParams,
) -> Result<Vec<NormReport>> {
    let Some(first) = inputs.first() else {
        return Ok(Vec::new());
    };
    let d = first.dim();
    ExponentConfig::hardy_sobolev(params.p, d)?;
    let grads: Vec<GridFunction> = inputs.iter().flat_map(|f| gradient(f)).collect();
    let refs: Vec<&GridFunction> = grads.iter().collect();
    let parts = hardy_quasinorms(&refs, params)?;
    Ok(parts
        .chunks(d)
        .map(|c| {
            let comps: Vec<f64> = c.iter().map(|r| r.value).collect();
            params.report(comps.iter().sum(), comps)
        })
        .collect())
}

pub fn hardy_sobolev_quasinorm(f: &GridFunction, params: &HardyParams) -> Result<NormReport> {
    Ok(hardy_sobolev_quasinorms(&[f], params)?.remove(0))
}

/// `sum_j ||d_j f||_{h^p}`.
pub fn local_hardy_sobolev_quasinorm(f: &GridFunction, params: &HardyParams) -> Result<NormReport> {
    hardy_sobolev_quasinorm(f, &params.local(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridfn::make_grid;
    use approx::assert_abs_diff_eq;

    #[test]
    fn lp_examples() {
        let g = make_grid(1, 8.0, 1024, Extension::Zero).unwrap();
        let f = GridFunction::from_fn(&g, |x| (-x[0] * x[0]).exp()).unwrap();
        assert_abs_diff_eq!(
            lp_norm(&f, 2.0).unwrap(),
            (std::f64::consts::PI / 2.0).powf(0.25),
            epsilon = 1e-4
        );
        let ind = GridFunction::from_fn(&g, |x| if x[0] >= 0.0 && x[0] < 1.0 { 1.0 } else { 0.0 })
            .unwrap();
        for p in [0.5, 1.0, 3.0] {
            assert_abs_diff_eq!(lp_norm(&ind, p).unwrap(), 1.0, epsilon = g.h());
        }
        assert_eq!(lp_norm(&GridFunction::zeros(&g), 2.0).unwrap(), 0.0);
    }

    #[test]
    fn gradient_of_linear_is_exact_inside() {
        let g = make_grid(1, 2.0, 32, Extension::Periodic).unwrap();
        let f = GridFunction::from_fn(&g, |x| x[0]).unwrap();
        let d = &gradient(&f)[0];
        for i in 1..31 {
            assert_abs_diff_eq!(d.values[i], 1.0, epsilon = 1e-13);
        }
        let one = gradient_with(
            &f.clone().with_extension(Extension::Zero),
            EdgeRule::OneSided,
        );
        assert_abs_diff_eq!(one[0].values[0], 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(one[0].values[31], 1.0, epsilon = 1e-13);
    }

    #[test]
    fn gradient_converges_at_second_order() {
        let err = |n: usize| {
            let g = make_grid(1, 6.0, n, Extension::Zero).unwrap();
            let f = GridFunction::from_fn(&g, |x| (-x[0] * x[0]).exp()).unwrap();
            let d = &gradient(&f)[0];
            (0..n)
                .map(|i| {
                    let x = g.coord(i);
                    (d.values[i] + 2.0 * x * (-x * x).exp()).abs()
                })
                .fold(0.0, f64::max)
        };
        let order = (err(256) / err(512)).log2();
        assert!((order - 2.0).abs() < 0.1, "order {order}");
    }

    #[test]
    fn exponent_rules() {
        assert!(ExponentConfig::hardy_sobolev(0.4, 1)
            .unwrap_err()
            .to_string()
            .contains(RANGE_RULE));
        assert!(ExponentConfig::hardy_sobolev(0.6, 1).is_ok());
        assert!(ExponentConfig::hardy_sobolev(0.6, 2).is_err());
        let e = ExponentConfig::new(1.0, 1).unwrap().with_q(0.8).unwrap();
        assert_abs_diff_eq!(e.r.unwrap(), 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.r_conj.unwrap(), 4.0 / 3.0, epsilon = 1e-12);
        assert_eq!(
            ExponentConfig::new(1.0, 1)
                .unwrap()
                .with_default_q()
                .unwrap()
                .q,
            Some(0.75)
        );
        assert!(ExponentConfig::new(1.0, 1).unwrap().with_q(1.2).is_err());
    }

    #[test]
    fn hardy_norm_basics() {
        let g = make_grid(1, 8.0, 256, Extension::Zero).unwrap();
        let scales = ScaleSet::default_for(&g, 16.0).unwrap();
        let params = HardyParams::poisson(1.0, 1, scales);
        assert_eq!(
            hardy_quasinorm(&GridFunction::zeros(&g), &params)
                .unwrap()
                .value,
            0.0
        );
        let f = GridFunction::from_fn(&g, |x| (-x[0] * x[0]).exp() * x[0]).unwrap();
        let a = hardy_quasinorm(&f, &params).unwrap().value;
        let b = hardy_quasinorm(&f.scaled(-3.0), &params).unwrap().value;
        assert_abs_diff_eq!(b, 3.0 * a, epsilon = 1e-12 * a);
        let local = local_hardy_quasinorm(&f, &params).unwrap().value;
        assert!(local <= a);
        let full = hardy_quasinorm(&f, &params.local(params.scales.t_max()))
            .unwrap()
            .value;
        assert_eq!(full, a);
        let hs = hardy_sobolev_quasinorm(&f, &params).unwrap();
        assert_eq!(hs.value, hs.components.iter().sum::<f64>());
        assert_eq!(
            hardy_sobolev_quasinorm(
                &GridFunction::constant(&g, 2.0).with_extension(Extension::Periodic),
                &params
            )
            .unwrap()
            .value,
            0.0
        );
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridfn::Grid;

const REL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalePolicy {
    LogUniform,
    Explicit,
}

/// Sorted finite set of dilation parameters standing in for `sup_{t > 0}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleSet {
    policy: ScalePolicy,
    scales: Vec<f64>,
}

impl ScaleSet {
    /// `count` scales `t_k = t_min (t_max / t_min)^{k / (count - 1)}`.
    pub fn log_uniform(t_min: f64, t_max: f64, count: usize) -> Result<Self> {
        if !(t_min > 0.0) || !t_max.is_finite() || t_max < t_min || count == 0 {
            return Err(Error::InvalidScales(format!(
                "log-uniform({t_min}, {t_max}, {count})"
            )));
        }
        if count == 1 {
            return Ok(ScaleSet {
                policy: ScalePolicy::LogUniform,
                scales: vec![t_min],
            });
        }
        if t_max == t_min {
            return Err(Error::InvalidScales(
                "several scales need t_max > t_min".into(),
            ));
        }
        let ratio = t_max / t_min;
        let last = (count - 1) as f64;
        let mut scales: Vec<f64> = (0..count)
            .map(|k| t_min * ratio.powf(k as f64 / last))
            .collect();
        scales[0] = t_min;
        scales[count - 1] = t_max;
        Ok(ScaleSet {
            policy: ScalePolicy::LogUniform,
            scales,
        })
    }

    /// Log-uniform set with at least `per_decade` scales per factor of ten.
    pub fn per_decade(t_min: f64, t_max: f64, per_decade: f64) -> Result<Self> {
        if !(per_decade > 0.0) {
            return Err(Error::InvalidScales(format!("per_decade = {per_decade}")));
        }
        let decades = (t_max / t_min).log10();
        let count = (per_decade * decades - 1e-9).ceil().max(1.0) as usize + 1;
        ScaleSet::log_uniform(t_min, t_max, count)
    }

    pub fn explicit(scales: Vec<f64>) -> Result<Self> {
        if scales.is_empty() {
            return Err(Error::InvalidScales("empty scale list".into()));
        }
        if scales.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
            return Err(Error::InvalidScales(
                "scales must be positive and finite".into(),
            ));
        }
        if scales.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidScales(
                "scales must be strictly increasing".into(),
            ));
        }
        Ok(ScaleSet {
            policy: ScalePolicy::Explicit,
            scales,
        })
    }

    /// Default sweep for a grid: from `h/2` to `2L` at `per_decade` scales per decade.
    pub fn default_for(grid: &Grid, per_decade: f64) -> Result<Self> {
        ScaleSet::per_decade(grid.h() / 2.0, 2.0 * grid.extent(), per_decade)
    }

    /// Checks `t_min >= h/2` and `t_max <= 4L`.
    pub fn validate(&self, grid: &Grid) -> Result<()> {
        let min = grid.h() / 2.0;
        if self.t_min() < min * (1.0 - REL) {
            return Err(Error::ScaleBelowResolution {
                t: self.t_min(),
                min,
            });
        }
        let max = 4.0 * grid.extent();
        if self.t_max() > max * (1.0 + REL) {
            return Err(Error::InvalidScales(format!(
                "t_max = {} exceeds 4L = {max}",
                self.t_max()
            )));
        }
        Ok(())
    }

    /// Superset with a geometric midpoint inserted between neighbours.
    pub fn refined(&self) -> ScaleSet {
        let mut scales = Vec::with_capacity(2 * self.scales.len());
        for w in self.scales.windows(2) {
            scales.push(w[0]);
            scales.push((w[0] * w[1]).sqrt());
        }
        scales.push(self.t_max());
        ScaleSet {
            policy: self.policy,
            scales,
        }
    }

    /// Scales `t <= cap`.
    pub fn capped(&self, cap: f64) -> Result<ScaleSet> {
        if cap < self.t_min() * (1.0 - REL) {
            return Err(Error::CapBelowMinScale {
                cap,
                t_min: self.t_min(),
            });
        }
        let scales = self
            .scales
            .iter()
            .copied()
            .filter(|&t| t <= cap * (1.0 + REL))
            .collect();
        Ok(ScaleSet {
            policy: self.policy,
            scales,
        })
    }

    /// Number of leading scales with `t <= cap`.
    pub fn count_up_to(&self, cap: f64) -> usize {
        self.scales.partition_point(|&t| t <= cap * (1.0 + REL))
    }

    pub fn policy(&self) -> ScalePolicy {
        self.policy
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.scales
    }

    pub fn len(&self) -> usize {
        self.scales.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scales.is_empty()
    }

    pub fn t_min(&self) -> f64 {
        self.scales[0]
    }

    pub fn t_max(&self) -> f64 {
        self.scales[self.scales.len() - 1]
    }

    pub fn digest(&self) -> String {
        crate::digest::of_f64s(&self.scales)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridfn::Extension;

    #[test]
    fn log_uniform_endpoints_and_ratio() {
        let s = ScaleSet::log_uniform(0.1, 10.0, 5).unwrap();
        assert_eq!(s.t_min(), 0.1);
        assert_eq!(s.t_max(), 10.0);
        for w in s.as_slice().windows(2) {
            assert!((w[1] / w[0] - 10f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn default_density() {
        let g = Grid::centered(1, 8.0, 512, Extension::Zero).unwrap();
        let s = ScaleSet::default_for(&g, 32.0).unwrap();
        // h/2 = 1/64 to 16: three decades plus a bit.
        let decades = (16.0f64 * 64.0).log10();
        assert!(s.len() as f64 >= 32.0 * decades);
        s.validate(&g).unwrap();
    }

    #[test]
    fn refinement_is_superset() {
        let s = ScaleSet::log_uniform(0.5, 8.0, 9).unwrap();
        let r = s.refined();
        assert_eq!(r.len(), 17);
        for t in s.as_slice() {
            assert!(r.as_slice().contains(t));
        }
    }

    #[test]
    fn validation_and_caps() {
        let g = Grid::centered(1, 1.0, 8, Extension::Zero).unwrap();
        assert!(matches!(
            ScaleSet::explicit(vec![0.1, 1.0]).unwrap().validate(&g),
            Err(Error::ScaleBelowResolution { .. })
        ));
        assert!(ScaleSet::explicit(vec![1.0, 1.0]).is_err());
        let s = ScaleSet::explicit(vec![0.25, 0.5, 1.0, 2.0]).unwrap();
        assert_eq!(s.capped(1.0).unwrap().as_slice(), &[0.25, 0.5, 1.0]);
        assert!(matches!(s.capped(0.1), Err(Error::CapBelowMinScale { .. })));
        assert_eq!(s.count_up_to(0.6), 2);
    }
}

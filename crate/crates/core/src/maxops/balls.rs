use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::filter::{disk_max, footprint, footprint_count};
use crate::error::{Error, Result};
use crate::gridfn::{Extension, Grid, GridFunction};

/// Balls centred at every grid point with radii from a sorted list.
///
/// Radii with identical lattice footprints are merged, so every radius in the
/// family selects a different set of samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallFamily {
    radii: Vec<f64>,
    r_max: f64,
}

impl BallFamily {
    /// Radii log-uniform in `[h, r_max]` with `per_decade` radii per decade.
    pub fn log_uniform(grid: &Grid, r_max: f64, per_decade: f64) -> Result<Self> {
        let h = grid.h();
        if !(r_max >= h) || !(per_decade > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "ball family needs r_max >= h = {h}, got {r_max}"
            )));
        }
        let count = ((per_decade * (r_max / h).log10()).ceil() as usize).max(1) + 1;
        let radii = (0..count)
            .map(|k| h * (r_max / h).powf(k as f64 / (count - 1) as f64))
            .collect();
        BallFamily::explicit(grid, radii)
    }

    /// Default family: radii from `h` to `r_max` at 24 per decade.
    pub fn default_for(grid: &Grid, r_max: f64) -> Result<Self> {
        BallFamily::log_uniform(grid, r_max, 24.0)
    }

    pub fn explicit(grid: &Grid, mut radii: Vec<f64>) -> Result<Self> {
        let h = grid.h();
        if radii.is_empty() {
            return Err(Error::EmptyBall(0));
        }
        if radii
            .iter()
            .any(|r| !(*r >= h * (1.0 - 1e-12)) || !r.is_finite())
        {
            return Err(Error::InvalidParameter(format!(
                "ball radii must be finite and at least h = {h}"
            )));
        }
        radii.sort_by(f64::total_cmp);
        let mut kept: Vec<f64> = Vec::new();
        let mut last = 0;
        for r in radii {
            let c = footprint_count(&footprint(grid.dim(), r / h), grid.dim());
            if c > last {
                kept.push(r);
                last = c;
            }
        }
        let r_max = *kept.last().unwrap();
        Ok(BallFamily { radii: kept, r_max })
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn digest(&self) -> String {
        crate::digest::of_f64s(&self.radii)
    }
}

/// Samples of `f` on the discrete ball of radius `r` around grid point `center`,
/// in ascending offset order. Out-of-box points read as zero or wrap, per the extension.
pub fn ball_samples(f: &GridFunction, center: usize, r: f64) -> Vec<f64> {
    let grid = &f.grid;
    let rows = footprint(grid.dim(), r / grid.h());
    let mut out = Vec::with_capacity(footprint_count(&rows, grid.dim()));
    let [ca, cb] = grid.unflatten(center);
    let (ca, cb) = (ca as i64, cb as i64);
    if grid.dim() == 1 {
        let w = rows[0].1 as i64;
        for da in -w..=w {
            out.push(f.value_at([ca + da, 0]));
        }
        return out;
    }
    let w = rows.len() as i64 - 1;
    for da in -w..=w {
        let wb = rows[da.unsigned_abs() as usize].1 as i64;
        for db in -wb..=wb {
            out.push(f.value_at([ca + da, cb + db]));
        }
    }
    out
}

/// Grid points of the ball of radius `r` around `center` that lie in the box.
pub fn ball_mask(grid: &Grid, center: usize, r: f64) -> Vec<bool> {
    let mut indicator = vec![0.0; grid.len()];
    indicator[center] = 1.0;
    disk_max(&indicator, &grid.with_extension(Extension::Zero), r)
        .into_iter()
        .map(|v| v > 0.0)
        .collect()
}

/// `M_p f(x) = max_r (mean_{B(x,r)} |f|^p)^{1/p}` over the family's radii.
pub fn hl_maximal(f: &GridFunction, balls: &BallFamily, p: f64) -> Result<GridFunction> {
    if !(p > 0.0) {
        return Err(Error::ExponentOutOfRange(format!(
            "p = {p} must be positive"
        )));
    }
    if balls.is_empty() {
        return Err(Error::EmptyBall(0));
    }
    let powered = f.map(|v| v.abs().powf(p));
    let values = (0..f.len())
        .into_par_iter()
        .map(|i| {
            balls
                .radii()
                .iter()
                .map(|&r| {
                    let s = ball_samples(&powered, i, r);
                    (s.iter().sum::<f64>() / s.len() as f64).powf(1.0 / p)
                })
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(GridFunction::from_parts(
        f.grid.with_extension(f.extension),
        values,
    ))
}

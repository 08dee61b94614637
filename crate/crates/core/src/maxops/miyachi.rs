use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::balls::{ball_samples, BallFamily};
use super::filter::disk_max;
use crate::error::{Error, Result};
use crate::gridfn::{Extension, GridFunction};

/// Power of `|B|` multiplying the oscillation in `N_p`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BallWeight {
    /// `|B|^{1/d}`, the form written in the definition.
    #[default]
    Volume,
    /// `|B|^{-1/d}`, which makes `N_p f` scale like `|grad f|` (Calderon's normalization).
    InverseVolume,
}

impl BallWeight {
    fn exponent(self, dim: usize) -> f64 {
        match self {
            BallWeight::Volume => 1.0 / dim as f64,
            BallWeight::InverseVolume => -1.0 / dim as f64,
        }
    }
}

const GOLDEN_TOL: f64 = 1e-8;

fn mean_power_deviation(samples: &[f64], c: f64, p: f64) -> f64 {
    samples.iter().map(|v| (v - c).abs().powf(p)).sum::<f64>() / samples.len() as f64
}

/// `inf_c mean_B |f - c|^p` over the given samples.
///
/// `p = 1` uses the median; `p > 1` golden-section search on `[min, max]`
/// (convex objective); `p < 1` the best sample value, which is exact because the
/// objective is concave between consecutive sample values.
pub fn best_constant_oscillation(samples: &[f64], p: f64) -> f64 {
    let min = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let max = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if min == max {
        return 0.0;
    }
    if p == 1.0 {
        let mut sorted = samples.to_vec();
        let mid = sorted.len() / 2;
        let (_, med, _) = sorted.select_nth_unstable_by(mid, f64::total_cmp);
        return mean_power_deviation(samples, *med, 1.0);
    }
    if p < 1.0 {
        let mut cands = samples.to_vec();
        cands.sort_by(f64::total_cmp);
        cands.dedup();
        return cands
            .iter()
            .map(|&c| mean_power_deviation(samples, c, p))
            .fold(f64::INFINITY, f64::min);
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (min, max);
    let tol = GOLDEN_TOL * (max - min);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = mean_power_deviation(samples, x1, p);
    let mut f2 = mean_power_deviation(samples, x2, p);
    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = mean_power_deviation(samples, x1, p);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = mean_power_deviation(samples, x2, p);
        }
    }
    f1.min(f2)
}

/// `|B|^{±1/d} (inf_c mean_B |f - c|^p)^{1/p}` for every centre, one vector per radius.
pub fn ball_oscillations(
    f: &GridFunction,
    p: f64,
    balls: &BallFamily,
    weight: BallWeight,
) -> Vec<Vec<f64>> {
    let d = f.dim();
    let cell = f.grid.cell();
    balls
        .radii()
        .iter()
        .map(|&r| {
            (0..f.len())
                .into_par_iter()
                .map(|i| {
                    let s = ball_samples(f, i, r);
                    let vol = s.len() as f64 * cell;
                    vol.powf(weight.exponent(d)) * best_constant_oscillation(&s, p).powf(1.0 / p)
                })
                .collect()
        })
        .collect()
}

/// `N_p f(x) = sup_{B containing x} |B|^{±1/d} inf_c (mean_B |f - c|^p)^{1/p}`
/// over balls of the family centred at grid points.
pub fn miyachi_np(
    f: &GridFunction,
    p: f64,
    balls: &BallFamily,
    weight: BallWeight,
) -> Result<GridFunction> {
    if !(p > 0.0) {
        return Err(Error::ExponentOutOfRange(format!(
            "p = {p} must be positive"
        )));
    }
    if balls.is_empty() {
        return Err(Error::EmptyBall(0));
    }
    let osc = ball_oscillations(f, p, balls, weight);
    // A centre c's ball contains x exactly when x's ball of the same radius contains c,
    // so the scatter over centres is a gather over the disk around x.
    let grid = f.grid.with_extension(f.extension);
    let mut out = vec![0.0_f64; f.len()];
    for (values, &r) in osc.iter().zip(balls.radii()) {
        let spread = disk_max(values, &grid, r);
        for (o, v) in out.iter_mut().zip(spread) {
            *o = o.max(v);
        }
    }
    Ok(GridFunction::from_parts(grid, out))
}

/// Whether the ball family around `center` stays inside the box for all radii.
pub fn family_fits(grid: &crate::gridfn::Grid, center: usize, r: f64) -> bool {
    if grid.extension() == Extension::Periodic {
        return true;
    }
    let w = (r / grid.h() * (1.0 + 1e-12)).floor() as i64;
    let n = grid.n() as i64;
    let idx = grid.unflatten(center);
    (0..grid.dim()).all(|a| idx[a] as i64 - w >= 0 && idx[a] as i64 + w < n)
}

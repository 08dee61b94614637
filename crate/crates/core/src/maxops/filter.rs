//! Discrete disks and max filters over them.

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::gridfn::{Extension, Grid};

/// Relative slack that puts lattice points at distance exactly `r` inside the ball.
const TIE: f64 = 1e-12;

/// Rows `(offset, half_width)` of the lattice disk `{a^2 + b^2 <= (r/h)^2}`,
/// for `offset = 0, 1, ...` (the disk is symmetric in the offset sign).
/// In d = 1 there is a single row.
pub fn footprint(dim: usize, r_over_h: f64) -> Vec<(usize, usize)> {
    let r2 = r_over_h * r_over_h * (1.0 + TIE);
    let w = largest_fit(r2, 0);
    if dim == 1 {
        return vec![(0, w)];
    }
    (0..=w).map(|a| (a, largest_fit(r2, a))).collect()
}

/// Largest `b >= 0` with `a^2 + b^2 <= r2` (assumes `a^2 <= r2`).
fn largest_fit(r2: f64, a: usize) -> usize {
    let rest = r2 - (a * a) as f64;
    let mut b = rest.max(0.0).sqrt().floor() as usize;
    while ((a * a + (b + 1) * (b + 1)) as f64) <= r2 {
        b += 1;
    }
    while b > 0 && ((a * a + b * b) as f64) > r2 {
        b -= 1;
    }
    b
}

/// Number of lattice points of a footprint.
pub fn footprint_count(rows: &[(usize, usize)], dim: usize) -> usize {
    if dim == 1 {
        return 2 * rows[0].1 + 1;
    }
    rows.iter()
        .map(|&(a, w)| if a == 0 { 2 * w + 1 } else { 2 * (2 * w + 1) })
        .sum()
}

/// Sliding-window maximum with half-width `w` along a line of length `n`.
/// Zero extension ignores out-of-range positions; periodic wraps.
fn line_max(src: &[f64], w: usize, ext: Extension, out: &mut [f64]) {
    let n = src.len();
    if ext == Extension::Periodic && 2 * w + 1 >= n {
        let m = src.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        out.fill(m);
        return;
    }
    let w = w.min(n);
    let (lo, hi): (i64, i64) = match ext {
        Extension::Zero => (0, n as i64 - 1),
        Extension::Periodic => (-(w as i64), (n + w) as i64 - 1),
    };
    let at = |j: i64| src[j.rem_euclid(n as i64) as usize];
    let mut dq: VecDeque<i64> = VecDeque::new();
    let mut next = lo;
    for i in 0..n as i64 {
        let right = (i + w as i64).min(hi);
        while next <= right {
            let v = at(next);
            while dq.back().is_some_and(|&b| at(b) <= v) {
                dq.pop_back();
            }
            dq.push_back(next);
            next += 1;
        }
        let left = (i - w as i64).max(lo);
        while dq.front().is_some_and(|&f| f < left) {
            dq.pop_front();
        }
        out[i as usize] = at(*dq.front().expect("window is never empty"));
    }
}

/// `out(x) = max { v(y) : y a grid point, |x - y| <= radius }`, with `y`
/// wrapped under periodic extension and restricted to the box otherwise.
pub fn disk_max(values: &[f64], grid: &Grid, radius: f64) -> Vec<f64> {
    let n = grid.n();
    let ext = grid.extension();
    let rows = footprint(grid.dim(), radius / grid.h());
    let mut out = vec![0.0; values.len()];
    if grid.dim() == 1 {
        line_max(values, rows[0].1, ext, &mut out);
        return out;
    }
    let r = radius / grid.h();
    if ext == Extension::Zero && r * r >= 2.0 * ((n - 1) * (n - 1)) as f64 {
        let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        out.fill(m);
        return out;
    }
    out.fill(f64::NEG_INFINITY);
    let mut h = vec![0.0; values.len()];
    for &(a, w) in &rows {
        // Offsets past n repeat (periodic) or leave the box (zero) with narrower rows.
        if a >= n {
            break;
        }
        h.par_chunks_mut(n)
            .zip(values.par_chunks(n))
            .for_each(|(dst, src)| line_max(src, w, ext, dst));
        out.par_chunks_mut(n).enumerate().for_each(|(i, dst)| {
            for s in [i as i64 - a as i64, i as i64 + a as i64] {
                let row = match ext {
                    Extension::Zero if s < 0 || s >= n as i64 => continue,
                    Extension::Zero => s as usize,
                    Extension::Periodic => s.rem_euclid(n as i64) as usize,
                };
                for (o, v) in dst.iter_mut().zip(&h[row * n..(row + 1) * n]) {
                    if *v > *o {
                        *o = *v;
                    }
                }
            }
        });
    }
    out
}

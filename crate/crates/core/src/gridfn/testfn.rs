use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::function::GridFunction;
use super::grid::Grid;
use crate::error::{Error, Result};

fn one() -> f64 {
    1.0
}
fn default_count() -> usize {
    5
}
fn default_span() -> f64 {
    3.0
}
fn default_range() -> [f64; 2] {
    [0.5, 1.5]
}
fn default_pieces() -> usize {
    6
}
fn default_piece_span() -> f64 {
    2.0
}

/// Families of synthetic inputs used by the harness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TestFamily {
    /// `a * exp(1 - 1/(1 - s^2))`, `s = |x - c| / w`; peak `a` at the center.
    Bump {
        center: Vec<f64>,
        #[serde(default = "one")]
        width: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `a * exp(-|x - c|^2 / w^2)`.
    Gaussian {
        center: Vec<f64>,
        #[serde(default = "one")]
        width: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// Sum of `count` seeded bumps with centers in `[-span, span]^d`.
    BumpSuperposition {
        #[serde(default = "default_count")]
        count: usize,
        #[serde(default = "default_span")]
        span: f64,
        #[serde(default = "default_range")]
        widths: [f64; 2],
        #[serde(default = "default_range")]
        amplitudes: [f64; 2],
        #[serde(default)]
        signed: bool,
    },
    /// Bump with its moments of order 0 and 1 projected out.
    VanishingMoment {
        center: Vec<f64>,
        #[serde(default = "one")]
        width: f64,
    },
    /// Indicator of the box `[lower, upper]` with transitions of length `smoothing`.
    IndicatorSmoothed {
        lower: Vec<f64>,
        upper: Vec<f64>,
        smoothing: f64,
    },
    /// Tensor-product step function. Explicit `breaks`/`values` when given,
    /// otherwise `pieces` seeded cells per axis inside `[-span, span]`.
    PiecewiseConstant {
        #[serde(default)]
        breaks: Vec<f64>,
        #[serde(default)]
        values: Vec<f64>,
        #[serde(default = "default_pieces")]
        pieces: usize,
        #[serde(default = "default_piece_span")]
        span: f64,
    },
}

/// A test function: a family, an optional dilation `x -> f(dilation * x)`, and a seed.
#[derive(Clone, Debug, PartialEq)]
pub struct TestFunctionSpec {
    pub family: TestFamily,
    pub dilation: f64,
    pub seed: u64,
}

impl TestFunctionSpec {
    pub fn new(family: TestFamily) -> Self {
        TestFunctionSpec {
            family,
            dilation: 1.0,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn dilated(mut self, lambda: f64) -> Self {
        self.dilation *= lambda;
        self
    }

    pub fn bump(center: &[f64], width: f64) -> Self {
        TestFunctionSpec::new(TestFamily::Bump {
            center: center.to_vec(),
            width,
            amplitude: 1.0,
        })
    }

    pub fn superposition(count: usize, span: f64, seed: u64) -> Self {
        TestFunctionSpec::new(TestFamily::BumpSuperposition {
            count,
            span,
            widths: default_range(),
            amplitudes: default_range(),
            signed: false,
        })
        .with_seed(seed)
    }

    pub fn vanishing_moment(center: &[f64], width: f64) -> Self {
        TestFunctionSpec::new(TestFamily::VanishingMoment {
            center: center.to_vec(),
            width,
        })
    }

    pub fn name(&self) -> &'static str {
        match self.family {
            TestFamily::Bump { .. } => "bump",
            TestFamily::Gaussian { .. } => "gaussian",
            TestFamily::BumpSuperposition { .. } => "bump-superposition",
            TestFamily::VanishingMoment { .. } => "vanishing-moment",
            TestFamily::IndicatorSmoothed { .. } => "indicator-smoothed",
            TestFamily::PiecewiseConstant { .. } => "piecewise-constant",
        }
    }
}

impl Serialize for TestFunctionSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut v = serde_json::to_value(&self.family).map_err(serde::ser::Error::custom)?;
        let map = v.as_object_mut().expect("tagged enum serializes to a map");
        map.insert("dilation".into(), self.dilation.into());
        map.insert("seed".into(), self.seed.into());
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for TestFunctionSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let mut v = serde_json::Value::deserialize(d)?;
        let map = v
            .as_object_mut()
            .ok_or_else(|| D::Error::custom("test function must be a table"))?;
        let dilation = match map.remove("dilation") {
            Some(x) => x
                .as_f64()
                .ok_or_else(|| D::Error::custom("dilation must be a number"))?,
            None => 1.0,
        };
        let seed = match map.remove("seed") {
            Some(x) => x
                .as_u64()
                .ok_or_else(|| D::Error::custom("seed must be a non-negative integer"))?,
            None => 0,
        };
        if !(dilation > 0.0) {
            return Err(D::Error::custom("dilation must be positive"));
        }
        let family = TestFamily::deserialize(v).map_err(D::Error::custom)?;
        Ok(TestFunctionSpec {
            family,
            dilation,
            seed,
        })
    }
}

fn bump_value(x: &[f64], center: &[f64], width: f64, amplitude: f64) -> f64 {
    let s2: f64 = x
        .iter()
        .zip(center)
        .map(|(a, c)| (a - c) * (a - c))
        .sum::<f64>()
        / (width * width);
    if s2 >= 1.0 {
        0.0
    } else {
        amplitude * (1.0 - 1.0 / (1.0 - s2)).exp()
    }
}

/// C-infinity step: 0 for `s <= 0`, 1 for `s >= 1`.
fn smooth_step(s: f64) -> f64 {
    let e = |u: f64| if u <= 0.0 { 0.0 } else { (-1.0 / u).exp() };
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        e(s) / (e(s) + e(1.0 - s))
    }
}

struct Component {
    center: Vec<f64>,
    width: f64,
    amplitude: f64,
}

fn superposition_components(
    dim: usize,
    seed: u64,
    count: usize,
    span: f64,
    widths: [f64; 2],
    amplitudes: [f64; 2],
    signed: bool,
) -> Vec<Component> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let center = (0..dim).map(|_| rng.random_range(-span..=span)).collect();
            let width = rng.random_range(widths[0]..=widths[1]);
            let mut amplitude = rng.random_range(amplitudes[0]..=amplitudes[1]);
            if signed && rng.random_bool(0.5) {
                amplitude = -amplitude;
            }
            Component {
                center,
                width,
                amplitude,
            }
        })
        .collect()
}

struct Steps {
    breaks: Vec<Vec<f64>>,
    values: Vec<f64>,
}

fn piecewise_steps(
    dim: usize,
    seed: u64,
    breaks: &[f64],
    values: &[f64],
    pieces: usize,
    span: f64,
) -> Result<Steps> {
    if !breaks.is_empty() {
        let cells = breaks.len().saturating_sub(1);
        if cells == 0 || breaks.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "breaks must contain at least two increasing values".into(),
            ));
        }
        if values.len() != cells.pow(dim as u32) {
            return Err(Error::InvalidParameter(format!(
                "piecewise-constant needs {} values, got {}",
                cells.pow(dim as u32),
                values.len()
            )));
        }
        return Ok(Steps {
            breaks: vec![breaks.to_vec(); dim],
            values: values.to_vec(),
        });
    }
    if pieces == 0 {
        return Err(Error::InvalidParameter("pieces must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let axes = (0..dim)
        .map(|_| {
            let mut b: Vec<f64> = (0..=pieces)
                .map(|_| rng.random_range(-span..=span))
                .collect();
            b.sort_by(f64::total_cmp);
            b
        })
        .collect();
    let values = (0..pieces.pow(dim as u32))
        .map(|_| rng.random_range(-1.0..=1.0))
        .collect();
    Ok(Steps {
        breaks: axes,
        values,
    })
}

/// Cells touched by coordinate `x` with their weights; exact break hits split evenly.
fn axis_cells(breaks: &[f64], x: f64) -> Vec<(usize, f64)> {
    let last = breaks.len() - 1;
    let tol = |b: f64| 1e-12 * b.abs().max(1.0);
    if x < breaks[0] - tol(breaks[0]) || x > breaks[last] + tol(breaks[last]) {
        return vec![];
    }
    for (k, &b) in breaks.iter().enumerate() {
        if (x - b).abs() <= tol(b) {
            let mut out = Vec::with_capacity(2);
            if k > 0 {
                out.push((k - 1, 0.5));
            }
            if k < last {
                out.push((k, 0.5));
            }
            return out;
        }
    }
    let k = breaks.partition_point(|&b| b < x);
    vec![(k - 1, 1.0)]
}

fn steps_value(steps: &Steps, x: &[f64]) -> f64 {
    let cells = steps.breaks[0].len() - 1;
    match x.len() {
        1 => axis_cells(&steps.breaks[0], x[0])
            .iter()
            .map(|&(i, w)| w * steps.values[i])
            .sum(),
        _ => {
            let a = axis_cells(&steps.breaks[0], x[0]);
            let b = axis_cells(&steps.breaks[1], x[1]);
            let mut s = 0.0;
            for &(i, wi) in &a {
                for &(j, wj) in &b {
                    s += wi * wj * steps.values[i * cells + j];
                }
            }
            s
        }
    }
}

fn check_center(grid: &Grid, center: &[f64], what: &str) -> Result<()> {
    if center.len() != grid.dim() {
        return Err(Error::InvalidParameter(format!(
            "{what} has {} coordinates on a {}-dimensional grid",
            center.len(),
            grid.dim()
        )));
    }
    Ok(())
}

/// Axis-aligned bounding box `[lo, hi]` (in grid coordinates) that must lie in the grid box.
fn require_inside(grid: &Grid, lo: &[f64], hi: &[f64], what: &str) -> Result<()> {
    if grid.contains(lo) && grid.contains(hi) {
        Ok(())
    } else {
        Err(Error::SpecOutOfBox(format!("{what} spans {lo:?}..{hi:?}")))
    }
}

fn ball_bounds(center: &[f64], radius: f64, lambda: f64) -> (Vec<f64>, Vec<f64>) {
    (
        center.iter().map(|c| (c - radius) / lambda).collect(),
        center.iter().map(|c| (c + radius) / lambda).collect(),
    )
}

/// Samples a test function on the grid.
pub fn make_test_function(spec: &TestFunctionSpec, grid: &Grid) -> Result<GridFunction> {
    let d = grid.dim();
    let lambda = spec.dilation;
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter("dilation must be positive".into()));
    }
    match &spec.family {
        TestFamily::Bump {
            center,
            width,
            amplitude,
        } => {
            check_center(grid, center, "bump center")?;
            let (lo, hi) = ball_bounds(center, *width, lambda);
            require_inside(grid, &lo, &hi, "bump support")?;
            GridFunction::from_fn(grid, |x| {
                let y: Vec<f64> = x.iter().map(|v| v * lambda).collect();
                bump_value(&y, center, *width, *amplitude)
            })
        }
        TestFamily::Gaussian {
            center,
            width,
            amplitude,
        } => {
            check_center(grid, center, "gaussian center")?;
            let c: Vec<f64> = center.iter().map(|v| v / lambda).collect();
            require_inside(grid, &c, &c, "gaussian center")?;
            GridFunction::from_fn(grid, |x| {
                let r2: f64 = x
                    .iter()
                    .zip(center)
                    .map(|(a, c)| (a * lambda - c).powi(2))
                    .sum();
                amplitude * (-r2 / (width * width)).exp()
            })
        }
        TestFamily::BumpSuperposition {
            count,
            span,
            widths,
            amplitudes,
            signed,
        } => {
            let comps = superposition_components(
                d,
                spec.seed,
                *count,
                *span,
                *widths,
                *amplitudes,
                *signed,
            );
            let reach = span + widths[1];
            let lo = vec![-reach / lambda; d];
            let hi = vec![reach / lambda; d];
            require_inside(grid, &lo, &hi, "bump superposition")?;
            GridFunction::from_fn(grid, |x| {
                let y: Vec<f64> = x.iter().map(|v| v * lambda).collect();
                comps
                    .iter()
                    .map(|c| bump_value(&y, &c.center, c.width, c.amplitude))
                    .sum()
            })
        }
        TestFamily::VanishingMoment { center, width } => {
            check_center(grid, center, "vanishing-moment center")?;
            let (lo, hi) = ball_bounds(center, *width, lambda);
            require_inside(grid, &lo, &hi, "vanishing-moment support")?;
            let base = GridFunction::from_fn(grid, |x| {
                let y: Vec<f64> = x.iter().map(|v| v * lambda).collect();
                bump_value(&y, center, *width, 1.0)
            })?;
            let weight = base.map(|v| v * v);
            let c: Vec<f64> = center.iter().map(|v| v / lambda).collect();
            project_vanishing_moments(&base, &weight, &c)
        }
        TestFamily::IndicatorSmoothed {
            lower,
            upper,
            smoothing,
        } => {
            check_center(grid, lower, "lower corner")?;
            check_center(grid, upper, "upper corner")?;
            if !(*smoothing > 0.0) || lower.iter().zip(upper).any(|(a, b)| b <= a) {
                return Err(Error::InvalidParameter(
                    "need lower < upper and smoothing > 0".into(),
                ));
            }
            let lo: Vec<f64> = lower.iter().map(|v| (v - smoothing) / lambda).collect();
            let hi: Vec<f64> = upper.iter().map(|v| (v + smoothing) / lambda).collect();
            require_inside(grid, &lo, &hi, "smoothed indicator")?;
            let e = *smoothing;
            GridFunction::from_fn(grid, |x| {
                x.iter()
                    .enumerate()
                    .map(|(j, v)| {
                        let y = v * lambda;
                        smooth_step((y - lower[j]) / e + 0.5)
                            * smooth_step((upper[j] - y) / e + 0.5)
                    })
                    .product()
            })
        }
        TestFamily::PiecewiseConstant {
            breaks,
            values,
            pieces,
            span,
        } => {
            let steps = piecewise_steps(d, spec.seed, breaks, values, *pieces, *span)?;
            let lo: Vec<f64> = steps.breaks.iter().map(|b| b[0] / lambda).collect();
            let hi: Vec<f64> = steps
                .breaks
                .iter()
                .map(|b| b[b.len() - 1] / lambda)
                .collect();
            require_inside(grid, &lo, &hi, "piecewise-constant breaks")?;
            GridFunction::from_fn(grid, |x| {
                let y: Vec<f64> = x.iter().map(|v| v * lambda).collect();
                steps_value(&steps, &y)
            })
        }
    }
}

/// Discrete moments `h^d * sum f * {1, x_1 - c_1, ..., x_d - c_d}`.
pub fn moments(f: &GridFunction, center: &[f64]) -> Vec<f64> {
    let grid = &f.grid;
    let d = grid.dim();
    let mut m = vec![0.0; d + 1];
    for (i, &v) in f.values.iter().enumerate() {
        let p = grid.point(i);
        m[0] += v;
        for j in 0..d {
            m[j + 1] += v * (p[j] - center[j]);
        }
    }
    m.iter().map(|s| s * grid.cell()).collect()
}

/// Removes the moments of order 0 and 1 by subtracting `(a_0 + sum a_j (x_j - c_j)) * weight`.
///
/// With `weight` an indicator this is the grid-orthogonal projection onto
/// linear polynomials on the support; a smooth weight keeps the result smooth.
pub fn project_vanishing_moments(
    f: &GridFunction,
    weight: &GridFunction,
    center: &[f64],
) -> Result<GridFunction> {
    let grid = &f.grid;
    let d = grid.dim();
    if center.len() != d || !grid.same_box(&weight.grid) {
        return Err(Error::GridMismatch(
            "weight must share the grid of the projected function".into(),
        ));
    }
    let basis: Vec<GridFunction> = (0..=d)
        .map(|k| {
            let mut b = weight.clone();
            if k > 0 {
                for (i, v) in b.values.iter_mut().enumerate() {
                    *v *= grid.point(i)[k - 1] - center[k - 1];
                }
            }
            b
        })
        .collect();
    let gram = DMatrix::from_fn(d + 1, d + 1, |i, k| moments(&basis[k], center)[i]);
    let rhs = DVector::from_vec(moments(f, center));
    let coef = gram
        .lu()
        .solve(&rhs)
        .ok_or(Error::MomentCancellationFailed(f64::INFINITY))?;
    let mut values = f.values.clone();
    for (k, b) in basis.iter().enumerate() {
        for (v, w) in values.iter_mut().zip(&b.values) {
            *v -= coef[k] * w;
        }
    }
    let out = GridFunction::new(grid.clone(), values)?;
    let scale = out.values.iter().map(|v| v.abs()).sum::<f64>() * grid.cell();
    let resid = moments(&out, center)
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    let rel = if scale > 0.0 { resid / scale } else { resid };
    if !(rel <= 1e-8) {
        return Err(Error::MomentCancellationFailed(rel));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridfn::Extension;

    fn grid1() -> Grid {
        Grid::centered(1, 4.0, 256, Extension::Zero).unwrap()
    }

    #[test]
    fn bump_support_and_peak() {
        let g = grid1();
        let f = make_test_function(&TestFunctionSpec::bump(&[0.0], 1.0), &g).unwrap();
        let imax = f
            .values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(g.coord(imax), 0.0);
        assert_eq!(f.values[imax], 1.0);
        for (i, v) in f.values.iter().enumerate() {
            if g.coord(i).abs() >= 1.0 {
                assert_eq!(*v, 0.0);
            }
        }
    }

    #[test]
    fn vanishing_moments_in_both_dimensions() {
        for g in [
            grid1(),
            Grid::centered(2, 4.0, 64, Extension::Zero).unwrap(),
        ] {
            let c = vec![0.3; g.dim()];
            let f = make_test_function(&TestFunctionSpec::vanishing_moment(&c, 1.2), &g).unwrap();
            let l1 = f.values.iter().map(|v| v.abs()).sum::<f64>() * g.cell();
            assert!(l1 > 0.1);
            for m in moments(&f, &vec![0.0; g.dim()]) {
                assert!(m.abs() <= 1e-8 * l1, "moment {m} vs l1 {l1}");
            }
        }
    }

    #[test]
    fn projection_is_idempotent() {
        let g = grid1();
        let spec = TestFunctionSpec::superposition(3, 1.0, 11);
        let f = make_test_function(&spec, &g).unwrap();
        let w = f.map(|v| v * v);
        let once = project_vanishing_moments(&f, &w, &[0.0]).unwrap();
        let twice = project_vanishing_moments(&once, &w, &[0.0]).unwrap();
        for (a, b) in once.values.iter().zip(&twice.values) {
            assert!((a - b).abs() <= 1e-14, "{a} vs {b}");
        }
    }

    #[test]
    fn seeded_superposition_is_deterministic() {
        let g = grid1();
        let spec = TestFunctionSpec::superposition(5, 2.0, 7);
        let a = make_test_function(&spec, &g).unwrap();
        let b = make_test_function(&spec, &g).unwrap();
        assert_eq!(
            a.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        let c = make_test_function(&spec.clone().with_seed(8), &g).unwrap();
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn out_of_box_is_rejected() {
        let g = grid1();
        assert!(matches!(
            make_test_function(&TestFunctionSpec::bump(&[3.5], 1.0), &g),
            Err(Error::SpecOutOfBox(_))
        ));
        // Dilation by 1/8 stretches the support to [-8, 8].
        assert!(matches!(
            make_test_function(&TestFunctionSpec::bump(&[0.0], 1.0).dilated(0.125), &g),
            Err(Error::SpecOutOfBox(_))
        ));
    }

    #[test]
    fn indicator_with_half_weights_at_breaks() {
        let g = Grid::centered(1, 2.0, 16, Extension::Zero).unwrap();
        let spec = TestFunctionSpec::new(TestFamily::PiecewiseConstant {
            breaks: vec![0.0, 1.0],
            values: vec![1.0],
            pieces: 1,
            span: 1.0,
        });
        let f = make_test_function(&spec, &g).unwrap();
        assert_eq!(f.values[8], 0.5);
        assert_eq!(f.values[10], 1.0);
        assert_eq!(f.values[12], 0.5);
        assert!((f.integral() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn spec_round_trips_through_flat_json() {
        let spec = TestFunctionSpec::superposition(4, 2.0, 9).dilated(2.0);
        let json = serde_json::to_string(&spec).unwrap();
        assert!(json.contains("\"family\":\"bump-superposition\""));
        let back: TestFunctionSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
        assert!(serde_json::from_str::<TestFunctionSpec>(
            r#"{"family":"bump","center":[0],"colour":1}"#
        )
        .is_err());
    }
}

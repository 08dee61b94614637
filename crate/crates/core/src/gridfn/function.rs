use serde::{Deserialize, Serialize};

use super::grid::{Extension, Grid};
use crate::error::{Error, Result};

/// Real samples of a function on a [`Grid`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub extension: Extension,
}

impl GridFunction {
    /// Checked constructor: length must match the grid and samples must be finite.
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidSize(format!(
                "{} values for a grid of {} samples",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite sample at index {i}"
            )));
        }
        let extension = grid.extension();
        Ok(GridFunction {
            grid,
            values,
            extension,
        })
    }

    pub(crate) fn from_parts(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        debug_assert!(values.iter().all(|v| v.is_finite()));
        let extension = grid.extension();
        GridFunction {
            grid,
            values,
            extension,
        }
    }

    pub fn zeros(grid: &Grid) -> Self {
        GridFunction::from_parts(grid.clone(), vec![0.0; grid.len()])
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        GridFunction::from_parts(grid.clone(), vec![c; grid.len()])
    }

    /// Samples `f(x)` at every grid point.
    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let d = grid.dim();
        let values = (0..grid.len())
            .map(|i| {
                let p = grid.point(i);
                f(&p[..d])
            })
            .collect();
        GridFunction::new(grid.clone(), values)
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
            extension: self.extension,
        }
    }

    pub fn abs(&self) -> GridFunction {
        self.map(f64::abs)
    }

    pub fn scaled(&self, alpha: f64) -> GridFunction {
        self.map(|v| alpha * v)
    }

    /// Pointwise sum; both functions must live on the same box.
    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        if !self.grid.same_box(&other.grid) {
            return Err(Error::GridMismatch(
                "addition of functions on different grids".into(),
            ));
        }
        Ok(GridFunction {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
            extension: self.extension,
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Discrete integral `h^dim * sum(values)` in ascending index order.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell()
    }

    pub fn with_extension(mut self, extension: Extension) -> GridFunction {
        self.grid = self.grid.with_extension(extension);
        self.extension = extension;
        self
    }

    /// Value at a (possibly out-of-box) lattice position, honoring the extension rule.
    pub fn value_at(&self, idx: [i64; 2]) -> f64 {
        let n = self.grid.n() as i64;
        let d = self.dim();
        let mut pos = [0usize; 2];
        for a in 0..d {
            let mut i = idx[a];
            if i < 0 || i >= n {
                match self.extension {
                    Extension::Zero => return 0.0,
                    Extension::Periodic => i = i.rem_euclid(n),
                }
            }
            pos[a] = i as usize;
        }
        self.values[self.grid.flatten(pos)]
    }

    /// Values along axis 0 through the middle of axis 1 (the whole function in d = 1).
    pub fn center_slice(&self) -> Vec<(f64, f64)> {
        let n = self.grid.n();
        match self.dim() {
            1 => (0..n)
                .map(|i| (self.grid.coord(i), self.values[i]))
                .collect(),
            _ => {
                let j = n / 2;
                (0..n)
                    .map(|i| (self.grid.coord(i), self.values[i * n + j]))
                    .collect()
            }
        }
    }
}

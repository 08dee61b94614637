use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rule for values outside the grid box.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Extension {
    Zero,
    Periodic,
}

impl Extension {
    pub fn code(self) -> u8 {
        match self {
            Extension::Zero => 0,
            Extension::Periodic => 1,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(Extension::Zero),
            1 => Ok(Extension::Periodic),
            other => Err(Error::Format(format!("unknown extension code {other}"))),
        }
    }
}

/// Uniform square grid in dimension 1 or 2.
///
/// Sample `i` along an axis sits at `origin + i * h` with `h = 2 * extent / n`.
/// Multi-dimensional samples are stored row-major with axis 0 outermost.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    extent: f64,
    n: usize,
    origin: f64,
    extension: Extension,
}

impl Grid {
    pub fn new(
        dim: usize,
        extent: f64,
        n: usize,
        origin: f64,
        extension: Extension,
    ) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidDimension(dim));
        }
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidSize(format!(
                "n = {n} must be even and at least 8"
            )));
        }
        if !(extent > 0.0) || !extent.is_finite() {
            return Err(Error::InvalidSize(format!(
                "extent = {extent} must be positive"
            )));
        }
        if !origin.is_finite() {
            return Err(Error::InvalidSize("origin must be finite".into()));
        }
        Ok(Grid {
            dim,
            extent,
            n,
            origin,
            extension,
        })
    }

    /// Grid over `[-extent, extent)` per axis.
    pub fn centered(dim: usize, extent: f64, n: usize, extension: Extension) -> Result<Self> {
        Grid::new(dim, extent, n, -extent, extension)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn extension(&self) -> Extension {
        self.extension
    }

    pub fn with_extension(&self, extension: Extension) -> Grid {
        Grid {
            extension,
            ..self.clone()
        }
    }

    pub fn h(&self) -> f64 {
        2.0 * self.extent / self.n as f64
    }

    /// Volume element `h^dim`.
    pub fn cell(&self) -> f64 {
        self.h().powi(self.dim as i32)
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.h()
    }

    /// Per-axis indices of a flat sample index.
    pub fn unflatten(&self, flat: usize) -> [usize; 2] {
        if self.dim == 1 {
            [flat, 0]
        } else {
            [flat / self.n, flat % self.n]
        }
    }

    pub fn flatten(&self, idx: [usize; 2]) -> usize {
        if self.dim == 1 {
            idx[0]
        } else {
            idx[0] * self.n + idx[1]
        }
    }

    /// Coordinates of a flat sample (second component is 0 in d = 1).
    pub fn point(&self, flat: usize) -> [f64; 2] {
        let [i, j] = self.unflatten(flat);
        if self.dim == 1 {
            [self.coord(i), 0.0]
        } else {
            [self.coord(i), self.coord(j)]
        }
    }

    /// Nearest sample index along one axis, if inside the box.
    pub fn nearest_axis_index(&self, x: f64) -> Option<usize> {
        let i = ((x - self.origin) / self.h()).round();
        if i >= 0.0 && (i as usize) < self.n {
            Some(i as usize)
        } else {
            None
        }
    }

    pub fn nearest_index(&self, x: &[f64]) -> Option<usize> {
        if x.len() != self.dim {
            return None;
        }
        let i = self.nearest_axis_index(x[0])?;
        let j = if self.dim == 2 {
            self.nearest_axis_index(x[1])?
        } else {
            0
        };
        Some(self.flatten([i, j]))
    }

    /// Whether a point lies in the closed box `[origin, origin + 2 extent]^dim`.
    pub fn contains(&self, x: &[f64]) -> bool {
        let hi = self.origin + 2.0 * self.extent;
        x.len() == self.dim && x.iter().all(|&c| c >= self.origin && c <= hi)
    }

    /// Same box, spacing halved.
    pub fn refined(&self) -> Grid {
        Grid {
            n: self.n * 2,
            ..self.clone()
        }
    }

    /// Grid of kernel displacements used by convolution on this grid.
    ///
    /// Zero extension needs displacements in `[-n, n)` samples per axis, so the
    /// kernel grid has `2n` samples. Periodic extension wraps, so `n` samples
    /// covering `[-n/2, n/2)` suffice. Index `n_k / 2` is displacement zero.
    pub fn kernel_grid(&self) -> Grid {
        let h = self.h();
        let (n, extent) = match self.extension {
            Extension::Zero => (2 * self.n, 2.0 * self.extent),
            Extension::Periodic => (self.n, self.extent),
        };
        Grid {
            dim: self.dim,
            extent,
            n,
            origin: -((n / 2) as f64) * h,
            extension: self.extension,
        }
    }

    /// Displacement (in length units) of kernel-grid index `m` along one axis.
    pub fn displacement(&self, m: usize) -> f64 {
        (m as f64 - (self.n / 2) as f64) * self.h()
    }

    /// Same spacing and dimension, irrespective of origin and extension.
    pub fn same_lattice(&self, other: &Grid) -> bool {
        self.dim == other.dim && (self.h() - other.h()).abs() <= 1e-12 * self.h()
    }

    pub fn same_box(&self, other: &Grid) -> bool {
        self.dim == other.dim
            && self.n == other.n
            && self.extent.to_bits() == other.extent.to_bits()
            && self.origin.to_bits() == other.origin.to_bits()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_coordinates() {
        let g = Grid::new(1, 1.0, 8, -1.0, Extension::Zero).unwrap();
        assert_eq!(g.h(), 0.25);
        let coords: Vec<f64> = (0..8).map(|i| g.coord(i)).collect();
        assert_eq!(coords, vec![-1.0, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75]);
    }

    #[test]
    fn two_dimensional_size() {
        let g = Grid::new(2, 2.0, 16, -2.0, Extension::Periodic).unwrap();
        assert_eq!(g.h(), 0.25);
        assert_eq!(g.len(), 256);
        assert_eq!(g.point(17), [-1.75, -1.75]);
    }

    #[test]
    fn rejects_bad_dimension_and_size() {
        assert_eq!(
            Grid::new(3, 1.0, 8, 0.0, Extension::Zero),
            Err(Error::InvalidDimension(3))
        );
        assert!(matches!(
            Grid::new(1, 1.0, 9, 0.0, Extension::Zero),
            Err(Error::InvalidSize(_))
        ));
        assert!(matches!(
            Grid::new(1, 1.0, 6, 0.0, Extension::Zero),
            Err(Error::InvalidSize(_))
        ));
        assert!(matches!(
            Grid::new(1, 0.0, 8, 0.0, Extension::Zero),
            Err(Error::InvalidSize(_))
        ));
    }

    #[test]
    fn kernel_grid_layout() {
        let g = Grid::centered(1, 4.0, 16, Extension::Zero).unwrap();
        let k = g.kernel_grid();
        assert_eq!(k.n(), 32);
        assert_eq!(k.h(), g.h());
        assert_eq!(k.displacement(16), 0.0);
        assert_eq!(k.displacement(0), -8.0);
        let p = g.with_extension(Extension::Periodic).kernel_grid();
        assert_eq!(p.n(), 16);
        assert_eq!(p.displacement(8), 0.0);
    }
}

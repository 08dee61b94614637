//! Grids, sampled functions, kernels and synthetic inputs.

mod function;
mod grid;
pub mod io;
mod kernel;
mod testfn;

pub use function::GridFunction;
pub use grid::{Extension, Grid};
pub(crate) use kernel::sample_dilated;
pub use kernel::{sample_kernel, KernelFamily, KernelSpec};
pub use testfn::{
    make_test_function, moments, project_vanishing_moments, TestFamily, TestFunctionSpec,
};

/// Grid over `[-extent, extent)^dim` with `n` samples per axis.
pub fn make_grid(dim: usize, extent: f64, n: usize, extension: Extension) -> crate::Result<Grid> {
    Grid::centered(dim, extent, n, extension)
}

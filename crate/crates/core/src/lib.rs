//! Maximal functions, Hardy and Hardy-Sobolev quasi-norms on uniform grids,
//! and numerical checks of the inequalities relating them.

pub mod claims;
pub mod convolve;
pub mod digest;
pub mod error;
pub mod gridfn;
pub mod maxops;
pub mod norms;
pub mod report;
pub mod verify;

pub use error::{Error, Result};
pub use gridfn::{
    Extension, Grid, GridFunction, KernelFamily, KernelSpec, TestFamily, TestFunctionSpec,
};
pub use report::{CheckReport, Quantity};

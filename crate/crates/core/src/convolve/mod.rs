//! Kernel dilation and convolution across scale sets.

mod engine;
mod envelope;
mod fft;
mod scales;
mod stack;
mod sweep;

pub use engine::{convolve, convolve_with, dilate, ConvPath};
pub use envelope::{dyadic_envelope, dyadic_envelope_check, dyadic_envelope_constant};
pub use scales::{ScalePolicy, ScaleSet};
pub use stack::{build_scale_stack, ScaleStack};
pub use sweep::sweep;

//! Maximal operators evaluated from scale stacks, sweeps and ball families.

mod balls;
mod filter;
mod maximal;
mod miyachi;
mod weak;

pub use balls::{ball_mask, ball_samples, hl_maximal, BallFamily};
pub use filter::{disk_max, footprint, footprint_count};
pub use maximal::{
    maximal_convolution, maximal_many, maximal_with_argmax, nontangential_many,
    nontangential_maximal, truncated_maximal, ConeParams,
};
pub use miyachi::{
    ball_oscillations, best_constant_oscillation, family_fits, miyachi_np, BallWeight,
};
pub use weak::{weak_quasinorm, weak_quasinorm_values};

//! Numerical checks of the inequalities relating maximal functions and
//! Hardy-Sobolev quasi-norms. Every check returns a [`CheckReport`](crate::CheckReport).
//!
//! Inequalities that hold exactly for the discrete objects are checked with
//! round-off slack. Boundedness statements are checked as finiteness plus
//! stability of the measured constant when the grid is refined once.

mod bounded;
mod oscillation;
mod pointwise;
mod settings;
mod sharpness;

pub use bounded::{
    check_corollary1, check_local_theorem, check_miyachi, check_modulus_comparison,
    check_norm_equivalence, check_theorem1, BALLS_PER_DECADE,
};
pub use oscillation::{
    check_lerner_perez, check_np_exact, e1_e2_diagnostic, seeded_balls, seeded_split_points,
    split_measures, Ball, SplitMeasure, SplitPoint,
};
pub use pointwise::{
    check_conv_oracle, check_kinnunen, check_unit_mass, check_weak_embedding, weak_embedding_cases,
    WeakCase,
};
pub use settings::{relative_change, Resolution, Tolerances};
pub use sharpness::{decay_profile, sharpness_experiment, DecaySample};

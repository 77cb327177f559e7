//! Littlewood-Paley analysis on the periodic grid.

pub mod field;
pub mod lp;
pub mod para2;

pub use field::{random_trig, synthetic_field, Field, Spectrum};
pub use lp::{
    besov_norm, chi, corrector, default_window, estimate_regularity, j_max, lp_block, lp_blocks, para,
    regularity_at_least, resonant, rho, s_block, smooth_part, spectral_profile, RegularityFit,
};
pub use para2::{para2, para2_dense, TwoVarFunction};

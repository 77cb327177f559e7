//! Paracontrolled brackets and paraproduct-based reconstruction.

pub mod brackets;
pub mod reconstruct;

pub use brackets::{
    bracket_of_vector, compute_brackets, compute_g_brackets, compute_m_brackets, quotient_bracket_check, BracketSet,
};
pub use reconstruct::{
    coefficient_representation, gip_reconstruct, paracontrolled_reconstruct, reconstruction_bound_test,
    reconstruction_pairings, BoundParams, Reconstruction,
};

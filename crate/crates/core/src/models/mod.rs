//! Models on the grid, modelled distributions, and their sampled bounds.

pub mod md;
pub mod model;
pub mod norms;
pub mod sampling;

pub use md::{d_gamma_norms, h_tau, local_expansion, md_quotient, DGammaReport, ModelledDistribution, PairSampler};
pub use model::{canonical_plus_model, canonical_polynomial_model, CharacterField, Model, Sector};
pub use norms::{check_transition, model_norms, Mollifier, NormParams, NormReport};

//! Regularizing kernels, admissible models and their construction from brackets.

pub mod build;
pub mod checks;
pub mod kernel;

pub use build::{
    admissible_family, admissible_g_values, build_admissible, canonical_smooth_model, AdmissibleBuildReport,
    LevelReport, HARD_SHORTFALL,
};
pub use checks::{check_admissible, check_usual, leibniz_derivative, upsilon_check, upsilon_distribution, AdmissibleTolerances};
pub use kernel::{chi_k, conv_full, integrate_k, integrate_k_levels, kernel_bound_audit, GridKernel, KernelFamily};

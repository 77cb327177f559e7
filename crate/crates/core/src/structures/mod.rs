//! Builders for concrete structures, assumption checks, and the chart geometry.

pub mod builders;
pub mod formulas;
pub mod lift;
pub mod partition;
pub mod validate;

pub use builders::{
    build_polynomial_structure, build_tree_structure, n_charts, PolynomialStructureParams, TreeStructureSpec,
};
pub use lift::polynomial_lift;
pub use partition::{partition_of_unity, PartitionOfUnity};
pub use validate::validate_assumptions;

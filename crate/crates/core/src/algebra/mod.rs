//! Exact symbolic layer: basis symbols, sparse combinations, coproduct tables,
//! quotients, characters and the antipode.

pub mod check;
pub mod serial;
pub mod structure;
pub mod symbol;
pub mod vector;

pub use check::check_axioms;
pub use structure::{Character, ConcreteStructure, GradeMode, Origin, Row, Scalar};
pub use symbol::{fmt_q, mul_plus, mul_t, parse_q, q, xmono, Grading, Multi, Space, Symbol, Q};
pub use vector::{LinComb, Tensor, Vector};

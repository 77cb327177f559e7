pub mod admissible;
pub mod algebra;
pub mod cli;
pub mod error;
pub mod harmonic;
pub mod io;
pub mod models;
pub mod paracontrolled;
pub mod report;
pub mod structures;

pub use error::{ReconError, Result};

pub mod cli_io;
pub mod convergence_lab;
pub mod error;
pub mod group_geometry;
pub mod linalg;
pub mod quantum_metric;
pub mod spectral_triple;
pub mod twisted_algebra;

pub use error::{Error, Result};

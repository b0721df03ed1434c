//! Twisted group algebras: cocycles, finitely supported elements, the
//! truncated left and right regular representations, Fejér averaging and the trace.

mod cocycle;
mod element;
mod fejer;
mod representation;

pub use cocycle::{phase, Cocycle, CocycleSpec};
pub use element::{involution, norm_upper, self_adjoint_part, trace, twisted_convolution, AlgebraElement};
pub use fejer::{fejer_average, fejer_coefficient, level_expectation};
pub use representation::{basis_vector, lambda_matrix, lambda_of, rho_matrix};

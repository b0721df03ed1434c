mod examples;
mod lp;
mod qcms;
mod seminorm;
mod tunnel;
mod vertex;

pub use examples::{
    bridge_builder_check, interval_example, nbar_example, nbar_identity_pairs, nbar_level, nbar_limit, nbar_shift_pairs, BridgeBuilderReport, ExampleReport,
    SeminormValue, Witness,
};
pub use lp::{rationalize, solve, LinearProgram, LpMode, LpSolution, LpStatus, EXACT_MAX_VARS};
pub use qcms::{check_state, dirac, dirichlet, EpsilonNet, FiniteQcms, NormBoundCheck};
pub use seminorm::{Bound, Seminorm};
pub use tunnel::{ExtentBounds, QuotientCheck, Side, TunnelSpec};
pub use vertex::{enumerate_vertices, DEFAULT_VERTEX_BUDGET};

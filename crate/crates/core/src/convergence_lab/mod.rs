//! Experiments that compose the geometry, algebra and triple modules along the
//! inductive sequence: inter-level seminorm comparisons, functional calculus and
//! dynamics along the levels, bridge-builder certificates and the two suites.

mod certificate;
mod comparison;
mod config;
mod functional;
mod suite;

use serde::{Deserialize, Serialize};

pub use certificate::{
    bridge_builder_certificate, certify_level_element, certify_limit_element, global_level_distance, CertificateLevel, CertificateReport,
    CertificateWitness, Direction,
};
pub use comparison::{build_triple, compare_element, seminorm_comparison, ComparisonRow, ComparisonTable, LevelComparison};
pub use config::{ExperimentConfig, FamilyKind, FunctionPreset, OutputConfig, Tolerances};
pub use functional::{
    default_times, dynamics_deviation, functional_calculus_convergence, functional_deviation, sample_dn_unit, DynamicsRow, FunctionalRow,
    FunctionalSeries,
};
pub use suite::{run_bd_suite, run_solenoid_suite, AlphaRow, ConvergenceReport, CriterionOutcome, GeometryPoint, LevelRow, StageTiming};

/// Outcome of a certified comparison. Undecided means the brackets overlap.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
    Undecided,
}

impl Verdict {
    /// Fail dominates Undecided, which dominates Pass.
    pub fn combine(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::Fail, _) | (_, Verdict::Fail) => Verdict::Fail,
            (Verdict::Undecided, _) | (_, Verdict::Undecided) => Verdict::Undecided,
            _ => Verdict::Pass,
        }
    }

    pub fn from_counts(fail: usize, undecided: usize) -> Verdict {
        if fail > 0 {
            Verdict::Fail
        } else if undecided > 0 {
            Verdict::Undecided
        } else {
            Verdict::Pass
        }
    }

    pub fn from_bool(ok: bool) -> Verdict {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    /// 0 = pass, 2 = fail, 3 = undecided.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Fail => 2,
            Verdict::Undecided => 3,
        }
    }
}

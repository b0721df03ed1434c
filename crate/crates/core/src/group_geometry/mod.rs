//! Exact models of ℤ[1/p]^d, ℤ(α) and ℤ(α)×ℤ with their level structure,
//! length functions, finite balls, doubling counts and subgroup distances.

mod ball;
mod element;
mod group;
mod hausdorff;
mod length;

pub use ball::{ball_cardinality, doubling_report, enumerate_ball, Ball, BallRow, DoublingReport, DoublingRow, DEFAULT_BUDGET};
pub use element::{ElementRecord, GroupElement, PRational, RootOfUnity};
pub use group::{Group, Tower};
pub use hausdorff::{distance_to_level, hausdorff_subgroup_distance, HausdorffEstimate};
pub use length::{length_f, length_h, CircleMetric, Combinator, LengthFunction, Scale, VecNorm};

mod clifford;
mod coset;
mod norm;
mod triple;

pub use clifford::{block_add, block_apply, block_mul, block_scale, dirac_block, Block, CliffordPair};
pub use coset::{coset_block_seminorm, coset_sweep, CosetBlock, CosetSweepRow};
pub use norm::{norm_2x2, op_norm, op_norm_witness, NormEstimate, DEFAULT_TOL};
pub use triple::{connes_commutator_norm, scalar_commutator, BlockOperator, SeminormBracket, SpectrumEntry, TruncatedTriple, TruncationTag, LEIBNIZ_OMEGA, LEIBNIZ_OMEGA_PRIME};

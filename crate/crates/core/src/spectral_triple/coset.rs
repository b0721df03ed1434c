use serde::Serialize;

use super::norm::{op_norm, NormEstimate};
use super::triple::{scalar_commutator, TruncatedTriple};
use crate::error::{Error, Result};
use crate::group_geometry::{ElementRecord, GroupElement};
use crate::twisted_algebra::{lambda_of, self_adjoint_part, trace, AlgebraElement};

/// One coset block of [D, b] for b supported in G_n, restricted to ℓ²(G_n k)⊗E.
#[derive(Clone, Debug, Serialize)]
pub struct CosetBlock {
    pub level: usize,
    pub coset: ElementRecord,
    pub coset_length: f64,
    pub block: NormEstimate,
    pub level_seminorm: NormEstimate,
    pub centred_norm: f64,
    /// level seminorm + 2·𝕃_H(k)·‖b − tr(b)‖ on the truncation.
    pub bound: f64,
}

impl CosetBlock {
    pub fn within_bound(&self, rel_tol: f64) -> bool {
        self.block.value <= self.bound * (1.0 + rel_tol) + rel_tol
    }
}

/// Norm of the G_n k block of [D, b] over the level-n part of the truncation.
///
/// F is constant on G_n k for k outside G_n, so only the 𝕃_H part contributes;
/// after conjugating by δ_h ↦ σ(h,k)δ_{hk} the block lives on ℓ²(B ∩ G_n) with
/// the ordinary phases σ(g,h).
pub fn coset_block_seminorm(triple: &TruncatedTriple, n: usize, b: &AlgebraElement, k: &GroupElement, tol: f64) -> Result<CosetBlock> {
    let group = &triple.ball.group;
    if b.support().any(|g| !group.in_level(g, n)) {
        return Err(Error::InvalidArgument(format!("element is not supported in level {n}")));
    }
    let level = triple.level_part(n);
    let translated: Vec<GroupElement> = level.ball.elements().iter().map(|h| group.op(h, k)).collect();
    let fvals: Vec<f64> = translated.iter().map(|x| triple.f_len.eval(group, x)).collect();
    if let Some(first) = fvals.first() {
        if fvals.iter().any(|v| (v - first).abs() > 1e-12 * first.abs().max(1.0)) {
            return Err(Error::CosetNotConstant(format!("F varies on the translate of level {n} by {k}")));
        }
    }
    let shifted: Vec<f64> = translated.iter().map(|x| triple.h_len.eval(group, x)).collect();
    let bs = self_adjoint_part(group, &triple.sigma, b);
    let blk = op_norm(&scalar_commutator(&level.ball, &triple.sigma, &shifted, &bs), tol);
    let ln = level.seminorm_lower(&bs, tol);
    let t = trace(group, &bs);
    let centred = bs.sub(group, &AlgebraElement::new(group, [(group.identity(), t)]));
    let cn = if centred.is_zero() {
        0.0
    } else {
        op_norm(&lambda_of(&triple.sigma, &centred, &level.ball), tol).value
    };
    let lk = triple.h_len.eval(group, k);
    Ok(CosetBlock {
        level: n,
        coset: k.into(),
        coset_length: lk,
        block: blk,
        level_seminorm: ln,
        centred_norm: cn,
        bound: ln.value + 2.0 * lk * cn,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CosetSweepRow {
    pub block: CosetBlock,
    /// ε/C² threshold on 𝕃_H(k).
    pub threshold: f64,
    pub small_coset: bool,
    /// L_n(b)/(1 − ε/C).
    pub target: f64,
    pub satisfied: bool,
}

/// Runs the coset inequality for several representatives with C = 2‖b − tr b‖/L_n(b).
pub fn coset_sweep(triple: &TruncatedTriple, n: usize, b: &AlgebraElement, eps: f64, cosets: &[GroupElement], tol: f64) -> Result<Vec<CosetSweepRow>> {
    let mut rows = Vec::with_capacity(cosets.len());
    for k in cosets {
        let block = coset_block_seminorm(triple, n, b, k, tol)?;
        let ln = block.level_seminorm.value;
        if ln <= 0.0 {
            return Err(Error::Degenerate);
        }
        let c = (2.0 * block.centred_norm / ln).max(f64::MIN_POSITIVE);
        let threshold = eps / (c * c);
        let target = if eps < c { ln / (1.0 - eps / c) } else { f64::INFINITY };
        let small = block.coset_length < threshold;
        let satisfied = !small || block.block.value <= target * (1.0 + tol) + tol;
        rows.push(CosetSweepRow {
            block,
            threshold,
            small_coset: small,
            target,
            satisfied,
        });
    }
    Ok(rows)
}

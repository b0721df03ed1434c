use std::collections::HashMap;

use num_bigint::{BigInt, BigUint};
use num_traits::ToPrimitive;
use serde::Serialize;

use super::element::{GroupElement, PRational, RootOfUnity};
use super::group::Group;
use super::length::{length_f, length_h, root_turns, CircleMetric, LengthFunction, Scale, VecNorm};
use crate::error::{invalid, Error, Result};

pub const DEFAULT_BUDGET: usize = 1_000_000;

/// Relative slack for the membership test 𝕃(g) ≤ r, absorbing float rounding of exact inputs.
const RADIUS_SLACK: f64 = 1e-12;

pub(crate) fn within(v: f64, r: f64) -> bool {
    v <= r + RADIUS_SLACK * r.max(1.0)
}

/// A finite set of group elements in canonical order, with an index.
#[derive(Clone, Debug)]
pub struct Ball {
    pub group: Group,
    pub length: LengthFunction,
    pub radius: f64,
    elements: Vec<GroupElement>,
    index: HashMap<GroupElement, usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BallRow {
    pub id: usize,
    pub element: GroupElement,
    pub length_h: f64,
    pub length_f: f64,
    pub length: f64,
}

impl Ball {
    /// Builds a ball from an arbitrary element list (deduplicated and sorted canonically).
    pub fn from_elements(group: Group, length: LengthFunction, radius: f64, mut elements: Vec<GroupElement>) -> Self {
        elements.sort_by(|a, b| group.cmp(a, b));
        elements.dedup();
        let index = elements.iter().cloned().enumerate().map(|(i, g)| (g, i)).collect();
        Ball {
            group,
            length,
            radius,
            elements,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn index_of(&self, g: &GroupElement) -> Option<usize> {
        self.index.get(g).copied()
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        self.index.contains_key(g)
    }

    /// B ∩ G_n.
    pub fn restrict_level(&self, n: usize) -> Ball {
        let els = self.elements.iter().filter(|g| self.group.in_level(g, n)).cloned().collect();
        Ball::from_elements(self.group.clone(), self.length.clone(), self.radius, els)
    }

    /// {g ∈ B : 𝕃(g) ≤ r}.
    pub fn restrict_radius(&self, r: f64) -> Ball {
        let els = self
            .elements
            .iter()
            .filter(|g| within(self.length.eval(&self.group, g), r))
            .cloned()
            .collect();
        Ball::from_elements(self.group.clone(), self.length.clone(), r, els)
    }

    pub fn rows(&self) -> Vec<BallRow> {
        let (norm, circle) = self.length.h_part().unwrap_or((VecNorm::Max, CircleMetric::Arc));
        let scale = self.length.f_part().unwrap_or(Scale::FamilyDefault);
        self.elements
            .iter()
            .enumerate()
            .map(|(id, g)| BallRow {
                id,
                element: g.clone(),
                length_h: length_h(&self.group, g, norm, circle),
                length_f: length_f(&self.group, g, &scale),
                length: self.length.eval(&self.group, g),
            })
            .collect()
    }
}

/// Largest level whose scale is ≤ bound, for every scale in the length.
fn max_level(group: &Group, length: &LengthFunction, bound: f64) -> Result<usize> {
    let scales = length.scales();
    let mut best = 0usize;
    for s in &scales {
        let mut n = 0usize;
        loop {
            if let Some(t) = group.tower() {
                if n + 1 > t.depth() {
                    // the next unknown α is at least twice the last known one
                    let next_min = 2.0 * t.alpha_f64(t.depth());
                    let unknown = match s {
                        Scale::FamilyDefault => next_min,
                        _ => s.at(group, n + 1),
                    };
                    if within(unknown, bound) {
                        return Err(Error::TowerTooShort {
                            level: n + 1,
                            known: t.depth(),
                        });
                    }
                    break;
                }
            }
            if !within(s.at(group, n + 1), bound) {
                break;
            }
            n += 1;
            if n > 4096 {
                return Err(invalid("scale grows too slowly for enumeration"));
            }
        }
        best = best.max(n);
    }
    Ok(best)
}

/// Visits every element with 𝕃(g) ≤ r (in canonical order within each level).
fn visit_ball(
    group: &Group,
    length: &LengthFunction,
    r: f64,
    budget: usize,
    mut visit: impl FnMut(GroupElement, f64),
) -> Result<usize> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(invalid(format!("radius {r} must be a finite nonnegative number")));
    }
    length.validate()?;
    if !length.is_proper(group) {
        return Err(Error::NotProper(
            "combine 𝕃_H with 𝔽 through a monotone norm".into(),
        ));
    }
    let (ch, cf) = length.lower_constants();
    let guard = (budget as u128).saturating_mul(16).max(1024);
    let mut count = 0usize;
    let mut accept = |g: GroupElement, v: f64, count: &mut usize| -> Result<()> {
        *count += 1;
        if *count > budget {
            return Err(Error::Budget {
                needed: *count as u128,
                budget,
            });
        }
        visit(g, v);
        Ok(())
    };

    match group {
        Group::Finite { moduli } => {
            let total: u128 = moduli.iter().map(|&m| m as u128).product();
            if total > guard {
                return Err(Error::Budget { needed: total, budget });
            }
            let mut cur = vec![0u64; moduli.len()];
            loop {
                let g = GroupElement::Finite(cur.clone());
                let v = length.eval(group, &g);
                if within(v, r) {
                    accept(g, v, &mut count)?;
                }
                let mut i = moduli.len();
                loop {
                    if i == 0 {
                        return Ok(count);
                    }
                    i -= 1;
                    cur[i] += 1;
                    if cur[i] < moduli[i] {
                        break;
                    }
                    cur[i] = 0;
                }
            }
        }
        Group::Solenoid { p, d } => {
            let bh = r / ch;
            let top = if cf > 0.0 { max_level(group, length, r / cf)? } else { 0 };
            // box size check before any work
            let mut boxes: u128 = 0;
            for n in 0..=top {
                let a = (bh * (*p as f64).powi(n as i32) * (1.0 + 1e-12)).floor() as u128;
                boxes = boxes.saturating_add((2 * a + 1).saturating_pow(*d as u32));
            }
            if boxes > guard {
                return Err(Error::Budget { needed: boxes, budget });
            }
            let pi = *p as i64;
            for n in 0..=top {
                let scale = pi.pow(n as u32);
                let a = (bh * scale as f64 * (1.0 + 1e-12)).floor() as i64;
                let fscale = |s: &Scale| s.at(group, n);
                let mut cur = vec![-a; *d];
                let denom = scale as f64;
                loop {
                    let exact = n == 0 || cur.iter().any(|x| x % pi != 0);
                    if exact {
                        let ident = cur.iter().all(|&x| x == 0);
                        let xs: Vec<f64> = cur.iter().map(|&x| x as f64 / denom).collect();
                        let v = length.eval_with(
                            &mut |norm: VecNorm, _| norm.apply(xs.iter().copied()),
                            &mut |s: &Scale| if ident { 0.0 } else { fscale(s) },
                        );
                        if within(v, r) {
                            let coords = cur
                                .iter()
                                .map(|&x| PRational::new(BigInt::from(x), n as u32, *p))
                                .collect();
                            accept(GroupElement::Solenoid { p: *p, coords }, v, &mut count)?;
                        }
                    }
                    let mut i = *d;
                    let mut done = false;
                    loop {
                        if i == 0 {
                            done = true;
                            break;
                        }
                        i -= 1;
                        cur[i] += 1;
                        if cur[i] <= a {
                            break;
                        }
                        cur[i] = -a;
                    }
                    if done {
                        break;
                    }
                }
            }
            Ok(count)
        }
        Group::RootsOfUnity { tower } | Group::BunceDeddens { tower } => {
            let with_z = matches!(group, Group::BunceDeddens { .. });
            let bh = r / ch;
            let top = max_level(group, length, r / cf)?;
            let mut work: u128 = 0;
            for n in 0..=top {
                let a = tower.alpha(n)?.to_u128().unwrap_or(u128::MAX);
                let zs = if with_z { 2 * (bh as u128) + 1 } else { 1 };
                work = work.saturating_add(a.saturating_mul(zs));
            }
            if work > guard {
                return Err(Error::Budget { needed: work, budget });
            }
            for n in 0..=top {
                let alpha = tower.alpha(n)?.clone();
                let a = alpha.to_u64().unwrap_or(u64::MAX);
                let q = if n > 0 { tower.ratio(n).to_u64().unwrap_or(u64::MAX) } else { 1 };
                for res in 0..a {
                    if n > 0 && res % q == 0 {
                        continue;
                    }
                    let rb = BigUint::from(res);
                    let turns = root_turns(&rb, &alpha);
                    let zmax = if with_z {
                        let lz_min = CircleMetric::Chord.of_turns(turns).min(CircleMetric::Arc.of_turns(turns));
                        ((bh - lz_min) * (1.0 + 1e-12)).floor().max(-1.0) as i64
                    } else {
                        0
                    };
                    for z in -zmax..=zmax {
                        let ident = res == 0 && z == 0;
                        let v = length.eval_with(
                            &mut |_, circle: CircleMetric| circle.of_turns(turns) + (z.abs() as f64),
                            &mut |s: &Scale| if ident { 0.0 } else { s.at(group, n) },
                        );
                        if within(v, r) {
                            let g = GroupElement::Root {
                                root: RootOfUnity {
                                    residue: rb.clone(),
                                    level: n as u32,
                                },
                                z: BigInt::from(z),
                            };
                            accept(g, v, &mut count)?;
                        }
                    }
                }
            }
            Ok(count)
        }
    }
}

pub fn enumerate_ball(group: &Group, length: &LengthFunction, r: f64, budget: usize) -> Result<Ball> {
    let mut els = Vec::new();
    visit_ball(group, length, r, budget, |g, _| els.push(g))?;
    Ok(Ball::from_elements(group.clone(), length.clone(), r, els))
}

pub fn ball_cardinality(group: &Group, length: &LengthFunction, r: f64, budget: usize) -> Result<usize> {
    visit_ball(group, length, r, budget, |_, _| {})
}

#[derive(Clone, Debug, Serialize)]
pub struct DoublingRow {
    pub r: f64,
    pub outer: usize,
    pub inner: usize,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DoublingReport {
    pub theta: f64,
    pub rows: Vec<DoublingRow>,
    pub max_ratio: f64,
    pub bound: Option<f64>,
    pub within_bound: Option<bool>,
}

pub fn doubling_report(
    group: &Group,
    length: &LengthFunction,
    theta: f64,
    radii: &[f64],
    bound: Option<f64>,
    budget: usize,
) -> Result<DoublingReport> {
    if !(theta > 1.0) {
        return Err(invalid("θ must exceed 1"));
    }
    let mut rows = Vec::with_capacity(radii.len());
    for &r in radii {
        if !(r >= 1.0) {
            return Err(invalid(format!("radius {r} below 1")));
        }
        let inner = ball_cardinality(group, length, r, budget)?;
        let outer = ball_cardinality(group, length, theta * r, budget)?;
        rows.push(DoublingRow {
            r,
            outer,
            inner,
            ratio: outer as f64 / inner as f64,
        });
    }
    let max_ratio = rows.iter().map(|x| x.ratio).fold(0.0, f64::max);
    Ok(DoublingReport {
        theta,
        rows,
        max_ratio,
        bound,
        within_bound: bound.map(|c| max_ratio <= c),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group_geometry::length::Combinator;
    use std::collections::HashSet;

    #[test]
    fn solenoid_ball_counts() {
        let g = Group::solenoid(2, 2).unwrap();
        let len = LengthFunction::max_of(VecNorm::Max);
        for (n, want) in [(0u32, 9usize), (1, 81), (2, 1089)] {
            let b = enumerate_ball(&g, &len, 2f64.powi(n as i32), DEFAULT_BUDGET).unwrap();
            assert_eq!(b.len(), want);
        }
    }

    #[test]
    fn radius_zero_is_identity() {
        for g in [
            Group::solenoid(3, 2).unwrap(),
            Group::bunce_deddens(&[2, 4]).unwrap(),
            Group::finite(&[3, 4]).unwrap(),
        ] {
            let b = enumerate_ball(&g, &LengthFunction::sum_of(VecNorm::L1), 0.0, 100).unwrap();
            assert_eq!(b.len(), 1);
            assert!(b.elements()[0].is_identity());
        }
    }

    #[test]
    fn roots_ball_at_alpha() {
        let g = Group::roots_of_unity(&[2, 4, 8]).unwrap();
        let len = LengthFunction::max_of(VecNorm::Max);
        assert_eq!(enumerate_ball(&g, &len, 4.0, 100).unwrap().len(), 4);
        assert_eq!(enumerate_ball(&g, &len, 8.0, 100).unwrap().len(), 8);
        assert!(matches!(enumerate_ball(&g, &len, 16.0, 100), Err(Error::TowerTooShort { .. })));
    }

    #[test]
    fn refuses_non_proper_and_budget() {
        let g = Group::solenoid(2, 1).unwrap();
        assert!(matches!(
            enumerate_ball(&g, &LengthFunction::h(VecNorm::Max), 1.0, 100),
            Err(Error::NotProper(_))
        ));
        assert!(matches!(
            enumerate_ball(&g, &LengthFunction::max_of(VecNorm::Max), 64.0, 100),
            Err(Error::Budget { .. })
        ));
    }

    /// Rejection oracle: scan a superset lattice and keep elements satisfying the predicate.
    fn oracle(g: &Group, len: &LengthFunction, r: f64, levels: u32, box_: i64) -> HashSet<GroupElement> {
        let mut out = HashSet::new();
        if let Group::Solenoid { p, d } = g {
            let s = (*p as i64).pow(levels);
            let mut cur = vec![-box_ * s; *d];
            loop {
                let coords: Vec<(i64, u32)> = cur.iter().map(|&x| (x, levels)).collect();
                let e = g.dyadic(&coords).unwrap();
                if within(len.eval(g, &e), r) {
                    out.insert(e);
                }
                let mut i = *d;
                loop {
                    if i == 0 {
                        return out;
                    }
                    i -= 1;
                    cur[i] += 1;
                    if cur[i] <= box_ * s {
                        break;
                    }
                    cur[i] = -box_ * s;
                }
            }
        }
        out
    }

    #[test]
    fn matches_rejection_oracle() {
        let g = Group::solenoid(3, 2).unwrap();
        for comb in [Combinator::Max, Combinator::Sum, Combinator::Euclidean] {
            for norm in [VecNorm::Max, VecNorm::L1, VecNorm::Euclidean] {
                let len = LengthFunction::combine(LengthFunction::h(norm), LengthFunction::f(), comb.clone()).unwrap();
                for r in [1.0, 2.5, 4.0] {
                    let b = enumerate_ball(&g, &len, r, DEFAULT_BUDGET).unwrap();
                    let got: HashSet<_> = b.elements().iter().cloned().collect();
                    assert_eq!(got.len(), b.len());
                    assert_eq!(got, oracle(&g, &len, r, 2, 5), "{comb:?} {norm:?} r={r}");
                    for e in b.elements() {
                        assert!(b.contains(&g.inverse(e)));
                    }
                }
            }
        }
    }

    #[test]
    fn balls_nest() {
        let g = Group::bunce_deddens(&[2, 6, 30]).unwrap();
        let len = LengthFunction::sum_of(VecNorm::Max);
        let mut prev: Option<Ball> = None;
        for r in [0.0, 1.0, 3.5, 7.0, 12.0, 29.0] {
            let b = enumerate_ball(&g, &len, r, DEFAULT_BUDGET).unwrap();
            if let Some(p) = &prev {
                assert!(p.elements().iter().all(|e| b.contains(e)));
            }
            prev = Some(b);
        }
    }

    #[test]
    fn canonical_sorting() {
        let g = Group::solenoid(2, 1).unwrap();
        let b = enumerate_ball(&g, &LengthFunction::max_of(VecNorm::Max), 2.0, 100).unwrap();
        let els = b.elements();
        for w in els.windows(2) {
            assert_eq!(g.cmp(&w[0], &w[1]), std::cmp::Ordering::Less);
        }
        assert_eq!(b.index_of(&els[3]), Some(3));
    }

    #[test]
    fn doubling_solenoid() {
        let g = Group::solenoid(2, 2).unwrap();
        let len = LengthFunction::max_of(VecNorm::Max);
        let rep = doubling_report(&g, &len, 2.0, &[1.0, 2.0, 4.0], Some(16.0), DEFAULT_BUDGET).unwrap();
        assert_eq!(rep.within_bound, Some(true));
        assert_eq!(rep.rows[0].inner, 9);
        assert_eq!(rep.rows[0].outer, 81);
    }

    #[test]
    fn norm_equivalence_nests_counts() {
        // max ≤ sum ≤ 2·max, so B_sum(r) ⊆ B_max(r) ⊆ B_sum(2r)
        let g = Group::solenoid(2, 1).unwrap();
        let lmax = LengthFunction::max_of(VecNorm::Max);
        let lsum = LengthFunction::sum_of(VecNorm::Max);
        for r in [1.0, 2.0, 4.0, 8.0] {
            let a = ball_cardinality(&g, &lsum, r, DEFAULT_BUDGET).unwrap();
            let b = ball_cardinality(&g, &lmax, r, DEFAULT_BUDGET).unwrap();
            let c = ball_cardinality(&g, &lsum, 2.0 * r, DEFAULT_BUDGET).unwrap();
            assert!(a <= b && b <= c);
        }
    }
}

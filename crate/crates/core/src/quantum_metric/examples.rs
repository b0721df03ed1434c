use serde::Serialize;

use super::lp::{solve, LinearProgram};
use super::qcms::FiniteQcms;
use super::seminorm::{Bound, Seminorm};
use super::tunnel::{ExtentBounds, QuotientCheck, Side, TunnelSpec};
use super::vertex::DEFAULT_VERTEX_BUDGET;
use crate::error::{invalid, Result};

/// Coarse grids with at least this many cells skip the bridge-builder check (2^cells vertices).
const BRIDGE_MAX_POINTS: usize = 8;

#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    pub vertex: Vec<f64>,
    pub vertex_lip: f64,
    pub best_partner: Vec<f64>,
    /// min ‖π(a) − b‖ over admissible b, and that gap divided by the seminorm of the vertex.
    pub gap: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BridgeBuilderReport {
    pub eps: f64,
    pub holds: bool,
    pub forward_vertices: usize,
    pub backward_vertices: usize,
    pub forward_worst: Option<Witness>,
    pub backward_worst: Option<Witness>,
}

/// min s subject to L_other(b) ≤ bound and |target(x) − b(y)| ≤ s on the pairs.
fn closest_partner(other: &FiniteQcms, target: &[f64], pairs: &[(usize, usize)], bound: f64) -> Result<(f64, Vec<f64>)> {
    let m = other.len();
    let mut lp = LinearProgram::new(m);
    let s = lp.add_var();
    lp.objective[s] = -1.0;
    let fmap: Vec<Option<usize>> = (0..m).map(Some).collect();
    other.seminorm.emit(&mut lp, &fmap, Bound::constant(bound));
    for &(x, y) in pairs {
        lp.le(vec![(y, 1.0), (s, -1.0)], target[x]);
        lp.le(vec![(y, -1.0), (s, -1.0)], -target[x]);
    }
    let sol = solve(&lp, other.effective_mode(m + 1)).optimal()?;
    Ok((-sol.value, sol.x[..m].to_vec()))
}

fn worst_over_vertices(from: &FiniteQcms, to: &FiniteQcms, pairs: &[(usize, usize)], eps: f64, budget: usize) -> Result<(usize, Option<Witness>, bool)> {
    let verts = from.unit_ball_vertices(budget)?;
    let mut worst: Option<Witness> = None;
    let mut ok = true;
    for v in &verts {
        let lip = from.lip(v);
        if lip <= 1e-12 {
            continue;
        }
        let (gap, b) = closest_partner(to, v, pairs, lip)?;
        let ratio = gap / lip;
        if gap >= eps * lip * (1.0 - 1e-12) {
            ok = false;
        }
        if worst.as_ref().map_or(true, |w| ratio > w.ratio) {
            worst = Some(Witness {
                vertex: v.clone(),
                vertex_lip: lip,
                best_partner: b,
                gap,
                ratio,
            });
        }
    }
    Ok((verts.len(), worst, ok))
}

/// Checks both approximation conditions of a bridge builder on the vertices of each unit ball.
///
/// `pairs` relates points of the limit space to points of the level-n space; ‖π(a) − b‖ is the
/// maximum of |a(x) − b(y)| over them.
pub fn bridge_builder_check(limit: &FiniteQcms, level: &FiniteQcms, pairs: &[(usize, usize)], eps: f64, budget: usize) -> Result<BridgeBuilderReport> {
    if !(eps > 0.0) {
        return Err(invalid("ε must be positive"));
    }
    let (nf, fw, okf) = worst_over_vertices(limit, level, pairs, eps, budget)?;
    let swapped: Vec<(usize, usize)> = pairs.iter().map(|&(x, y)| (y, x)).collect();
    let (nb, bw, okb) = worst_over_vertices(level, limit, &swapped, eps, budget)?;
    Ok(BridgeBuilderReport {
        eps,
        holds: okf && okb,
        forward_vertices: nf,
        backward_vertices: nb,
        forward_worst: fw,
        backward_worst: bw,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SeminormValue {
    pub name: String,
    pub value: f64,
    pub expected: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExampleReport {
    pub example: String,
    pub n: usize,
    pub grid: usize,
    pub seminorm_values: Vec<SeminormValue>,
    pub ratio: f64,
    pub extent: ExtentBounds,
    pub extent_upper: f64,
    pub extent_lower: f64,
    pub target_upper: f64,
    pub quotient_checks: Vec<QuotientCheck>,
    pub bridge_builder: Option<BridgeBuilderReport>,
    pub witnesses: Vec<Witness>,
    pub notes: Vec<String>,
}

fn interval_spaces(n: usize, m: usize) -> Result<(FiniteQcms, FiniteQcms, usize)> {
    let n2 = n * n;
    if n < 2 || m % n2 != 0 {
        return Err(invalid(format!("grid of {m} cells cannot resolve 1 − 1/n² for n = {n}")));
    }
    let coords: Vec<f64> = (0..=m).map(|j| j as f64 / m as f64).collect();
    let cut = m - m / n2;
    let all: Vec<usize> = (0..=m).collect();
    let full = Seminorm::line(&all, &coords)?;
    let left = Seminorm::line(&all[..=cut], &coords)?;
    let right = Seminorm::line(&all[cut..], &coords)?;
    let ln = Seminorm::Sum(vec![(1.0, left), (1.0 / n as f64, right)]);
    let labels: Vec<String> = coords.iter().map(|c| format!("{c}")).collect();
    Ok((FiniteQcms::new(labels.clone(), full, 0)?, FiniteQcms::new(labels, ln, 0)?, cut))
}

/// The interval [0,1] approximated by itself with the metric dilated by n on [1 − 1/n², 1].
pub fn interval_example(n: usize, m: usize, samples: usize, seed: u64) -> Result<ExampleReport> {
    if m < 4 * n * n {
        return Err(invalid(format!("grid of {m} cells is too coarse for n = {n} (need at least {})", 4 * n * n)));
    }
    let (a, b, cut) = interval_spaces(n, m)?;
    let cutoff = cut as f64 / m as f64;
    let fnv: Vec<f64> = (0..=m).map(|j| (j as f64 / m as f64 - cutoff).max(0.0)).collect();
    let l_full = a.lip(&fnv);
    let l_n = b.lip(&fnv);
    let eps = 1.0 / (n + 1) as f64;
    let ident: Vec<usize> = (0..=m).collect();
    let tunnel = TunnelSpec::from_point_map(a.clone(), b.clone(), &ident, eps)?;
    let extent = tunnel.extent_bounds(samples, seed)?;
    let mut quotient_checks = Vec::new();
    let wiggle: Vec<f64> = (0..=m).map(|j| (7.0 * j as f64 / m as f64).sin() / 7.0).collect();
    for f in [&fnv, &wiggle] {
        for side in [Side::A, Side::B] {
            quotient_checks.push(tunnel.quotient_check(side, f)?);
        }
    }
    let mut notes = vec![format!("tunnel weight n+1 = {}, bridge ε = {eps}", n + 1)];
    let bridge_builder = if n * n < BRIDGE_MAX_POINTS {
        let (ca, cb, _) = interval_spaces(n, n * n)?;
        let pairs: Vec<(usize, usize)> = (0..=n * n).map(|j| (j, j)).collect();
        notes.push(format!("bridge-builder check on the coarse grid of {} cells", n * n));
        Some(bridge_builder_check(&ca, &cb, &pairs, 1.0 / n as f64, DEFAULT_VERTEX_BUDGET)?)
    } else {
        notes.push("bridge-builder check skipped: vertex count grows as 2^grid".into());
        None
    };
    Ok(ExampleReport {
        example: "interval".into(),
        n,
        grid: m,
        seminorm_values: vec![
            SeminormValue {
                name: "L_[0,1](f_n)".into(),
                value: l_full,
                expected: 1.0,
            },
            SeminormValue {
                name: "L_n(f_n)".into(),
                value: l_n,
                expected: 1.0 / n as f64,
            },
        ],
        ratio: l_full / l_n,
        extent_upper: extent.upper,
        extent_lower: extent.lower,
        extent,
        target_upper: 1.0 / n as f64,
        quotient_checks,
        bridge_builder,
        witnesses: Vec::new(),
        notes,
    })
}

/// |a/b − c/d| with a single rounding, so gaps such as (1 + 1/n) − 1 come out as fl(1/n).
fn fraction_gap((a, b): (u64, u64), (c, d): (u64, u64)) -> f64 {
    let num = (a as i128 * d as i128 - c as i128 * b as i128).unsigned_abs();
    num as f64 / (b as u128 * d as u128) as f64
}

/// Points 0..=m of ℕ̄ truncated to sequences constant from index m, φ(k) = 1/(k+1).
pub fn nbar_limit(m: usize) -> Result<FiniteQcms> {
    let coords: Vec<(u64, u64)> = (0..=m).map(|k| (1, k as u64 + 1)).collect();
    let pts: Vec<usize> = (0..=m).collect();
    let s = Seminorm::metric(&pts, |x, y| fraction_gap(coords[x], coords[y]))?;
    let mut labels: Vec<String> = (0..m).map(|k| k.to_string()).collect();
    labels.push(format!("≥{m}"));
    FiniteQcms::new(labels, s, m)
}

/// A_n: sequences constant from index n, on points 0..=n with φ_n(0) = 1 + 1/n, φ_n(k) = 1/k.
pub fn nbar_level(n: usize) -> Result<FiniteQcms> {
    if n == 0 {
        return Err(invalid("level must be positive"));
    }
    let n64 = n as u64;
    let coords: Vec<(u64, u64)> = (0..=n64).map(|k| if k == 0 { (n64 + 1, n64) } else { (1, k) }).collect();
    let pts: Vec<usize> = (0..=n).collect();
    let s = Seminorm::metric(&pts, |x, y| fraction_gap(coords[x], coords[y]))?;
    let mut labels: Vec<String> = (0..n).map(|k| k.to_string()).collect();
    labels.push(format!("≥{n}"));
    FiniteQcms::new(labels, s, n)
}

/// Sequence indices k = 0..=m+1 paired as (limit point of π(a)_k, level point of b_k) for the
/// shift π(x) = (x₀, x₀, x₁, x₂, …).
pub fn nbar_shift_pairs(n: usize, m: usize) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(usize, usize)> = (0..=m + 1).map(|k| (k.saturating_sub(1).min(m), k.min(n))).collect();
    pairs.sort_unstable();
    pairs.dedup();
    pairs
}

/// Identity inclusion: index k of the limit space against index k of A_n.
pub fn nbar_identity_pairs(n: usize, m: usize) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(usize, usize)> = (0..=m.max(n)).map(|k| (k.min(m), k.min(n))).collect();
    pairs.dedup();
    pairs
}

/// ℕ̄ approximated by itself, merging the first two points at the far end.
pub fn nbar_example(n: usize, m: usize, eps: f64, bridge_eps: f64, samples: usize, seed: u64) -> Result<ExampleReport> {
    if m <= n + 2 {
        return Err(invalid(format!("truncation {m} must exceed n + 2 = {}", n + 2)));
    }
    let limit = nbar_limit(m)?;
    let level = nbar_level(n)?;
    let delta_limit: Vec<f64> = (0..=m).map(|k| if k == 0 { 1.0 } else { 0.0 }).collect();
    let delta_level: Vec<f64> = (0..=n).map(|k| if k == 0 { 1.0 } else { 0.0 }).collect();
    let l_inf = limit.lip(&delta_limit);
    let l_n = level.lip(&delta_level);

    let tunnel = TunnelSpec::new(limit.clone(), level.clone(), nbar_shift_pairs(n, m), eps)?;
    let extent = tunnel.extent_bounds(samples, seed)?;
    let mut quotient_checks = Vec::new();
    let ramp_limit: Vec<f64> = (0..=m).map(|k| 1.0 / (k + 1) as f64).collect();
    let ramp_level: Vec<f64> = (0..=n).map(|k| if k == 0 { 0.9 } else { 1.0 / (k + 1) as f64 }).collect();
    for f in [&delta_limit, &ramp_limit] {
        quotient_checks.push(tunnel.quotient_check(Side::A, f)?);
    }
    for f in [&delta_level, &ramp_level] {
        quotient_checks.push(tunnel.quotient_check(Side::B, f)?);
    }

    let pairs = nbar_identity_pairs(n, m);
    let bb = bridge_builder_check(&limit, &level, &pairs, bridge_eps, DEFAULT_VERTEX_BUDGET)?;
    // δ₀ itself against the identity inclusion
    let (gap, best) = closest_partner(&level, &delta_limit, &pairs, l_inf)?;
    let delta_witness = Witness {
        vertex: delta_limit.clone(),
        vertex_lip: l_inf,
        gap,
        ratio: gap / l_inf,
        best_partner: best,
    };
    let mut witnesses = vec![delta_witness];
    witnesses.extend(bb.forward_worst.clone().filter(|w| w.ratio >= bridge_eps));
    let threshold_met = 1.0 / ((n + 1) as f64) < eps / 2.0;
    Ok(ExampleReport {
        example: "nbar".into(),
        n,
        grid: m,
        seminorm_values: vec![
            SeminormValue {
                name: "L_inf(delta_0)".into(),
                value: l_inf,
                expected: 2.0,
            },
            SeminormValue {
                name: "L_n(delta_0)".into(),
                value: l_n,
                expected: n as f64,
            },
        ],
        ratio: l_n / l_inf,
        extent_upper: extent.upper,
        extent_lower: extent.lower,
        extent,
        target_upper: eps,
        quotient_checks,
        bridge_builder: Some(bb),
        witnesses,
        notes: vec![format!("1/(n+1) < ε/2: {threshold_met}")],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_bridge_on_identical_spaces() {
        let q = FiniteQcms::line(&[0.0, 0.4, 1.0]).unwrap();
        let pairs = vec![(0, 0), (1, 1), (2, 2)];
        for eps in [1.0, 0.1, 1e-3] {
            let r = bridge_builder_check(&q, &q, &pairs, eps, 1000).unwrap();
            assert!(r.holds);
            assert!(r.forward_worst.unwrap().gap.abs() < 1e-12);
        }
    }

    #[test]
    fn interval_small() {
        let r = interval_example(2, 16, 40, 1).unwrap();
        assert!((r.seminorm_values[0].value - 1.0).abs() < 1e-12);
        assert!((r.seminorm_values[1].value - 0.5).abs() < 1e-12);
        assert!(r.extent_upper <= 0.5);
        assert!(r.extent_lower <= r.extent_upper + 1e-12);
        assert!(r.quotient_checks.iter().all(|q| q.holds), "{:?}", r.quotient_checks);
        assert!(r.bridge_builder.unwrap().holds);
        assert!(interval_example(2, 12, 10, 1).is_err());
    }

    #[test]
    fn nbar_values_and_obstruction() {
        let r = nbar_example(4, 7, 0.5, 0.1, 200, 1).unwrap();
        assert_eq!(r.seminorm_values[0].value, 2.0);
        assert!((r.seminorm_values[1].value - 4.0).abs() < 1e-12);
        assert!(r.extent_upper <= 0.5 + 1e-12);
        let bb = r.bridge_builder.unwrap();
        assert!(!bb.holds);
        let w = &r.witnesses[0];
        // best b has |b(1) − b(0)| ≤ L_∞(δ₀)/n, so the gap stays large
        assert!((w.best_partner[1] - w.best_partner[0]).abs() <= 2.0 / 4.0 + 1e-12);
        assert!(w.ratio >= 0.1);
    }

    #[test]
    fn shift_pairs_cover_both_sides() {
        let p = nbar_shift_pairs(3, 6);
        assert!(p.contains(&(0, 0)) && p.contains(&(0, 1)) && p.contains(&(1, 2)));
        assert!(p.contains(&(6, 3)) && p.contains(&(2, 3)));
        for x in 0..=6 {
            assert!(p.iter().any(|q| q.0 == x));
        }
    }
}

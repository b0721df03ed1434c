use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::lp::{solve, LinearProgram, LpMode};
use super::qcms::{check_state, dirac, dirichlet, FiniteQcms};
use super::seminorm::Bound;
use crate::error::{invalid, Error, Result};

/// Two finite spaces joined by T(a,b) = max{L_A(a), L_B(b), (1/ε)·max |a(x) − b(y)|},
/// the maximum running over the bridge pairs (x, y).
#[derive(Clone, Debug, Serialize)]
pub struct TunnelSpec {
    pub a: FiniteQcms,
    pub b: FiniteQcms,
    pub bridge: Vec<(usize, usize)>,
    pub eps: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    A,
    B,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtentBounds {
    pub epsilon: f64,
    pub upper: f64,
    pub lower: f64,
    /// True when every Dirac state of the joint space was evaluated, making `lower` the extent.
    pub lower_is_exact: bool,
    pub states_evaluated: usize,
    pub pairing_checked: usize,
    pub pairing_max: f64,
    pub unpaired_points: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct QuotientCheck {
    pub side: Side,
    pub target: f64,
    pub infimum: f64,
    pub holds: bool,
}

impl TunnelSpec {
    pub fn new(a: FiniteQcms, b: FiniteQcms, bridge: Vec<(usize, usize)>, eps: f64) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(invalid("tunnel ε must be positive"));
        }
        if bridge.iter().any(|&(x, y)| x >= a.len() || y >= b.len()) {
            return Err(invalid("bridge pair out of range"));
        }
        if bridge.is_empty() {
            return Err(invalid("bridge must pair at least one point"));
        }
        Ok(TunnelSpec { a, b, bridge, eps })
    }

    /// Bridge given by a point map from B's points to A's points (pullback a ↦ a∘π).
    pub fn from_point_map(a: FiniteQcms, b: FiniteQcms, map: &[usize], eps: f64) -> Result<Self> {
        if map.len() != b.len() {
            return Err(invalid("point map must be defined on every point of B"));
        }
        let pairs = map.iter().enumerate().map(|(y, &x)| (x, y)).collect();
        TunnelSpec::new(a, b, pairs, eps)
    }

    pub fn joint_len(&self) -> usize {
        self.a.len() + self.b.len()
    }

    pub fn eval(&self, fa: &[f64], fb: &[f64]) -> f64 {
        let bridge = self.bridge.iter().map(|&(x, y)| (fa[x] - fb[y]).abs()).fold(0.0, f64::max);
        self.a.lip(fa).max(self.b.lip(fb)).max(bridge / self.eps)
    }

    fn mode(&self) -> LpMode {
        self.a.effective_mode(self.joint_len())
    }

    /// Emits T ≤ bound on joint variables (A points first, then B points).
    fn emit(&self, lp: &mut LinearProgram, fmap: &[Option<usize>], bound: Bound) {
        let na = self.a.len();
        self.a.seminorm.emit(lp, &fmap[..na], bound);
        self.b.seminorm.emit(lp, &fmap[na..], bound);
        for &(x, y) in &self.bridge {
            let e: Vec<(usize, f64)> = [(x, 1.0), (na + y, -1.0)].into_iter().filter_map(|(p, c)| fmap[p].map(|v| (v, c))).collect();
            let scaled = Bound {
                var: bound.var,
                coef: bound.coef * self.eps,
                constant: bound.constant * self.eps,
            };
            scaled.push(lp, e.clone());
            scaled.push(lp, e.into_iter().map(|(i, v)| (i, -v)).collect());
        }
    }

    /// Gauge-fixed joint LP for T ≤ 1 (A's base point pinned to 0).
    fn unit_lp(&self) -> (LinearProgram, Vec<Option<usize>>) {
        let n = self.joint_len();
        let mut fmap = vec![None; n];
        let mut k = 0;
        for (p, slot) in fmap.iter_mut().enumerate() {
            if p != self.a.base {
                *slot = Some(k);
                k += 1;
            }
        }
        let mut lp = LinearProgram::new(k);
        self.emit(&mut lp, &fmap, Bound::constant(1.0));
        (lp, fmap)
    }

    /// mk_T between states on the joint point set.
    pub fn mk(&self, phi: &[f64], psi: &[f64]) -> Result<f64> {
        check_state(self.joint_len(), phi)?;
        check_state(self.joint_len(), psi)?;
        let (mut lp, fmap) = self.unit_lp();
        for p in 0..self.joint_len() {
            if let Some(v) = fmap[p] {
                lp.objective[v] = phi[p] - psi[p];
            }
        }
        Ok(solve(&lp, self.mode()).optimal()?.value.max(0.0))
    }

    /// Exact mk_T distance from ψ to the pulled-back state space of one side.
    ///
    /// min over φ supported on the side of max_{T(d) ≤ 1} ⟨ψ − φ, d⟩ equals, by minimax,
    /// max ψ·d − s subject to T(d) ≤ 1 and d(x) ≤ s on that side.
    pub fn distance_to_side(&self, psi: &[f64], side: Side) -> Result<f64> {
        check_state(self.joint_len(), psi)?;
        let (mut lp, fmap) = self.unit_lp();
        let s = lp.add_var();
        for p in 0..self.joint_len() {
            if let Some(v) = fmap[p] {
                lp.objective[v] = psi[p];
            }
        }
        lp.objective[s] = -1.0;
        for p in self.side_range(side) {
            let mut row = vec![(s, -1.0)];
            if let Some(v) = fmap[p] {
                row.push((v, 1.0));
            }
            lp.le(row, 0.0);
        }
        Ok(solve(&lp, self.mode()).optimal()?.value.max(0.0))
    }

    fn side_range(&self, side: Side) -> std::ops::Range<usize> {
        match side {
            Side::A => 0..self.a.len(),
            Side::B => self.a.len()..self.joint_len(),
        }
    }

    /// Bracket on the extent. The upper bound comes from pairing each Dirac state with a bridge
    /// partner on the other side (mk_T ≤ ε by the bridge term, then convexity); sampled pairings
    /// are re-checked by LP. The lower bound is the largest exact distance over the evaluated states.
    pub fn extent_bounds(&self, samples: usize, seed: u64) -> Result<ExtentBounds> {
        if samples == 0 {
            return Err(invalid("at least one sampled state is required"));
        }
        let na = self.a.len();
        let n = self.joint_len();
        let mut partner: Vec<Option<usize>> = vec![None; n];
        for &(x, y) in &self.bridge {
            partner[x].get_or_insert(na + y);
            partner[na + y].get_or_insert(x);
        }
        let mut upper = self.eps;
        let mut unpaired = 0;
        // vertices without a partner contribute their exact distance
        for p in 0..n {
            if partner[p].is_none() {
                unpaired += 1;
                let other = if p < na { Side::B } else { Side::A };
                upper = upper.max(self.distance_to_side(&dirac(n, p), other)?);
            }
        }

        // states: Dirac vertices spread over both sides first, then uniform samples
        let mut order: Vec<usize> = Vec::with_capacity(n);
        let (mut i, mut j) = (0, na);
        while i < na || j < n {
            if j < n {
                order.push(j);
                j += 1;
            }
            if i < na {
                order.push(i);
                i += 1;
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut lower: f64 = 0.0;
        let mut pairing_max: f64 = 0.0;
        let mut pairing_checked = 0;
        let vertex_count = order.len().min(samples);
        for k in 0..samples {
            let psi = if k < vertex_count { dirac(n, order[k]) } else { dirichlet(&mut rng, n) };
            for side in [Side::A, Side::B] {
                lower = lower.max(self.distance_to_side(&psi, side)?);
            }
            // paired state: move the mass of each point to its partner
            if psi.iter().enumerate().all(|(p, &w)| w == 0.0 || partner[p].is_some()) {
                for side in [Side::A, Side::B] {
                    let mut paired = vec![0.0; n];
                    for (p, &w) in psi.iter().enumerate().filter(|(_, &w)| w != 0.0) {
                        let on_side = self.side_range(side).contains(&p);
                        let q = if on_side { p } else { partner[p].unwrap() };
                        paired[q] += w;
                    }
                    let d = self.mk(&psi, &paired)?;
                    pairing_max = pairing_max.max(d);
                    pairing_checked += 1;
                }
            }
        }
        if pairing_max > upper * (1.0 + 1e-9) {
            return Err(Error::Lp(format!("pairing distance {pairing_max} exceeds ε = {}", self.eps)));
        }
        Ok(ExtentBounds {
            epsilon: self.eps,
            upper,
            lower,
            lower_is_exact: vertex_count == n,
            states_evaluated: samples,
            pairing_checked,
            pairing_max,
            unpaired_points: unpaired,
        })
    }

    /// inf{T(a,b) : b} for fixed a (or symmetrically), compared with L_A(a).
    pub fn quotient_check(&self, side: Side, f: &[f64]) -> Result<QuotientCheck> {
        let (own, target) = match side {
            Side::A => (&self.a, self.a.lip(f)),
            Side::B => (&self.b, self.b.lip(f)),
        };
        if f.len() != own.len() {
            return Err(invalid("function has the wrong number of values"));
        }
        // variables: the other side's values and t
        let other_len = self.joint_len() - own.len();
        let mut lp = LinearProgram::new(other_len);
        let t = lp.add_var();
        lp.objective[t] = -1.0;
        lp.le(vec![(t, -1.0)], -target);
        let fmap_other: Vec<Option<usize>> = (0..other_len).map(Some).collect();
        let other = match side {
            Side::A => &self.b,
            Side::B => &self.a,
        };
        other.seminorm.emit(&mut lp, &fmap_other, Bound::var(t));
        for &(x, y) in &self.bridge {
            let (fixed, var) = match side {
                Side::A => (f[x], y),
                Side::B => (f[y], x),
            };
            // |fixed − v| ≤ ε t
            lp.le(vec![(var, 1.0), (t, -self.eps)], fixed);
            lp.le(vec![(var, -1.0), (t, -self.eps)], -fixed);
        }
        let sol = solve(&lp, self.a.effective_mode(other_len + 1)).optimal()?;
        let infimum = -sol.value;
        Ok(QuotientCheck {
            side,
            target,
            infimum,
            holds: (infimum - target).abs() <= 1e-9 * target.max(1.0),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn same(eps: f64) -> TunnelSpec {
        let a = FiniteQcms::line(&[0.0, 0.5, 1.0]).unwrap();
        TunnelSpec::from_point_map(a.clone(), a, &[0, 1, 2], eps).unwrap()
    }

    #[test]
    fn identity_tunnel_extent_shrinks_with_eps() {
        for eps in [0.5, 0.1, 0.01] {
            let t = same(eps);
            let e = t.extent_bounds(200, 1).unwrap();
            assert!(e.lower <= e.upper + 1e-12);
            assert!(e.upper <= eps + 1e-12);
            assert!(e.lower_is_exact);
        }
    }

    #[test]
    fn point_map_missing_some_points_of_a() {
        // the midpoint of A has no partner in B
        let a = FiniteQcms::line(&[0.0, 0.5, 1.0]).unwrap();
        let b = FiniteQcms::line(&[0.0, 1.0]).unwrap();
        let t = TunnelSpec::from_point_map(a, b, &[0, 2], 0.5).unwrap();
        let ext = t.extent_bounds(40, 3).unwrap();
        assert_eq!(ext.unpaired_points, 1);
        assert!(ext.lower <= ext.upper * (1.0 + 1e-12));
        assert!(ext.upper >= 0.5);
    }

    #[test]
    fn tunnel_kernel_is_joint_constants() {
        let t = same(0.3);
        assert_eq!(t.eval(&[2.0; 3], &[2.0; 3]), 0.0);
        assert!(t.eval(&[2.0; 3], &[1.0; 3]) > 0.0);
        let n = t.joint_len();
        let d = t.mk(&dirac(n, 0), &dirac(n, 3)).unwrap();
        assert!((d - 0.3).abs() < 1e-12, "{d}");
    }

    #[test]
    fn quotient_identity_for_identity_bridge() {
        let t = same(0.2);
        for f in [[0.0, 0.3, -0.1], [1.0, 1.5, 2.0]] {
            for side in [Side::A, Side::B] {
                let q = t.quotient_check(side, &f).unwrap();
                assert!(q.holds, "{q:?}");
            }
        }
    }

    #[test]
    fn distance_to_own_side_is_zero() {
        let t = same(0.25);
        let n = t.joint_len();
        assert_eq!(t.distance_to_side(&dirac(n, 1), Side::A).unwrap(), 0.0);
        let d = t.distance_to_side(&dirac(n, 1), Side::B).unwrap();
        assert!(d <= 0.25 + 1e-12);
    }
}

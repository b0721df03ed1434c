use std::collections::HashMap;

use rand::Rng;
use serde::Serialize;

use super::cocycle::Cocycle;
use crate::group_geometry::{Ball, ElementRecord, Group, GroupElement, LengthFunction};
use crate::linalg::C64;

/// A finitely supported function G → ℂ, support sorted canonically.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraElement {
    terms: Vec<(GroupElement, C64)>,
}

#[derive(Serialize)]
struct TermRecord {
    element: ElementRecord,
    re: f64,
    im: f64,
}

impl Serialize for AlgebraElement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<TermRecord> = self
            .terms
            .iter()
            .map(|(g, c)| TermRecord {
                element: g.into(),
                re: c.re,
                im: c.im,
            })
            .collect();
        v.serialize(s)
    }
}

impl AlgebraElement {
    pub fn zero() -> Self {
        AlgebraElement { terms: vec![] }
    }

    /// Merges repeated elements and drops zero coefficients.
    pub fn new(group: &Group, terms: impl IntoIterator<Item = (GroupElement, C64)>) -> Self {
        let mut acc: HashMap<GroupElement, C64> = HashMap::new();
        for (g, c) in terms {
            *acc.entry(g).or_insert(C64::new(0.0, 0.0)) += c;
        }
        let mut terms: Vec<(GroupElement, C64)> = acc.into_iter().filter(|(_, c)| *c != C64::new(0.0, 0.0)).collect();
        terms.sort_by(|a, b| group.cmp(&a.0, &b.0));
        AlgebraElement { terms }
    }

    pub fn delta(g: GroupElement) -> Self {
        AlgebraElement {
            terms: vec![(g, C64::new(1.0, 0.0))],
        }
    }

    pub fn terms(&self) -> &[(GroupElement, C64)] {
        &self.terms
    }

    pub fn support(&self) -> impl Iterator<Item = &GroupElement> {
        self.terms.iter().map(|(g, _)| g)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn get(&self, g: &GroupElement) -> C64 {
        self.terms.iter().find(|(h, _)| h == g).map(|(_, c)| *c).unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn l1_norm(&self) -> f64 {
        self.terms.iter().map(|(_, c)| c.norm()).sum()
    }

    /// Σ |f(g)|·𝕃(g).
    pub fn weighted_l1(&self, group: &Group, length: &LengthFunction) -> f64 {
        self.terms.iter().map(|(g, c)| c.norm() * length.eval(group, g)).sum()
    }

    pub fn max_level(&self, group: &Group) -> usize {
        self.support().map(|g| group.level(g)).max().unwrap_or(0)
    }

    pub fn map_coefficients(&self, group: &Group, f: impl Fn(&GroupElement, C64) -> C64) -> Self {
        AlgebraElement::new(group, self.terms.iter().map(|(g, c)| (g.clone(), f(g, *c))))
    }

    pub fn scale(&self, group: &Group, s: C64) -> Self {
        self.map_coefficients(group, |_, c| c * s)
    }

    pub fn add(&self, group: &Group, other: &AlgebraElement) -> Self {
        AlgebraElement::new(group, self.terms.iter().chain(other.terms.iter()).cloned())
    }

    pub fn sub(&self, group: &Group, other: &AlgebraElement) -> Self {
        self.add(group, &other.scale(group, C64::new(-1.0, 0.0)))
    }

    /// Keeps only the terms inside a ball.
    pub fn restrict(&self, ball: &Ball) -> Self {
        AlgebraElement {
            terms: self.terms.iter().filter(|(g, _)| ball.contains(g)).cloned().collect(),
        }
    }

    /// Random element supported on the given candidates (a few terms, Gaussian-ish coefficients).
    pub fn random<R: Rng>(group: &Group, rng: &mut R, candidates: &[GroupElement], terms: usize) -> Self {
        let mut t = Vec::new();
        if candidates.is_empty() {
            return Self::zero();
        }
        for _ in 0..terms {
            let g = candidates[rng.gen_range(0..candidates.len())].clone();
            t.push((g, C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))));
        }
        AlgebraElement::new(group, t)
    }
}

/// (f1 ∗ f2)(x) = Σ_{gh = x} f1(g) f2(h) σ(g, h).
pub fn twisted_convolution(group: &Group, sigma: &Cocycle, f1: &AlgebraElement, f2: &AlgebraElement) -> AlgebraElement {
    let mut t = Vec::with_capacity(f1.terms.len() * f2.terms.len());
    for (g, a) in &f1.terms {
        for (h, b) in &f2.terms {
            t.push((group.op(g, h), a * b * sigma.eval(g, h)));
        }
    }
    AlgebraElement::new(group, t)
}

/// f*(g) = conj(σ(g, g⁻¹))·conj(f(g⁻¹)).
pub fn involution(group: &Group, sigma: &Cocycle, f: &AlgebraElement) -> AlgebraElement {
    AlgebraElement::new(
        group,
        f.terms.iter().map(|(h, c)| {
            let g = group.inverse(h);
            let s = sigma.eval(&g, h).conj();
            (g, s * c.conj())
        }),
    )
}

pub const NORM_UPPER_MAX_SUPPORT: usize = 512;

/// Upper bound on the reduced norm ‖λ(f)‖.
///
/// With h = f* ∗ f, the C*-identity gives ‖λ(f)‖^{2^{k+1}} = ‖λ(h^{2^k})‖ ≤ ‖h^{2^k}‖₁, so each
/// squaring round can only tighten the ℓ¹ bound. A relative margin of 1e-12 covers rounding in
/// the convolutions. Squaring stops early once the support exceeds [`NORM_UPPER_MAX_SUPPORT`],
/// since every round already yields a valid bound.
pub fn norm_upper(group: &Group, sigma: &Cocycle, f: &AlgebraElement, rounds: usize) -> f64 {
    let mut best = f.l1_norm();
    if f.is_zero() {
        return 0.0;
    }
    let mut h = twisted_convolution(group, sigma, &involution(group, sigma, f), f);
    let mut root = 2.0;
    for k in 0..=rounds {
        best = best.min(h.l1_norm().powf(1.0 / root) * (1.0 + 1e-12));
        if k == rounds || h.terms.len() > NORM_UPPER_MAX_SUPPORT {
            break;
        }
        h = twisted_convolution(group, sigma, &h, &h);
        root *= 2.0;
    }
    best
}

/// (f + f*)/2.
pub fn self_adjoint_part(group: &Group, sigma: &Cocycle, f: &AlgebraElement) -> AlgebraElement {
    f.add(group, &involution(group, sigma, f)).scale(group, C64::new(0.5, 0.0))
}

/// The canonical trace f ↦ f(identity).
pub fn trace(group: &Group, f: &AlgebraElement) -> C64 {
    f.get(&group.identity())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::twisted_algebra::cocycle::Cocycle;

    #[test]
    fn convolution_with_deltas() {
        let g = Group::solenoid(2, 2).unwrap();
        let s = Cocycle::bicharacter(&g, vec![vec![0.0, 0.3], vec![-0.3, 0.0]]).unwrap();
        let a = g.dyadic(&[(1, 1), (2, 0)]).unwrap();
        let b = g.dyadic(&[(3, 2), (-1, 1)]).unwrap();
        let prod = twisted_convolution(&g, &s, &AlgebraElement::delta(a.clone()), &AlgebraElement::delta(b.clone()));
        assert_eq!(prod.terms().len(), 1);
        assert_eq!(prod.terms()[0].0, g.op(&a, &b));
        assert!((prod.terms()[0].1 - s.eval(&a, &b)).norm() < 1e-15);
        let f = AlgebraElement::new(&g, vec![(a.clone(), C64::new(1.0, 2.0)), (b, C64::new(-0.5, 0.0))]);
        let e = AlgebraElement::delta(g.identity());
        assert_eq!(twisted_convolution(&g, &s, &f, &e), f);
        assert_eq!(trace(&g, &e), C64::new(1.0, 0.0));
        assert_eq!(trace(&g, &AlgebraElement::delta(a)), C64::new(0.0, 0.0));
    }

    #[test]
    fn norm_upper_sandwich() {
        let g = Group::solenoid(2, 1).unwrap();
        let s = Cocycle::trivial();
        let int = |k: i64| g.dyadic(&[(k, 0)]).unwrap();
        let d = AlgebraElement::delta(int(5));
        assert!((norm_upper(&g, &s, &d, 3) - 1.0).abs() < 1e-11);
        // 1 + z − z³ on the circle
        let f = AlgebraElement::new(&g, vec![(int(0), C64::new(1.0, 0.0)), (int(1), C64::new(1.0, 0.0)), (int(3), C64::new(-1.0, 0.0))]);
        let sup = (0..20000)
            .map(|j| {
                let t = std::f64::consts::TAU * j as f64 / 20000.0;
                (C64::new(1.0, 0.0) + C64::from_polar(1.0, t) - C64::from_polar(1.0, 3.0 * t)).norm()
            })
            .fold(0.0, f64::max);
        let up = norm_upper(&g, &s, &f, 4);
        assert!(sup <= up && up < 3.0, "{sup} {up}");
        assert_eq!(norm_upper(&g, &s, &AlgebraElement::zero(), 2), 0.0);
    }

    #[test]
    fn involution_is_antimultiplicative() {
        let g = Group::bunce_deddens(&[2, 6, 30]).unwrap();
        let s = Cocycle::bunce_deddens(&g).unwrap();
        let a = g.root(1, 2, 3).unwrap();
        let b = g.root(5, 3, -2).unwrap();
        let fa = AlgebraElement::new(&g, vec![(a.clone(), C64::new(0.3, 1.0)), (b.clone(), C64::new(1.0, 0.0))]);
        let fb = AlgebraElement::new(&g, vec![(b, C64::new(0.0, 2.0)), (g.identity(), C64::new(1.0, -1.0))]);
        let lhs = involution(&g, &s, &twisted_convolution(&g, &s, &fa, &fb));
        let rhs = twisted_convolution(&g, &s, &involution(&g, &s, &fb), &involution(&g, &s, &fa));
        for ((x, c), (y, d)) in lhs.terms().iter().zip(rhs.terms()) {
            assert_eq!(x, y);
            assert!((c - d).norm() < 1e-12);
        }
        let twice = involution(&g, &s, &involution(&g, &s, &fa));
        for ((x, c), (y, d)) in twice.terms().iter().zip(fa.terms()) {
            assert_eq!(x, y);
            assert!((c - d).norm() < 1e-12);
        }
    }
}

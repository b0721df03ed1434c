use num_bigint::BigUint;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::element::GroupElement;
use super::group::Group;
use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum VecNorm {
    #[default]
    Max,
    L1,
    Euclidean,
}

impl VecNorm {
    pub fn apply(&self, v: impl Iterator<Item = f64>) -> f64 {
        match self {
            VecNorm::Max => v.fold(0.0, |m, x| m.max(x.abs())),
            VecNorm::L1 => v.map(f64::abs).sum(),
            VecNorm::Euclidean => v.map(|x| x * x).sum::<f64>().sqrt(),
        }
    }
}

/// Length on the circle factor: arc length to 1, or the chord |1 − ζ|.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CircleMetric {
    #[default]
    Arc,
    Chord,
}

impl CircleMetric {
    /// Length of the rotation by `turns` ∈ [0, 1/2].
    pub fn of_turns(&self, turns: f64) -> f64 {
        match self {
            CircleMetric::Arc => 2.0 * PI * turns,
            CircleMetric::Chord => 2.0 * (PI * turns).sin(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scale {
    /// p^n for solenoids, α_n for towers, 1 for finite groups.
    #[default]
    FamilyDefault,
    Power { base: f64 },
    Affine { offset: f64, slope: f64 },
}

impl Scale {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Scale::FamilyDefault => Ok(()),
            Scale::Power { base } if base > 1.0 && base.is_finite() => Ok(()),
            Scale::Affine { offset, slope } if offset > 0.0 && slope > 0.0 => Ok(()),
            _ => Err(invalid("scale must be strictly increasing, unbounded and positive at 0")),
        }
    }

    pub fn at(&self, group: &Group, n: usize) -> f64 {
        match *self {
            Scale::FamilyDefault => match group {
                Group::Solenoid { p, .. } => (*p as f64).powi(n as i32),
                Group::RootsOfUnity { tower } | Group::BunceDeddens { tower } => tower.alpha_f64(n),
                Group::Finite { .. } => 1.0,
            },
            Scale::Power { base } => base.powi(n as i32),
            Scale::Affine { offset, slope } => offset + slope * n as f64,
        }
    }
}

/// A monotone norm on ℝ² used to combine two lengths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Combinator {
    Max,
    Sum,
    Euclidean,
    Lp { p: f64 },
    /// sqrt(m11 a² + 2 m12 ab + m22 b²); monotone only when m12 = 0.
    Quadratic { m11: f64, m12: f64, m22: f64 },
}

impl Combinator {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Combinator::Max | Combinator::Sum | Combinator::Euclidean => Ok(()),
            Combinator::Lp { p } if p >= 1.0 && p.is_finite() => Ok(()),
            Combinator::Lp { p } => Err(Error::NonMonotone(format!("l^{p} is not a norm"))),
            Combinator::Quadratic { m11, m12, m22 } => {
                if !(m11 > 0.0 && m22 > 0.0 && m11 * m22 > m12 * m12) {
                    Err(Error::NonMonotone("quadratic form is not positive definite".into()))
                } else if m12 != 0.0 {
                    Err(Error::NonMonotone(format!("cross term {m12} breaks monotonicity")))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn apply(&self, a: f64, b: f64) -> f64 {
        let (a, b) = (a.abs(), b.abs());
        match *self {
            Combinator::Max => a.max(b),
            Combinator::Sum => a + b,
            Combinator::Euclidean => a.hypot(b),
            Combinator::Lp { p } => (a.powf(p) + b.powf(p)).powf(1.0 / p),
            Combinator::Quadratic { m11, m12, m22 } => (m11 * a * a + 2.0 * m12 * a * b + m22 * b * b).sqrt(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LengthFunction {
    /// The "Hilbert" length: a norm of the embedded coordinates, or 𝕃_Z(ζ) + |z|.
    H {
        #[serde(default)]
        norm: VecNorm,
        #[serde(default)]
        circle: CircleMetric,
    },
    /// scale(level(g)), zero at the identity.
    F {
        #[serde(default)]
        scale: Scale,
    },
    Combined {
        a: Box<LengthFunction>,
        b: Box<LengthFunction>,
        comb: Combinator,
    },
}

impl LengthFunction {
    pub fn h(norm: VecNorm) -> Self {
        LengthFunction::H {
            norm,
            circle: CircleMetric::Arc,
        }
    }

    pub fn h_circle(circle: CircleMetric) -> Self {
        LengthFunction::H {
            norm: VecNorm::Max,
            circle,
        }
    }

    pub fn f() -> Self {
        LengthFunction::F {
            scale: Scale::FamilyDefault,
        }
    }

    pub fn combine(a: LengthFunction, b: LengthFunction, comb: Combinator) -> Result<Self> {
        comb.validate()?;
        a.validate()?;
        b.validate()?;
        Ok(LengthFunction::Combined {
            a: Box::new(a),
            b: Box::new(b),
            comb,
        })
    }

    /// max{𝕃_H, 𝔽} with the max-norm (the length used for ball counts).
    pub fn max_of(norm: VecNorm) -> Self {
        LengthFunction::Combined {
            a: Box::new(Self::h(norm)),
            b: Box::new(Self::f()),
            comb: Combinator::Max,
        }
    }

    pub fn sum_of(norm: VecNorm) -> Self {
        LengthFunction::Combined {
            a: Box::new(Self::h(norm)),
            b: Box::new(Self::f()),
            comb: Combinator::Sum,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            LengthFunction::H { .. } => Ok(()),
            LengthFunction::F { scale } => scale.validate(),
            LengthFunction::Combined { a, b, comb } => {
                comb.validate()?;
                a.validate()?;
                b.validate()
            }
        }
    }

    pub fn eval(&self, group: &Group, g: &GroupElement) -> f64 {
        match self {
            LengthFunction::H { norm, circle } => length_h(group, g, *norm, *circle),
            LengthFunction::F { scale } => length_f(group, g, scale),
            LengthFunction::Combined { a, b, comb } => comb.apply(a.eval(group, g), b.eval(group, g)),
        }
    }

    /// Evaluates from precomputed leaf values.
    pub(crate) fn eval_with(&self, h: &mut impl FnMut(VecNorm, CircleMetric) -> f64, f: &mut impl FnMut(&Scale) -> f64) -> f64 {
        match self {
            LengthFunction::H { norm, circle } => h(*norm, *circle),
            LengthFunction::F { scale } => f(scale),
            LengthFunction::Combined { a, b, comb } => {
                let x = a.eval_with(h, f);
                let y = b.eval_with(h, f);
                comb.apply(x, y)
            }
        }
    }

    /// Constants (c_H, c_F) with 𝕃 ≥ c_H·𝕃_H and 𝕃 ≥ c_F·𝔽 (zero when a leaf is absent).
    pub(crate) fn lower_constants(&self) -> (f64, f64) {
        match self {
            LengthFunction::H { .. } => (1.0, 0.0),
            LengthFunction::F { .. } => (0.0, 1.0),
            LengthFunction::Combined { a, b, comb } => {
                let e1 = comb.apply(1.0, 0.0);
                let e2 = comb.apply(0.0, 1.0);
                let (ah, af) = a.lower_constants();
                let (bh, bf) = b.lower_constants();
                ((e1 * ah).max(e2 * bh), (e1 * af).max(e2 * bf))
            }
        }
    }

    pub(crate) fn scales(&self) -> Vec<Scale> {
        match self {
            LengthFunction::H { .. } => vec![],
            LengthFunction::F { scale } => vec![*scale],
            LengthFunction::Combined { a, b, .. } => {
                let mut v = a.scales();
                v.extend(b.scales());
                v
            }
        }
    }

    pub fn is_proper(&self, group: &Group) -> bool {
        if group.is_finite() {
            return true;
        }
        let (ch, cf) = self.lower_constants();
        ch > 0.0 && cf > 0.0
    }

    /// First H leaf (norm, circle), if any.
    pub fn h_part(&self) -> Option<(VecNorm, CircleMetric)> {
        match self {
            LengthFunction::H { norm, circle } => Some((*norm, *circle)),
            LengthFunction::F { .. } => None,
            LengthFunction::Combined { a, b, .. } => a.h_part().or_else(|| b.h_part()),
        }
    }

    pub fn f_part(&self) -> Option<Scale> {
        self.scales().first().copied()
    }
}

/// Turns of ζ folded into [0, 1/2] (as an exact fraction converted at the end).
pub(crate) fn root_turns(residue: &BigUint, alpha: &BigUint) -> f64 {
    if residue.is_zero() {
        return 0.0;
    }
    let other = alpha - residue;
    let m = if &other < residue { other } else { residue.clone() };
    ratio_f64(&m, alpha)
}

pub(crate) fn ratio_f64(a: &BigUint, b: &BigUint) -> f64 {
    match (a.to_f64(), b.to_f64()) {
        (Some(x), Some(y)) if y.is_finite() && x.is_finite() => x / y,
        _ => {
            let shift = b.bits().saturating_sub(60);
            let x = (a >> shift).to_f64().unwrap_or(0.0);
            let y = (b >> shift).to_f64().unwrap_or(1.0);
            x / y
        }
    }
}

pub fn length_h(group: &Group, g: &GroupElement, norm: VecNorm, circle: CircleMetric) -> f64 {
    match (group, g) {
        (Group::Solenoid { p, .. }, GroupElement::Solenoid { coords, .. }) => {
            norm.apply(coords.iter().map(|c| c.to_f64(*p)))
        }
        (Group::RootsOfUnity { tower } | Group::BunceDeddens { tower }, GroupElement::Root { root, z }) => {
            let alpha = &tower.alpha(root.level as usize).expect("root level within tower");
            circle.of_turns(root_turns(&root.residue, alpha)) + z.abs().to_f64().unwrap_or(f64::INFINITY)
        }
        (Group::Finite { moduli }, GroupElement::Finite(r)) => {
            norm.apply(r.iter().zip(moduli).map(|(&x, &m)| x.min(m - x) as f64))
        }
        _ => panic!("length of an element of another family"),
    }
}

pub fn length_f(group: &Group, g: &GroupElement, scale: &Scale) -> f64 {
    if g.is_identity() {
        0.0
    } else {
        scale.at(group, group.level(g))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn f_values() {
        let g = Group::solenoid(2, 2).unwrap();
        let f = LengthFunction::f();
        assert_eq!(f.eval(&g, &g.identity()), 0.0);
        assert_eq!(f.eval(&g, &g.dyadic(&[(1, 2), (0, 0)]).unwrap()), 4.0);
        assert_eq!(f.eval(&g, &g.dyadic(&[(3, 0), (-1, 0)]).unwrap()), 1.0);
        let z = Group::roots_of_unity(&[2, 4, 8]).unwrap();
        assert_eq!(f.eval(&z, &z.root(1, 2, 0).unwrap()), 4.0);
        assert_eq!(f.eval(&z, &z.root(3, 2, 0).unwrap()), 4.0);
    }

    #[test]
    fn h_values() {
        let g = Group::solenoid(2, 2).unwrap();
        let h = LengthFunction::h(VecNorm::Max);
        assert_eq!(h.eval(&g, &g.dyadic(&[(3, 0), (-1, 0)]).unwrap()), 3.0);
        assert_eq!(h.eval(&g, &g.dyadic(&[(1, 1), (1, 1)]).unwrap()), 0.5);
        let bd = Group::bunce_deddens(&[2, 4, 8]).unwrap();
        let v = h.eval(&bd, &bd.root(1, 1, 2).unwrap());
        assert!((v - (PI + 2.0)).abs() < 1e-15);
        let c = LengthFunction::h_circle(CircleMetric::Chord);
        assert!((c.eval(&bd, &bd.root(1, 1, 0).unwrap()) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn combinators() {
        assert_eq!(Combinator::Max.apply(3.0, 4.0), 4.0);
        assert_eq!(Combinator::Sum.apply(3.0, 4.0), 7.0);
        assert_eq!(Combinator::Euclidean.apply(3.0, 4.0), 5.0);
        assert!(Combinator::Quadratic { m11: 1.0, m12: -0.5, m22: 1.0 }.validate().is_err());
        assert!(Combinator::Quadratic { m11: 2.0, m12: 0.0, m22: 1.0 }.validate().is_ok());
        assert!(Combinator::Lp { p: 0.5 }.validate().is_err());
        assert!(LengthFunction::combine(LengthFunction::h(VecNorm::Max), LengthFunction::f(), Combinator::Lp { p: 0.5 }).is_err());
    }

    #[test]
    fn properness() {
        let g = Group::solenoid(2, 1).unwrap();
        assert!(!LengthFunction::h(VecNorm::Max).is_proper(&g));
        assert!(!LengthFunction::f().is_proper(&g));
        assert!(LengthFunction::max_of(VecNorm::Max).is_proper(&g));
        assert!(LengthFunction::h(VecNorm::Max).is_proper(&Group::finite(&[4]).unwrap()));
    }

    fn check_length_axioms(group: &Group, len: &LengthFunction, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..500 {
            let a = group.sample(&mut rng, 3, 4);
            let b = group.sample(&mut rng, 3, 4);
            let ab = group.op(&a, &b);
            let (la, lb, lab) = (len.eval(group, &a), len.eval(group, &b), len.eval(group, &ab));
            assert!(lab <= la + lb + 1e-12, "subadditivity {a} {b}");
            assert!((len.eval(group, &group.inverse(&a)) - la).abs() < 1e-12);
            assert_eq!(la == 0.0, a.is_identity());
            let f = LengthFunction::f();
            assert!(f.eval(group, &ab) <= f.eval(group, &a).max(f.eval(group, &b)));
        }
    }

    #[test]
    fn length_axioms_random() {
        for comb in [Combinator::Max, Combinator::Sum, Combinator::Euclidean, Combinator::Lp { p: 3.0 }] {
            for norm in [VecNorm::Max, VecNorm::L1, VecNorm::Euclidean] {
                let len = LengthFunction::combine(LengthFunction::h(norm), LengthFunction::f(), comb.clone()).unwrap();
                check_length_axioms(&Group::solenoid(2, 2).unwrap(), &len, 1);
                check_length_axioms(&Group::solenoid(3, 1).unwrap(), &len, 2);
            }
            for circle in [CircleMetric::Arc, CircleMetric::Chord] {
                let len = LengthFunction::combine(LengthFunction::h_circle(circle), LengthFunction::f(), comb.clone()).unwrap();
                check_length_axioms(&Group::bunce_deddens(&[2, 6, 30, 210]).unwrap(), &len, 3);
                check_length_axioms(&Group::roots_of_unity(&[3, 9, 27]).unwrap(), &len, 4);
            }
        }
    }
}

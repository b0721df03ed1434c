use std::cmp::Ordering;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::element::{parse_p_rational, GroupElement, PRational, RootOfUnity};
use crate::error::{invalid, Error, Result};

/// Divisibility tower 1 = α_0 | α_1 | α_2 | … with prime ratios.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tower {
    alpha: Vec<BigUint>,
}

fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

impl Tower {
    /// Builds the tower from (α_1, α_2, …); α_0 = 1 is implicit.
    pub fn new(prefix: &[u64]) -> Result<Self> {
        if prefix.is_empty() {
            return Err(invalid("tower needs at least one entry"));
        }
        let mut alpha = vec![BigUint::from(1u32)];
        let mut prev = 1u64;
        for &a in prefix {
            if a == 0 || a % prev != 0 {
                return Err(invalid(format!("tower entry {a} is not a multiple of {prev}")));
            }
            if !is_prime_u64(a / prev) {
                return Err(invalid(format!("ratio {}/{} is not prime", a, prev)));
            }
            alpha.push(BigUint::from(a));
            prev = a;
        }
        Ok(Tower { alpha })
    }

    /// Number of known levels above 0.
    pub fn depth(&self) -> usize {
        self.alpha.len() - 1
    }

    pub fn alpha(&self, n: usize) -> Result<&BigUint> {
        self.alpha.get(n).ok_or(Error::TowerTooShort {
            level: n,
            known: self.depth(),
        })
    }

    pub fn alpha_f64(&self, n: usize) -> f64 {
        self.alpha
            .get(n)
            .and_then(|a| a.to_f64())
            .unwrap_or(f64::INFINITY)
    }

    pub fn prefix(&self) -> Vec<u64> {
        self.alpha[1..].iter().map(|a| a.to_u64().unwrap_or(u64::MAX)).collect()
    }

    /// Prime ratio α_n / α_{n-1}.
    pub fn ratio(&self, n: usize) -> BigUint {
        &self.alpha[n] / &self.alpha[n - 1]
    }
}

impl Serialize for Tower {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.prefix().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Tower {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<u64>::deserialize(d)?;
        Tower::new(&v).map_err(serde::de::Error::custom)
    }
}

/// The inductive-limit groups handled by the library.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Group {
    /// ℤ[1/p]^d with G_n = (p^{-n}ℤ)^d.
    Solenoid { p: u32, d: usize },
    /// ℤ(α) with G_n the α_n-th roots of unity.
    RootsOfUnity { tower: Tower },
    /// ℤ(α)×ℤ with G_n = μ_{α_n}×ℤ.
    BunceDeddens { tower: Tower },
    /// ℤ/N_1 × … × ℤ/N_k, all of it at level 0.
    Finite { moduli: Vec<u64> },
}

impl Group {
    pub fn solenoid(p: u32, d: usize) -> Result<Self> {
        if !is_prime_u64(p as u64) {
            return Err(invalid(format!("p = {p} is not prime")));
        }
        if d == 0 {
            return Err(invalid("rank d must be positive"));
        }
        Ok(Group::Solenoid { p, d })
    }

    pub fn roots_of_unity(prefix: &[u64]) -> Result<Self> {
        Ok(Group::RootsOfUnity {
            tower: Tower::new(prefix)?,
        })
    }

    pub fn bunce_deddens(prefix: &[u64]) -> Result<Self> {
        Ok(Group::BunceDeddens {
            tower: Tower::new(prefix)?,
        })
    }

    pub fn finite(moduli: &[u64]) -> Result<Self> {
        if moduli.is_empty() || moduli.iter().any(|&m| m == 0) {
            return Err(invalid("finite test group needs positive moduli"));
        }
        Ok(Group::Finite {
            moduli: moduli.to_vec(),
        })
    }

    pub fn tower(&self) -> Option<&Tower> {
        match self {
            Group::RootsOfUnity { tower } | Group::BunceDeddens { tower } => Some(tower),
            _ => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Group::Finite { .. })
    }

    pub fn identity(&self) -> GroupElement {
        match self {
            Group::Solenoid { p, d } => GroupElement::Solenoid {
                p: *p,
                coords: vec![PRational::zero(); *d],
            },
            Group::RootsOfUnity { .. } | Group::BunceDeddens { .. } => GroupElement::Root {
                root: RootOfUnity::one(),
                z: BigInt::zero(),
            },
            Group::Finite { moduli } => GroupElement::Finite(vec![0; moduli.len()]),
        }
    }

    /// Checks that an element belongs to this group and is in canonical form.
    pub fn check(&self, g: &GroupElement) -> Result<()> {
        let bad = |m: &str| Err(Error::FamilyMismatch(format!("{g}: {m}")));
        match (self, g) {
            (Group::Solenoid { p, d }, GroupElement::Solenoid { p: q, coords }) => {
                if p != q || coords.len() != *d {
                    return bad("wrong prime or rank");
                }
                for c in coords {
                    if *c != PRational::new(c.num.clone(), c.exp, *p) {
                        return bad("coordinate not reduced");
                    }
                }
                Ok(())
            }
            (Group::RootsOfUnity { tower } | Group::BunceDeddens { tower }, GroupElement::Root { root, z }) => {
                if matches!(self, Group::RootsOfUnity { .. }) && !z.is_zero() {
                    return bad("roots of unity carry no integer part");
                }
                let lvl = root.level as usize;
                let a = tower.alpha(lvl)?;
                if root.residue >= *a {
                    return bad("residue out of range");
                }
                if lvl > 0 && (&root.residue % tower.ratio(lvl)).is_zero() {
                    return bad("root not stored at minimal level");
                }
                if lvl == 0 && !root.residue.is_zero() {
                    return bad("level 0 root must be 1");
                }
                Ok(())
            }
            (Group::Finite { moduli }, GroupElement::Finite(r)) => {
                if r.len() != moduli.len() || r.iter().zip(moduli).any(|(x, m)| x >= m) {
                    return bad("residue out of range");
                }
                Ok(())
            }
            _ => bad("element from another family"),
        }
    }

    fn make_root(&self, tower: &Tower, mut residue: BigUint, mut level: u32) -> RootOfUnity {
        while level > 0 {
            let q = tower.ratio(level as usize);
            let (d, r) = residue.div_rem(&q);
            if !r.is_zero() {
                break;
            }
            residue = d;
            level -= 1;
        }
        if level == 0 {
            residue = BigUint::zero();
        }
        RootOfUnity { residue, level }
    }

    /// Builds ζ = exp(2πi·residue/α_level) in canonical form.
    pub fn root(&self, residue: u64, level: u32, z: i64) -> Result<GroupElement> {
        let tower = self
            .tower()
            .ok_or_else(|| Error::FamilyMismatch("not a roots-of-unity family".into()))?;
        let a = tower.alpha(level as usize)?;
        let r = BigUint::from(residue) % a;
        if matches!(self, Group::RootsOfUnity { .. }) && z != 0 {
            return Err(invalid("roots of unity carry no integer part"));
        }
        Ok(GroupElement::Root {
            root: self.make_root(tower, r, level),
            z: BigInt::from(z),
        })
    }

    /// Builds a solenoid element from (numerator, exponent) pairs.
    pub fn dyadic(&self, coords: &[(i64, u32)]) -> Result<GroupElement> {
        match self {
            Group::Solenoid { p, d } => {
                if coords.len() != *d {
                    return Err(invalid(format!("expected {d} coordinates")));
                }
                Ok(GroupElement::Solenoid {
                    p: *p,
                    coords: coords
                        .iter()
                        .map(|&(a, n)| PRational::new(BigInt::from(a), n, *p))
                        .collect(),
                })
            }
            _ => Err(Error::FamilyMismatch("not a solenoid".into())),
        }
    }

    /// Parses "5/8, 1/2" (solenoid), "3/8; 2" or "3@2; 2" (roots: residue over α, or residue at level, then z), "1, 2" (finite).
    pub fn parse_element(&self, text: &str) -> Result<GroupElement> {
        let err = || invalid(format!("cannot parse element `{text}`"));
        match self {
            Group::Solenoid { p, d } => {
                let coords: Option<Vec<PRational>> =
                    text.split(',').map(|s| parse_p_rational(s, *p)).collect();
                let coords = coords.ok_or_else(err)?;
                if coords.len() != *d {
                    return Err(err());
                }
                Ok(GroupElement::Solenoid { p: *p, coords })
            }
            Group::RootsOfUnity { tower } | Group::BunceDeddens { tower } => {
                let (zeta, z) = match text.split_once(';') {
                    Some((a, b)) => (a.trim(), b.trim().parse::<i64>().map_err(|_| err())?),
                    None => (text.trim(), 0),
                };
                let (res, level) = if let Some((r, l)) = zeta.split_once('@') {
                    let l: u32 = l.trim().parse().map_err(|_| err())?;
                    (r.trim().parse::<u64>().map_err(|_| err())?, l)
                } else if let Some((r, a)) = zeta.split_once('/') {
                    let r: u64 = r.trim().parse().map_err(|_| err())?;
                    let a: u64 = a.trim().parse().map_err(|_| err())?;
                    let lvl = (0..=tower.depth())
                        .find(|&n| tower.alpha(n).map(|x| *x == BigUint::from(a)).unwrap_or(false))
                        .ok_or_else(err)?;
                    (r, lvl as u32)
                } else {
                    let r: u64 = zeta.parse().map_err(|_| err())?;
                    if r != 0 {
                        return Err(err());
                    }
                    (0, 0)
                };
                self.root(res, level, z)
            }
            Group::Finite { moduli } => {
                let r: std::result::Result<Vec<u64>, _> = text.split(',').map(|s| s.trim().parse::<u64>()).collect();
                let r = r.map_err(|_| err())?;
                if r.len() != moduli.len() {
                    return Err(err());
                }
                Ok(GroupElement::Finite(r.iter().zip(moduli).map(|(x, m)| x % m).collect()))
            }
        }
    }

    pub fn op(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        match (self, a, b) {
            (Group::Solenoid { p, .. }, GroupElement::Solenoid { coords: x, .. }, GroupElement::Solenoid { coords: y, .. }) => {
                GroupElement::Solenoid {
                    p: *p,
                    coords: x.iter().zip(y).map(|(u, v)| u.add(v, *p)).collect(),
                }
            }
            (
                Group::RootsOfUnity { tower } | Group::BunceDeddens { tower },
                GroupElement::Root { root: r1, z: z1 },
                GroupElement::Root { root: r2, z: z2 },
            ) => {
                let lvl = r1.level.max(r2.level);
                let top = &tower.alpha[lvl as usize];
                let s1 = &r1.residue * (top / &tower.alpha[r1.level as usize]);
                let s2 = &r2.residue * (top / &tower.alpha[r2.level as usize]);
                GroupElement::Root {
                    root: self.make_root(tower, (s1 + s2) % top, lvl),
                    z: z1 + z2,
                }
            }
            (Group::Finite { moduli }, GroupElement::Finite(x), GroupElement::Finite(y)) => {
                GroupElement::Finite(x.iter().zip(y).zip(moduli).map(|((u, v), m)| (u + v) % m).collect())
            }
            _ => panic!("group operation on elements of another family"),
        }
    }

    pub fn inverse(&self, a: &GroupElement) -> GroupElement {
        match (self, a) {
            (Group::Solenoid { p, .. }, GroupElement::Solenoid { coords, .. }) => GroupElement::Solenoid {
                p: *p,
                coords: coords.iter().map(|c| c.neg()).collect(),
            },
            (Group::RootsOfUnity { tower } | Group::BunceDeddens { tower }, GroupElement::Root { root, z }) => {
                let a = &tower.alpha[root.level as usize];
                let res = if root.residue.is_zero() {
                    BigUint::zero()
                } else {
                    a - &root.residue
                };
                GroupElement::Root {
                    root: RootOfUnity {
                        residue: res,
                        level: root.level,
                    },
                    z: -z,
                }
            }
            (Group::Finite { moduli }, GroupElement::Finite(x)) => {
                GroupElement::Finite(x.iter().zip(moduli).map(|(u, m)| (m - u) % m).collect())
            }
            _ => panic!("inverse of an element of another family"),
        }
    }

    /// Smallest n with g ∈ G_n.
    pub fn level(&self, g: &GroupElement) -> usize {
        match g {
            GroupElement::Solenoid { coords, .. } => coords.iter().map(|c| c.exp).max().unwrap_or(0) as usize,
            GroupElement::Root { root, .. } => root.level as usize,
            GroupElement::Finite(_) => 0,
        }
    }

    pub fn in_level(&self, g: &GroupElement, n: usize) -> bool {
        self.level(g) <= n
    }

    /// Canonical order: level first, then coordinates by value.
    pub fn cmp(&self, a: &GroupElement, b: &GroupElement) -> Ordering {
        let la = self.level(a);
        let lb = self.level(b);
        if la != lb {
            return la.cmp(&lb);
        }
        match (a, b) {
            (GroupElement::Solenoid { p, coords: x }, GroupElement::Solenoid { coords: y, .. }) => {
                for (u, v) in x.iter().zip(y) {
                    let o = u.cmp_value(v, *p);
                    if o != Ordering::Equal {
                        return o;
                    }
                }
                Ordering::Equal
            }
            (GroupElement::Root { root: r1, z: z1 }, GroupElement::Root { root: r2, z: z2 }) => {
                r1.residue.cmp(&r2.residue).then_with(|| z1.cmp(z2))
            }
            (GroupElement::Finite(x), GroupElement::Finite(y)) => x.cmp(y),
            _ => panic!("comparison across families"),
        }
    }

    /// Random element with level ≤ max_level and coordinates bounded by `bound`.
    pub fn sample<R: Rng>(&self, rng: &mut R, max_level: usize, bound: i64) -> GroupElement {
        match self {
            Group::Solenoid { p, d } => {
                let coords = (0..*d)
                    .map(|_| {
                        let n = rng.gen_range(0..=max_level as u32);
                        let scale = (*p as i64).pow(n);
                        let a = rng.gen_range(-bound * scale..=bound * scale);
                        PRational::new(BigInt::from(a), n, *p)
                    })
                    .collect();
                GroupElement::Solenoid { p: *p, coords }
            }
            Group::RootsOfUnity { tower } | Group::BunceDeddens { tower } => {
                let lvl = rng.gen_range(0..=max_level.min(tower.depth()));
                let a = tower.alpha[lvl].to_u64().unwrap_or(u64::MAX);
                let r = rng.gen_range(0..a);
                let z = if matches!(self, Group::BunceDeddens { .. }) {
                    rng.gen_range(-bound..=bound)
                } else {
                    0
                };
                GroupElement::Root {
                    root: self.make_root(tower, BigUint::from(r), lvl as u32),
                    z: BigInt::from(z),
                }
            }
            Group::Finite { moduli } => GroupElement::Finite(moduli.iter().map(|&m| rng.gen_range(0..m)).collect()),
        }
    }

    /// Exponent base used by log-scale plots: p for solenoids, 2 otherwise.
    pub fn log_base(&self) -> f64 {
        match self {
            Group::Solenoid { p, .. } => *p as f64,
            _ => 2.0,
        }
    }

    pub fn alpha_f64(&self, n: u32) -> f64 {
        self.tower().map(|t| t.alpha_f64(n as usize)).unwrap_or(1.0)
    }
}

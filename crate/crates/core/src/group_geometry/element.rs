use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// A rational a/p^n kept in lowest p-terms: either n = 0 or p does not divide a.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PRational {
    pub num: BigInt,
    pub exp: u32,
}

impl PRational {
    pub fn new(num: BigInt, exp: u32, p: u32) -> Self {
        let mut r = PRational { num, exp };
        r.reduce(p);
        r
    }

    pub fn zero() -> Self {
        PRational {
            num: BigInt::zero(),
            exp: 0,
        }
    }

    fn reduce(&mut self, p: u32) {
        if self.num.is_zero() {
            self.exp = 0;
            return;
        }
        let pb = BigInt::from(p);
        while self.exp > 0 {
            let (q, r) = self.num.div_rem(&pb);
            if !r.is_zero() {
                break;
            }
            self.num = q;
            self.exp -= 1;
        }
    }

    pub fn add(&self, other: &PRational, p: u32) -> PRational {
        let e = self.exp.max(other.exp);
        let a = &self.num * BigInt::from(p).pow(e - self.exp);
        let b = &other.num * BigInt::from(p).pow(e - other.exp);
        PRational::new(a + b, e, p)
    }

    pub fn neg(&self) -> PRational {
        PRational {
            num: -&self.num,
            exp: self.exp,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn to_f64(&self, p: u32) -> f64 {
        let n = self.num.to_f64().unwrap_or(f64::INFINITY);
        n / (p as f64).powi(self.exp as i32)
    }

    /// Numerator scaled to the common denominator p^e (requires e >= exp).
    pub fn numerator_at(&self, e: u32, p: u32) -> BigInt {
        &self.num * BigInt::from(p).pow(e - self.exp)
    }

    pub fn cmp_value(&self, other: &PRational, p: u32) -> Ordering {
        let e = self.exp.max(other.exp);
        self.numerator_at(e, p).cmp(&other.numerator_at(e, p))
    }

    pub fn fmt_with(&self, p: u32) -> String {
        if self.exp == 0 {
            self.num.to_string()
        } else {
            format!("{}/{}", self.num, BigInt::from(p).pow(self.exp))
        }
    }
}

/// ζ = exp(2πi·residue/α_level), stored at the minimal level.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RootOfUnity {
    pub residue: BigUint,
    pub level: u32,
}

impl RootOfUnity {
    pub fn one() -> Self {
        RootOfUnity {
            residue: BigUint::zero(),
            level: 0,
        }
    }

    pub fn is_one(&self) -> bool {
        self.residue.is_zero()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum GroupElement {
    Solenoid { p: u32, coords: Vec<PRational> },
    Root { root: RootOfUnity, z: BigInt },
    Finite(Vec<u64>),
}

impl GroupElement {
    pub fn is_identity(&self) -> bool {
        match self {
            GroupElement::Solenoid { coords, .. } => coords.iter().all(|c| c.is_zero()),
            GroupElement::Root { root, z } => root.is_one() && z.is_zero(),
            GroupElement::Finite(r) => r.iter().all(|&x| x == 0),
        }
    }

    /// Coordinates as floats (solenoid coordinates, or (turns, z) for roots).
    pub fn coords_f64(&self, alpha_at: impl Fn(u32) -> f64) -> Vec<f64> {
        match self {
            GroupElement::Solenoid { p, coords } => coords.iter().map(|c| c.to_f64(*p)).collect(),
            GroupElement::Root { root, z } => {
                let a = alpha_at(root.level);
                vec![
                    root.residue.to_f64().unwrap_or(f64::NAN) / a,
                    z.to_f64().unwrap_or(f64::NAN),
                ]
            }
            GroupElement::Finite(r) => r.iter().map(|&x| x as f64).collect(),
        }
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupElement::Solenoid { p, coords } => {
                let parts: Vec<String> = coords.iter().map(|c| c.fmt_with(*p)).collect();
                write!(f, "({})", parts.join(", "))
            }
            GroupElement::Root { root, z } => {
                if root.level == 0 {
                    write!(f, "(zeta=0@0; z={})", z)
                } else {
                    write!(f, "(zeta={}@{}; z={})", root.residue, root.level, z)
                }
            }
            GroupElement::Finite(r) => {
                let parts: Vec<String> = r.iter().map(|x| x.to_string()).collect();
                write!(f, "[{}]", parts.join(", "))
            }
        }
    }
}

/// Serialized form: a flat record with string coordinates so that big integers survive.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ElementRecord {
    Solenoid { p: u32, coords: Vec<String> },
    Root { residue: String, level: u32, z: String },
    Finite { residues: Vec<u64> },
}

impl From<&GroupElement> for ElementRecord {
    fn from(g: &GroupElement) -> Self {
        match g {
            GroupElement::Solenoid { p, coords } => ElementRecord::Solenoid {
                p: *p,
                coords: coords.iter().map(|c| c.fmt_with(*p)).collect(),
            },
            GroupElement::Root { root, z } => ElementRecord::Root {
                residue: root.residue.to_string(),
                level: root.level,
                z: z.to_string(),
            },
            GroupElement::Finite(r) => ElementRecord::Finite {
                residues: r.clone(),
            },
        }
    }
}

impl Serialize for GroupElement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ElementRecord::from(self).serialize(s)
    }
}

/// Parses "a" or "a/b" where b must be a power of p.
pub(crate) fn parse_p_rational(text: &str, p: u32) -> Option<PRational> {
    let text = text.trim();
    let (num, den) = match text.split_once('/') {
        Some((a, b)) => (a.trim().parse::<BigInt>().ok()?, b.trim().parse::<BigInt>().ok()?),
        None => (text.parse::<BigInt>().ok()?, BigInt::one()),
    };
    if !den.is_positive() {
        return None;
    }
    let pb = BigInt::from(p);
    let mut d = den;
    let mut exp = 0u32;
    while d > BigInt::one() {
        let (q, r) = d.div_rem(&pb);
        if !r.is_zero() {
            return None;
        }
        d = q;
        exp += 1;
    }
    Some(PRational::new(num, exp, p))
}

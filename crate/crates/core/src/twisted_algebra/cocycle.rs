use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group_geometry::{Group, GroupElement, PRational};
use crate::linalg::C64;

/// exp(2πi·turns), reducing the argument first.
pub fn phase(turns: f64) -> C64 {
    let t = turns - turns.floor();
    C64::from_polar(1.0, 2.0 * std::f64::consts::PI * t)
}

pub type CocycleFn = dyn Fn(&GroupElement, &GroupElement) -> C64 + Send + Sync;

/// Serializable cocycle choice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CocycleSpec {
    #[default]
    Trivial,
    /// exp(2πi·xᵀΘy) for a skew-symmetric Θ.
    Bicharacter { theta: Vec<Vec<f64>> },
    /// σ((ζ,z),(η,y)) = η^z.
    BunceDeddens,
}

#[derive(Clone)]
pub struct Cocycle {
    spec: Option<CocycleSpec>,
    name: String,
    eval: Arc<CocycleFn>,
}

impl fmt::Debug for Cocycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Cocycle({})", self.name)
    }
}

/// x_j·y_k as exact turns modulo 1 when both are p-rationals, before weighting by θ.
fn product_f64(a: &PRational, b: &PRational, p: u32) -> f64 {
    let num = &a.num * &b.num;
    let den = BigInt::from(p).pow(a.exp + b.exp);
    let (q, r) = num.div_mod_floor(&den);
    q.to_f64().unwrap_or(0.0) + r.to_f64().unwrap_or(0.0) / den.to_f64().unwrap_or(f64::INFINITY)
}

impl Cocycle {
    pub fn trivial() -> Self {
        Cocycle {
            spec: Some(CocycleSpec::Trivial),
            name: "trivial".into(),
            eval: Arc::new(|_, _| C64::new(1.0, 0.0)),
        }
    }

    pub fn from_spec(spec: &CocycleSpec, group: &Group) -> Result<Self> {
        match spec {
            CocycleSpec::Trivial => Ok(Self::trivial()),
            CocycleSpec::Bicharacter { theta } => Self::bicharacter(group, theta.clone()),
            CocycleSpec::BunceDeddens => Self::bunce_deddens(group),
        }
    }

    /// σ(x, y) = exp(2πi Σ θ_jk x_j y_k); Θ must be skew so that σ(g, g⁻¹) = 1.
    pub fn bicharacter(group: &Group, theta: Vec<Vec<f64>>) -> Result<Self> {
        let d = match group {
            Group::Solenoid { d, .. } => *d,
            Group::Finite { moduli } => moduli.len(),
            _ => return Err(Error::Cocycle("bicharacter needs a solenoid or finite group".into())),
        };
        if theta.len() != d || theta.iter().any(|r| r.len() != d) {
            return Err(Error::Cocycle(format!("Θ must be {d}×{d}")));
        }
        for j in 0..d {
            for k in 0..d {
                if theta[j][k] != -theta[k][j] {
                    return Err(Error::Cocycle("Θ is not skew-symmetric".into()));
                }
            }
        }
        let th = theta.clone();
        let eval: Arc<CocycleFn> = Arc::new(move |x: &GroupElement, y: &GroupElement| match (x, y) {
            (GroupElement::Solenoid { p, coords: a }, GroupElement::Solenoid { coords: b, .. }) => {
                let mut t = 0.0;
                for (j, aj) in a.iter().enumerate() {
                    for (k, bk) in b.iter().enumerate() {
                        if th[j][k] != 0.0 && !aj.is_zero() && !bk.is_zero() {
                            let prod = product_f64(aj, bk, *p);
                            t += th[j][k] * prod;
                        }
                    }
                }
                phase(t)
            }
            (GroupElement::Finite(a), GroupElement::Finite(b)) => {
                let mut t = 0.0;
                for (j, &aj) in a.iter().enumerate() {
                    for (k, &bk) in b.iter().enumerate() {
                        t += th[j][k] * (aj * bk) as f64;
                    }
                }
                phase(t)
            }
            _ => panic!("bicharacter applied to another family"),
        });
        let c = Cocycle {
            spec: Some(CocycleSpec::Bicharacter { theta }),
            name: "bicharacter".into(),
            eval,
        };
        c.validate(group, 1000, 0xC0C1)?;
        c.check_inverse_trivial(group, 200)?;
        Ok(c)
    }

    pub fn bunce_deddens(group: &Group) -> Result<Self> {
        let tower = match group {
            Group::BunceDeddens { tower } | Group::RootsOfUnity { tower } => tower.clone(),
            _ => return Err(Error::Cocycle("needs a ℤ(α)×ℤ family".into())),
        };
        let eval: Arc<CocycleFn> = Arc::new(move |x: &GroupElement, y: &GroupElement| match (x, y) {
            (GroupElement::Root { z, .. }, GroupElement::Root { root: eta, .. }) => {
                if z.is_zero() || eta.residue.is_zero() {
                    return C64::new(1.0, 0.0);
                }
                let a = BigInt::from(tower.alpha(eta.level as usize).expect("level in tower").clone());
                let r = (BigInt::from(eta.residue.clone()) * z).mod_floor(&a);
                phase(r.to_f64().unwrap_or(0.0) / a.to_f64().unwrap_or(f64::INFINITY))
            }
            _ => panic!("Bunce-Deddens cocycle applied to another family"),
        });
        let c = Cocycle {
            spec: Some(CocycleSpec::BunceDeddens),
            name: "bunce-deddens".into(),
            eval,
        };
        c.validate(group, 1000, 0xB0DD)?;
        Ok(c)
    }

    /// A user-supplied evaluator, checked on random triples before use.
    pub fn custom(group: &Group, name: &str, f: impl Fn(&GroupElement, &GroupElement) -> C64 + Send + Sync + 'static) -> Result<Self> {
        let c = Cocycle {
            spec: None,
            name: name.into(),
            eval: Arc::new(f),
        };
        c.validate(group, 1000, 0xC057)?;
        Ok(c)
    }

    /// σ'(g,h) = σ(g,h)·u(g)u(h)/u(gh), a cohomologous cocycle.
    pub fn twisted_by(&self, group: &Group, u: impl Fn(&GroupElement) -> C64 + Send + Sync + 'static) -> Result<Self> {
        let base = self.eval.clone();
        let g = group.clone();
        let c = Cocycle {
            spec: None,
            name: format!("{}·δu", self.name),
            eval: Arc::new(move |a, b| base(a, b) * u(a) * u(b) / u(&g.op(a, b))),
        };
        c.validate(group, 300, 0x7715)?;
        Ok(c)
    }

    pub fn spec(&self) -> Option<&CocycleSpec> {
        self.spec.as_ref()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, g: &GroupElement, h: &GroupElement) -> C64 {
        (self.eval)(g, h)
    }

    /// Randomized check of the cocycle identity, normalization and |σ| = 1.
    pub fn validate(&self, group: &Group, samples: usize, seed: u64) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = group.identity();
        let tol = 1e-12;
        for _ in 0..samples {
            let g = group.sample(&mut rng, 3, 6);
            let h = group.sample(&mut rng, 3, 6);
            let k = group.sample(&mut rng, 3, 6);
            let s = self.eval(&g, &h);
            if (s.norm() - 1.0).abs() > tol {
                return Err(Error::Cocycle(format!("|σ({g}, {h})| ≠ 1")));
            }
            let lhs = s * self.eval(&group.op(&g, &h), &k);
            let rhs = self.eval(&g, &group.op(&h, &k)) * self.eval(&h, &k);
            if (lhs - rhs).norm() > tol {
                return Err(Error::Cocycle(format!("identity fails at ({g}, {h}, {k})")));
            }
            if (self.eval(&g, &e) - 1.0).norm() > tol || (self.eval(&e, &g) - 1.0).norm() > tol {
                return Err(Error::Cocycle(format!("not normalized at {g}")));
            }
        }
        Ok(())
    }

    fn check_inverse_trivial(&self, group: &Group, samples: usize) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x1417);
        for _ in 0..samples {
            let g = group.sample(&mut rng, 3, 6);
            if (self.eval(&g, &group.inverse(&g)) - 1.0).norm() > 1e-12 {
                return Err(Error::Cocycle(format!("σ(g, g⁻¹) ≠ 1 at {g}")));
            }
        }
        Ok(())
    }
}

use serde::Serialize;

use super::lp::LinearProgram;
use crate::error::{Error, Result};

/// Polyhedral seminorm on functions over a finite point set.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Seminorm {
    /// max_i |⟨c_i, f⟩| for sparse forms c_i.
    Forms(Vec<Vec<(usize, f64)>>),
    /// max |f(x) − f(y)|/d(x,y) over the retained pairs of a point subset.
    Metric { pairs: Vec<(usize, usize, f64)> },
    /// Σ w_i L_i.
    Sum(Vec<(f64, Seminorm)>),
    Max(Vec<Seminorm>),
    Scaled(f64, Box<Seminorm>),
}

/// Right-hand side `constant + coef·t` of a constraint `L(f) ≤ …`.
#[derive(Clone, Copy, Debug)]
pub struct Bound {
    pub var: Option<usize>,
    pub coef: f64,
    pub constant: f64,
}

impl Bound {
    pub fn constant(c: f64) -> Self {
        Bound {
            var: None,
            coef: 0.0,
            constant: c,
        }
    }

    pub fn var(v: usize) -> Self {
        Bound {
            var: Some(v),
            coef: 1.0,
            constant: 0.0,
        }
    }

    fn scaled(self, s: f64) -> Self {
        Bound {
            var: self.var,
            coef: self.coef * s,
            constant: self.constant * s,
        }
    }

    /// Pushes `expr ≤ self` where expr is a sparse combination of LP variables.
    pub(crate) fn push(&self, lp: &mut LinearProgram, mut expr: Vec<(usize, f64)>) {
        if let Some(v) = self.var {
            if self.coef != 0.0 {
                expr.push((v, -self.coef));
            }
        }
        lp.le(expr, self.constant);
    }
}

fn map_expr(fmap: &[Option<usize>], terms: impl IntoIterator<Item = (usize, f64)>) -> Vec<(usize, f64)> {
    terms.into_iter().filter_map(|(p, c)| fmap[p].map(|v| (v, c))).collect()
}

impl Seminorm {
    /// Difference quotients over all pairs of `points`, dropping any pair (x,y) for which some
    /// z satisfies d(x,z) + d(z,y) = d(x,y): such a quotient is dominated by the two shorter ones.
    pub fn metric(points: &[usize], d: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let k = points.len();
        let dm: Vec<Vec<f64>> = points.iter().map(|&x| points.iter().map(|&y| d(x, y)).collect()).collect();
        let mut pairs = Vec::new();
        for i in 0..k {
            for j in i + 1..k {
                let dij = dm[i][j];
                if !(dij > 0.0) || !dij.is_finite() {
                    return Err(Error::InvalidArgument(format!("distance between points {} and {} must be positive", points[i], points[j])));
                }
                let between = (0..k).any(|z| z != i && z != j && dm[i][z] + dm[z][j] <= dij * (1.0 + 1e-12));
                if !between {
                    pairs.push((points[i], points[j], dij));
                }
            }
        }
        Ok(Seminorm::Metric { pairs })
    }

    /// Metric seminorm from coordinates on the line.
    pub fn line(points: &[usize], coords: &[f64]) -> Result<Self> {
        Seminorm::metric(points, |x, y| (coords[x] - coords[y]).abs())
    }

    pub fn eval(&self, f: &[f64]) -> f64 {
        match self {
            Seminorm::Forms(forms) => forms
                .iter()
                .map(|c| c.iter().map(|&(i, v)| v * f[i]).sum::<f64>().abs())
                .fold(0.0, f64::max),
            Seminorm::Metric { pairs } => pairs.iter().map(|&(x, y, d)| (f[x] - f[y]).abs() / d).fold(0.0, f64::max),
            Seminorm::Sum(parts) => parts.iter().map(|(w, s)| w * s.eval(f)).sum(),
            Seminorm::Max(parts) => parts.iter().map(|s| s.eval(f)).fold(0.0, f64::max),
            Seminorm::Scaled(s, inner) => s * inner.eval(f),
        }
    }

    /// Emits `L(f) ≤ bound`, with point p carried by LP variable fmap[p] (None: pinned to 0).
    pub fn emit(&self, lp: &mut LinearProgram, fmap: &[Option<usize>], bound: Bound) {
        match self {
            Seminorm::Forms(forms) => {
                for c in forms {
                    let e = map_expr(fmap, c.iter().copied());
                    bound.push(lp, e.clone());
                    bound.push(lp, e.into_iter().map(|(i, v)| (i, -v)).collect());
                }
            }
            Seminorm::Metric { pairs } => {
                for &(x, y, d) in pairs {
                    let e = map_expr(fmap, [(x, 1.0), (y, -1.0)]);
                    let b = bound.scaled(d);
                    b.push(lp, e.clone());
                    b.push(lp, e.into_iter().map(|(i, v)| (i, -v)).collect());
                }
            }
            Seminorm::Sum(parts) => {
                let mut total = Vec::new();
                for (w, s) in parts {
                    let t = lp.add_var();
                    lp.le(vec![(t, -1.0)], 0.0);
                    s.emit(lp, fmap, Bound::var(t));
                    total.push((t, *w));
                }
                bound.push(lp, total);
            }
            Seminorm::Max(parts) => {
                for s in parts {
                    s.emit(lp, fmap, bound);
                }
            }
            Seminorm::Scaled(s, inner) => inner.emit(lp, fmap, bound.scaled(1.0 / s)),
        }
    }

    /// Dense forms c with L(f) = max |⟨c, f⟩|; sums expand into all sign/choice combinations.
    pub fn flatten(&self, npoints: usize, budget: usize) -> Result<Vec<Vec<f64>>> {
        let out = match self {
            Seminorm::Forms(forms) => forms
                .iter()
                .map(|c| {
                    let mut v = vec![0.0; npoints];
                    for &(i, x) in c {
                        v[i] += x;
                    }
                    v
                })
                .collect(),
            Seminorm::Metric { pairs } => pairs
                .iter()
                .map(|&(x, y, d)| {
                    let mut v = vec![0.0; npoints];
                    v[x] += 1.0 / d;
                    v[y] -= 1.0 / d;
                    v
                })
                .collect(),
            Seminorm::Max(parts) => {
                let mut all = Vec::new();
                for s in parts {
                    all.extend(s.flatten(npoints, budget)?);
                }
                all
            }
            Seminorm::Scaled(s, inner) => inner.flatten(npoints, budget)?.into_iter().map(|v| v.into_iter().map(|x| x * s).collect()).collect(),
            Seminorm::Sum(parts) => {
                let mut acc: Vec<Vec<f64>> = vec![vec![0.0; npoints]];
                for (w, s) in parts {
                    let forms = s.flatten(npoints, budget)?;
                    let signed: Vec<Vec<f64>> = forms.iter().flat_map(|c| [c.clone(), c.iter().map(|x| -x).collect()]).collect();
                    let size = acc.len().saturating_mul(signed.len());
                    if size > budget {
                        return Err(Error::Budget {
                            needed: size as u128,
                            budget,
                        });
                    }
                    acc = acc
                        .iter()
                        .flat_map(|a| signed.iter().map(move |c| a.iter().zip(c).map(|(x, y)| x + w * y).collect()))
                        .collect();
                }
                // ±pairs collapse under the absolute value
                let mut kept: Vec<Vec<f64>> = Vec::new();
                for c in acc {
                    let neg: Vec<f64> = c.iter().map(|x| -x).collect();
                    if !kept.iter().any(|k| k == &neg || k == &c) {
                        kept.push(c);
                    }
                }
                kept
            }
        };
        if out.len() > budget {
            return Err(Error::Budget {
                needed: out.len() as u128,
                budget,
            });
        }
        Ok(out)
    }

    pub fn scaled(self, s: f64) -> Seminorm {
        Seminorm::Scaled(s, Box::new(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn betweenness_pruning_keeps_adjacent_pairs_on_a_line() {
        let coords: Vec<f64> = (0..6).map(|i| i as f64 / 5.0).collect();
        let s = Seminorm::line(&(0..6).collect::<Vec<_>>(), &coords).unwrap();
        let Seminorm::Metric { pairs } = &s else { panic!() };
        assert_eq!(pairs.len(), 5);
        // the pruned seminorm equals the all-pairs quotient
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let f: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut full: f64 = 0.0;
            for i in 0..6 {
                for j in 0..i {
                    full = full.max((f[i] - f[j]).abs() / (coords[i] - coords[j]));
                }
            }
            assert!((s.eval(&f) - full).abs() < 1e-12);
        }
    }

    #[test]
    fn flatten_matches_eval() {
        let a = Seminorm::line(&[0, 1, 2], &[0.0, 0.5, 1.0, 0.0]).unwrap();
        let b = Seminorm::Forms(vec![vec![(2, 1.0), (3, -1.0)]]);
        let s = Seminorm::Sum(vec![(1.0, a), (0.5, b.scaled(2.0))]);
        let forms = s.flatten(4, 1000).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let f: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let flat = forms.iter().map(|c| c.iter().zip(&f).map(|(x, y)| x * y).sum::<f64>().abs()).fold(0.0, f64::max);
            assert!((flat - s.eval(&f)).abs() < 1e-12);
        }
        assert!(matches!(s.flatten(4, 2), Err(Error::Budget { .. })));
    }

    #[test]
    fn translation_invariance_and_rejects_zero_distance() {
        let s = Seminorm::line(&[0, 1, 2], &[0.0, 0.3, 1.0]).unwrap();
        let f = [0.2, -0.4, 0.9];
        let g: Vec<f64> = f.iter().map(|x| x + 7.0).collect();
        assert!((s.eval(&f) - s.eval(&g)).abs() < 1e-12);
        assert!(Seminorm::line(&[0, 1], &[0.5, 0.5]).is_err());
    }
}

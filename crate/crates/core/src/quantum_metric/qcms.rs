use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::lp::{solve, LinearProgram, LpMode, LpSolution, LpStatus, EXACT_MAX_VARS};
use super::seminorm::{Bound, Seminorm};
use super::vertex::enumerate_vertices;
use crate::error::{invalid, Error, Result};

const STATE_TOL: f64 = 1e-9;
const NET_VERTEX_DIM: usize = 6;
const NET_MAX_DIM: usize = 8;

/// A finite commutative quantum compact metric space: functions on m points with a
/// polyhedral seminorm, gauge-fixed at a base point.
#[derive(Clone, Debug, Serialize)]
pub struct FiniteQcms {
    pub labels: Vec<String>,
    pub seminorm: Seminorm,
    pub base: usize,
    pub mode: LpMode,
}

#[derive(Clone, Debug, Serialize)]
pub struct NormBoundCheck {
    pub deviation: f64,
    pub lip: f64,
    pub qdiam: f64,
    pub slack: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct EpsilonNet {
    pub eps: f64,
    pub dimension: usize,
    pub method: &'static str,
    pub net: Vec<Vec<f64>>,
    pub vertices: usize,
    pub pool: usize,
    pub verified_samples: usize,
    pub max_sample_distance: f64,
    /// sup-norm diameter of the sampled ball, for the volumetric bound (1 + 4·diam/ε)^dim.
    pub diameter: f64,
    pub certified: bool,
}

pub fn check_state(m: usize, s: &[f64]) -> Result<()> {
    if s.len() != m {
        return Err(invalid(format!("state has {} entries, expected {m}", s.len())));
    }
    if s.iter().any(|&v| v < -STATE_TOL || !v.is_finite()) {
        return Err(invalid("state has a negative entry"));
    }
    let total: f64 = s.iter().sum();
    if (total - 1.0).abs() > STATE_TOL {
        return Err(invalid(format!("state sums to {total}, not 1")));
    }
    Ok(())
}

pub fn dirac(m: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; m];
    v[i] = 1.0;
    v
}

/// Uniform sample from the probability simplex.
pub fn dirichlet<R: Rng>(rng: &mut R, m: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..m).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

impl FiniteQcms {
    pub fn new(labels: Vec<String>, seminorm: Seminorm, base: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(invalid("a quantum metric space needs at least one point"));
        }
        if base >= labels.len() {
            return Err(invalid(format!("base point {base} out of range")));
        }
        Ok(FiniteQcms {
            labels,
            seminorm,
            base,
            mode: LpMode::Auto,
        })
    }

    /// Points on the line with the all-pairs difference-quotient seminorm.
    pub fn line(coords: &[f64]) -> Result<Self> {
        let pts: Vec<usize> = (0..coords.len()).collect();
        let s = Seminorm::line(&pts, coords)?;
        FiniteQcms::new(coords.iter().map(|c| format!("{c}")).collect(), s, 0)
    }

    /// A finite metric space given by its distance matrix.
    pub fn metric_space(d: &[Vec<f64>]) -> Result<Self> {
        let pts: Vec<usize> = (0..d.len()).collect();
        let s = Seminorm::metric(&pts, |x, y| d[x][y])?;
        FiniteQcms::new((0..d.len()).map(|i| i.to_string()).collect(), s, 0)
    }

    pub fn with_mode(mut self, mode: LpMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn lip(&self, f: &[f64]) -> f64 {
        self.seminorm.eval(f)
    }

    pub(crate) fn effective_mode(&self, points: usize) -> LpMode {
        match self.mode {
            LpMode::Auto if points <= EXACT_MAX_VARS => LpMode::Exact,
            LpMode::Auto => LpMode::Float,
            m => m,
        }
    }

    /// LP with one variable per non-base point and the constraint L(f) ≤ 1.
    fn unit_ball_lp(&self) -> (LinearProgram, Vec<Option<usize>>) {
        let mut fmap = vec![None; self.len()];
        let mut k = 0;
        for (p, slot) in fmap.iter_mut().enumerate() {
            if p != self.base {
                *slot = Some(k);
                k += 1;
            }
        }
        let mut lp = LinearProgram::new(k);
        self.seminorm.emit(&mut lp, &fmap, Bound::constant(1.0));
        (lp, fmap)
    }

    fn solve_linear(&self, weights: &[f64]) -> Result<LpSolution> {
        let (mut lp, fmap) = self.unit_ball_lp();
        for (p, w) in weights.iter().enumerate() {
            if let Some(v) = fmap[p] {
                lp.objective[v] = *w;
            }
        }
        match solve(&lp, self.effective_mode(self.len())) {
            LpStatus::Optimal(s) => Ok(s),
            LpStatus::Unbounded => Err(Error::Degenerate),
            LpStatus::Infeasible => Err(Error::Lp("unit ball is empty".into())),
        }
    }

    /// L(1) = 0 and the gauge-fixed unit ball is bounded (so the kernel is exactly ℝ1).
    pub fn check(&self) -> Result<()> {
        let ones = vec![1.0; self.len()];
        if self.lip(&ones) > 1e-12 {
            return Err(Error::InvalidArgument("seminorm does not vanish on constants".into()));
        }
        for p in 0..self.len() {
            if p == self.base {
                continue;
            }
            for s in [1.0, -1.0] {
                let mut w = vec![0.0; self.len()];
                w[p] = s;
                self.solve_linear(&w)?;
            }
        }
        Ok(())
    }

    /// Full LP solution for mk_L(φ, ψ); `x` is an optimal gauge-fixed witness.
    pub fn kantorovich_solution(&self, phi: &[f64], psi: &[f64]) -> Result<LpSolution> {
        check_state(self.len(), phi)?;
        check_state(self.len(), psi)?;
        let w: Vec<f64> = phi.iter().zip(psi).map(|(a, b)| a - b).collect();
        self.solve_linear(&w)
    }

    pub fn kantorovich(&self, phi: &[f64], psi: &[f64]) -> Result<f64> {
        Ok(self.kantorovich_solution(phi, psi)?.value.max(0.0))
    }

    /// Exact rational distance (small spaces only).
    pub fn kantorovich_exact(&self, phi: &[f64], psi: &[f64]) -> Result<Option<BigRational>> {
        Ok(self.kantorovich_solution(phi, psi)?.rational)
    }

    /// Distances between Dirac states.
    pub fn distance_table(&self) -> Result<Vec<Vec<f64>>> {
        let m = self.len();
        let mut t = vec![vec![0.0; m]; m];
        for i in 0..m {
            for j in i + 1..m {
                let d = self.kantorovich(&dirac(m, i), &dirac(m, j))?;
                t[i][j] = d;
                t[j][i] = d;
            }
        }
        Ok(t)
    }

    /// Diameter of the state space: the largest distance between Dirac states.
    pub fn qdiam(&self) -> Result<f64> {
        Ok(self.distance_table()?.iter().flatten().copied().fold(0.0, f64::max))
    }

    pub fn norm_bound_check(&self, f: &[f64], mu: &[f64]) -> Result<NormBoundCheck> {
        check_state(self.len(), mu)?;
        let mean: f64 = f.iter().zip(mu).map(|(a, b)| a * b).sum();
        let deviation = f.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
        let lip = self.lip(f);
        let qdiam = self.qdiam()?;
        let rhs = lip * qdiam;
        Ok(NormBoundCheck {
            deviation,
            lip,
            qdiam,
            slack: rhs - deviation,
            holds: deviation <= rhs * (1.0 + 1e-12) + 1e-12,
        })
    }

    /// Vertices of {L ≤ 1, f(base) = 0}, as full vectors.
    pub fn unit_ball_vertices(&self, budget: usize) -> Result<Vec<Vec<f64>>> {
        let m = self.len();
        let forms = self.seminorm.flatten(m, budget)?;
        let keep: Vec<usize> = (0..m).filter(|&p| p != self.base).collect();
        let mut a = Vec::with_capacity(2 * forms.len());
        for c in &forms {
            let r: Vec<f64> = keep.iter().map(|&p| c[p]).collect();
            a.push(r.iter().map(|x| -x).collect());
            a.push(r);
        }
        let b = vec![1.0; a.len()];
        let verts = enumerate_vertices(&a, &b, keep.len(), budget)?;
        Ok(verts
            .into_iter()
            .map(|g| {
                let mut f = vec![0.0; m];
                for (&p, v) in keep.iter().zip(g) {
                    f[p] = v;
                }
                f
            })
            .collect())
    }

    /// A sup-norm ε-net of {L ≤ 1, μ(f) = 0}, checked on fresh random points of the set.
    pub fn epsilon_net(&self, mu: &[f64], eps: f64, samples: usize, seed: u64) -> Result<EpsilonNet> {
        check_state(self.len(), mu)?;
        if !(eps > 0.0) {
            return Err(invalid("ε must be positive"));
        }
        let m = self.len();
        let dim = m - 1;
        if dim > NET_MAX_DIM {
            return Err(Error::Budget {
                needed: dim as u128,
                budget: NET_MAX_DIM,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        if dim == 0 {
            return Ok(EpsilonNet {
                eps,
                dimension: 0,
                method: "trivial",
                net: vec![vec![0.0]],
                vertices: 1,
                pool: 1,
                verified_samples: 0,
                max_sample_distance: 0.0,
                diameter: 0.0,
                certified: true,
            });
        }
        // coordinates g on the points other than k; f_k is fixed by μ(f) = 0
        let k = (0..m).max_by(|&i, &j| mu[i].partial_cmp(&mu[j]).unwrap()).unwrap();
        let free: Vec<usize> = (0..m).filter(|&p| p != k).collect();
        let lift = |g: &[f64]| -> Vec<f64> {
            let mut f = vec![0.0; m];
            let mut s = 0.0;
            for (&p, &v) in free.iter().zip(g) {
                f[p] = v;
                s += mu[p] * v;
            }
            f[k] = -s / mu[k];
            f
        };

        let (method, verts) = if dim <= NET_VERTEX_DIM {
            let forms = self.seminorm.flatten(m, 1 << 16)?;
            let mut a = Vec::with_capacity(2 * forms.len());
            for c in &forms {
                let r: Vec<f64> = free.iter().map(|&p| c[p] - c[k] * mu[p] / mu[k]).collect();
                a.push(r.iter().map(|x| -x).collect());
                a.push(r);
            }
            let b = vec![1.0; a.len()];
            let v = enumerate_vertices(&a, &b, dim, 1 << 16)?;
            ("vertices", v.iter().map(|g| lift(g)).collect::<Vec<_>>())
        } else {
            ("radial", Vec::new())
        };

        let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            if verts.is_empty() {
                loop {
                    let g: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let f = lift(&g);
                    let l = self.lip(&f);
                    if l > 1e-12 {
                        let r = rng.gen::<f64>().powf(1.0 / dim as f64) / l;
                        return f.into_iter().map(|v| v * r).collect();
                    }
                }
            } else {
                let w = dirichlet(rng, verts.len());
                let mut f = vec![0.0; m];
                for (v, c) in verts.iter().zip(&w) {
                    for (x, y) in f.iter_mut().zip(v) {
                        *x += c * y;
                    }
                }
                f
            }
        };

        let mut pool: Vec<Vec<f64>> = verts.clone();
        for _ in 0..samples.max(1) * 4 {
            pool.push(draw(&mut rng));
        }
        let diameter = pool.iter().flat_map(|a| pool.iter().map(move |b| sup_dist(a, b))).fold(0.0, f64::max);
        // greedy farthest-point selection to ε/2 on the pool
        let mut net: Vec<Vec<f64>> = vec![pool[0].clone()];
        let mut nearest: Vec<f64> = pool.iter().map(|p| sup_dist(p, &pool[0])).collect();
        loop {
            let (i, &d) = nearest.iter().enumerate().max_by(|a, b| a.1.partial_cmp(b.1).unwrap()).unwrap();
            if d <= eps / 2.0 {
                break;
            }
            let c = pool[i].clone();
            for (n, p) in nearest.iter_mut().zip(&pool) {
                *n = n.min(sup_dist(p, &c));
            }
            net.push(c);
        }
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let s = draw(&mut rng);
            let d = net.iter().map(|c| sup_dist(&s, c)).fold(f64::INFINITY, f64::min);
            worst = worst.max(d);
        }
        Ok(EpsilonNet {
            eps,
            dimension: dim,
            method,
            vertices: verts.len(),
            pool: pool.len(),
            net,
            verified_samples: samples,
            max_sample_distance: worst,
            diameter,
            certified: worst <= eps,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;

    fn three_point() -> FiniteQcms {
        FiniteQcms::metric_space(&[vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]]).unwrap()
    }

    #[test]
    fn trivial_and_two_point() {
        let q = three_point();
        let s = [0.2, 0.3, 0.5];
        assert_eq!(q.kantorovich_exact(&s, &s).unwrap(), Some(BigRational::zero()));
        let eps = 0.37;
        let two = FiniteQcms::line(&[0.0, eps]).unwrap();
        assert_eq!(two.kantorovich(&dirac(2, 0), &dirac(2, 1)).unwrap(), eps);
        assert_eq!(two.qdiam().unwrap(), eps);
        let one = FiniteQcms::line(&[0.0]).unwrap();
        assert_eq!(one.qdiam().unwrap(), 0.0);
    }

    #[test]
    fn three_point_metric_and_exactness() {
        let q = three_point();
        let d = q.kantorovich_exact(&dirac(3, 0), &dirac(3, 2)).unwrap().unwrap();
        assert_eq!(d, BigRational::from_integer(2.into()));
        q.check().unwrap();
    }

    #[test]
    fn metric_axioms_and_scale_covariance() {
        let q = FiniteQcms::line(&[0.0, 0.25, 0.7, 1.0, 1.8]).unwrap();
        let q2 = FiniteQcms::new(q.labels.clone(), q.seminorm.clone().scaled(2.0), 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let (a, b, c) = (dirichlet(&mut rng, 5), dirichlet(&mut rng, 5), dirichlet(&mut rng, 5));
            let ab = q.kantorovich(&a, &b).unwrap();
            let ba = q.kantorovich(&b, &a).unwrap();
            let bc = q.kantorovich(&b, &c).unwrap();
            let ac = q.kantorovich(&a, &c).unwrap();
            assert!(ab >= 0.0 && (ab - ba).abs() < 1e-12);
            assert!(ac <= ab + bc + 1e-12);
            assert!((q2.kantorovich(&a, &b).unwrap() - ab / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_seminorm_is_reported() {
        // only ties points 0 and 1; point 2 is free
        let s = Seminorm::Forms(vec![vec![(0, 1.0), (1, -1.0)]]);
        let q = FiniteQcms::new(vec!["a".into(), "b".into(), "c".into()], s, 0).unwrap();
        assert!(matches!(q.check(), Err(Error::Degenerate)));
        assert!(matches!(q.kantorovich(&dirac(3, 0), &dirac(3, 2)), Err(Error::Degenerate)));
        assert!(q.kantorovich(&[0.5, 0.6, -0.1], &dirac(3, 0)).is_err());
    }

    #[test]
    fn norm_bound_on_random_functions() {
        let q = three_point();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let c = q.norm_bound_check(&[3.0, 3.0, 3.0], &[0.2, 0.3, 0.5]).unwrap();
        assert_eq!(c.deviation, 0.0);
        assert!(c.holds);
        for _ in 0..50 {
            let f: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let mu = dirichlet(&mut rng, 3);
            assert!(q.norm_bound_check(&f, &mu).unwrap().holds);
        }
    }

    #[test]
    fn unit_ball_vertices_of_a_path() {
        let q = FiniteQcms::line(&[0.0, 1.0, 3.0]).unwrap();
        let v = q.unit_ball_vertices(1000).unwrap();
        // f(0)=0, f(1)=±1, f(2)=f(1)±2
        assert_eq!(v.len(), 4);
        for f in &v {
            assert!((q.lip(f) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn epsilon_nets() {
        let eps_t = 0.8;
        let two = FiniteQcms::line(&[0.0, eps_t]).unwrap();
        let net = two.epsilon_net(&[0.5, 0.5], 0.1, 200, 1).unwrap();
        assert!(net.certified);
        // the set is the segment t·(1, −1), |t| ≤ ε̃/2
        for f in &net.net {
            assert!((f[0] + f[1]).abs() < 1e-12 && f[0].abs() <= eps_t / 2.0 + 1e-12);
        }
        assert!((net.diameter - eps_t).abs() < 1e-9);
        let q = three_point();
        let net = q.epsilon_net(&[0.2, 0.3, 0.5], 0.25, 500, 2).unwrap();
        assert!(net.certified, "{}", net.max_sample_distance);
        let bound = (1.0 + 4.0 * net.diameter / net.eps).powi(net.dimension as i32);
        assert!((net.net.len() as f64) <= bound);
    }
}

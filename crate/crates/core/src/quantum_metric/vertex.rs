use super::lp::{solve, LinearProgram, LpMode, LpStatus};
use crate::error::{Error, Result};

pub const DEFAULT_VERTEX_BUDGET: usize = 100_000;
const MAX_DIM: usize = 20;

#[derive(Clone)]
struct Vertex {
    x: Vec<f64>,
    active: Vec<u64>,
}

fn set(bits: &mut [u64], k: usize) {
    bits[k / 64] |= 1 << (k % 64);
}

fn and(a: &[u64], b: &[u64]) -> Vec<u64> {
    a.iter().zip(b).map(|(x, y)| x & y).collect()
}

fn subset(a: &[u64], b: &[u64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x & !y == 0)
}

fn count(a: &[u64]) -> usize {
    a.iter().map(|w| w.count_ones() as usize).sum()
}

/// Coordinate ranges of {a_i·x ≤ b_i}; errors if unbounded.
fn bounding_box(a: &[Vec<f64>], b: &[f64], d: usize) -> Result<Vec<(f64, f64)>> {
    let mut lp = LinearProgram::new(d);
    for (row, &rhs) in a.iter().zip(b) {
        lp.le(row.iter().copied().enumerate().filter(|(_, v)| *v != 0.0).collect(), rhs);
    }
    let mut out = Vec::with_capacity(d);
    for i in 0..d {
        let mut ends = [0.0; 2];
        for (s, sign) in [1.0, -1.0].into_iter().enumerate() {
            lp.objective = vec![0.0; d];
            lp.objective[i] = sign;
            ends[s] = match solve(&lp, LpMode::Float) {
                LpStatus::Optimal(sol) => sol.value * sign,
                LpStatus::Unbounded => return Err(Error::Degenerate),
                LpStatus::Infeasible => return Err(Error::Lp("empty polytope".into())),
            };
        }
        out.push((ends[1], ends[0]));
    }
    Ok(out)
}

/// Vertices of the bounded polytope {x ∈ ℝ^d : a_i·x ≤ b_i} by double description,
/// starting from a box that strictly contains it.
pub fn enumerate_vertices(a: &[Vec<f64>], b: &[f64], d: usize, budget: usize) -> Result<Vec<Vec<f64>>> {
    if d == 0 {
        return Ok(vec![vec![]]);
    }
    if d > MAX_DIM || (1usize << d) > budget {
        return Err(Error::VertexBudget(budget));
    }
    let bx = bounding_box(a, b, d)?;
    let k_total = a.len() + 2 * d;
    let words = k_total.div_ceil(64);
    let mut verts: Vec<Vertex> = (0..1usize << d)
        .map(|mask| {
            let mut active = vec![0u64; words];
            let x = (0..d)
                .map(|i| {
                    let (lo, hi) = bx[i];
                    let pad = 1.0 + (hi - lo);
                    if mask >> i & 1 == 1 {
                        set(&mut active, a.len() + 2 * i);
                        hi + pad
                    } else {
                        set(&mut active, a.len() + 2 * i + 1);
                        lo - pad
                    }
                })
                .collect();
            Vertex { x, active }
        })
        .collect();

    for (k, (row, &rhs)) in a.iter().zip(b).enumerate() {
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            if rhs < 0.0 {
                return Err(Error::Lp("empty polytope".into()));
            }
            continue;
        }
        let tol = 1e-9 * rhs.abs().max(1.0);
        let slack: Vec<f64> = verts.iter().map(|v| rhs - row.iter().zip(&v.x).map(|(p, q)| p * q).sum::<f64>()).collect();
        let plus: Vec<usize> = (0..verts.len()).filter(|&i| slack[i] > tol).collect();
        let minus: Vec<usize> = (0..verts.len()).filter(|&i| slack[i] < -tol).collect();
        let zero: Vec<usize> = (0..verts.len()).filter(|&i| slack[i].abs() <= tol).collect();
        if minus.is_empty() {
            for &i in &zero {
                set(&mut verts[i].active, k);
            }
            continue;
        }
        let mut fresh = Vec::new();
        for &p in &plus {
            for &m in &minus {
                let common = and(&verts[p].active, &verts[m].active);
                if count(&common) < d - 1 {
                    continue;
                }
                let adjacent = (0..verts.len()).all(|r| r == p || r == m || !subset(&common, &verts[r].active));
                if !adjacent {
                    continue;
                }
                let t = slack[p] / (slack[p] - slack[m]);
                let x = verts[p].x.iter().zip(&verts[m].x).map(|(u, v)| u + t * (v - u)).collect();
                let mut active = common;
                set(&mut active, k);
                fresh.push(Vertex { x, active });
            }
        }
        let mut next: Vec<Vertex> = Vec::with_capacity(plus.len() + zero.len() + fresh.len());
        next.extend(plus.iter().map(|&i| verts[i].clone()));
        for &i in &zero {
            let mut v = verts[i].clone();
            set(&mut v.active, k);
            next.push(v);
        }
        next.extend(fresh);
        if next.len() > budget {
            return Err(Error::VertexBudget(budget));
        }
        verts = next;
    }

    let mut out: Vec<Vec<f64>> = Vec::new();
    for v in verts {
        if !out.iter().any(|u| u.iter().zip(&v.x).all(|(p, q)| (p - q).abs() <= 1e-9 * (1.0 + p.abs()))) {
            out.push(v.x);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_and_triangle() {
        // |x| ≤ 1, |y| ≤ 1
        let a = vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]];
        let v = enumerate_vertices(&a, &[1.0; 4], 2, 1000).unwrap();
        assert_eq!(v.len(), 4);
        // x ≥ 0, y ≥ 0, x + y ≤ 1
        let a = vec![vec![-1.0, 0.0], vec![0.0, -1.0], vec![1.0, 1.0]];
        let mut v = enumerate_vertices(&a, &[0.0, 0.0, 1.0], 2, 1000).unwrap();
        v.sort_by(|p, q| p.partial_cmp(q).unwrap());
        assert_eq!(v.len(), 3);
        assert!(v[2][0] > 0.999 && v[0][0].abs() < 1e-12);
    }

    #[test]
    fn cross_polytope_and_degenerate_pyramid() {
        // |x|+|y|+|z| ≤ 1: 6 vertices
        let mut a = vec![];
        for s in 0..8 {
            a.push((0..3).map(|i| if s >> i & 1 == 1 { 1.0 } else { -1.0 }).collect());
        }
        let v = enumerate_vertices(&a, &[1.0; 8], 3, 1000).unwrap();
        assert_eq!(v.len(), 6);
        // square pyramid: apex has four active facets in 3D
        let a = vec![vec![0.0, 0.0, -1.0], vec![1.0, 0.0, 1.0], vec![-1.0, 0.0, 1.0], vec![0.0, 1.0, 1.0], vec![0.0, -1.0, 1.0]];
        let v = enumerate_vertices(&a, &[0.0, 1.0, 1.0, 1.0, 1.0], 3, 1000).unwrap();
        assert_eq!(v.len(), 5);
    }

    #[test]
    fn unbounded_and_budget() {
        let a = vec![vec![1.0, 0.0]];
        assert!(matches!(enumerate_vertices(&a, &[1.0], 2, 1000), Err(Error::Degenerate)));
        let a = vec![vec![1.0], vec![-1.0]];
        assert!(matches!(enumerate_vertices(&a, &[1.0, 1.0], 1, 1), Err(Error::VertexBudget(1))));
    }
}

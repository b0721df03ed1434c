use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::linalg::{dot, vec_norm, CsrMatrix, C64};

pub const DEFAULT_TOL: f64 = 1e-9;
const MAX_KRYLOV: usize = 160;
const MAX_RESTARTS: usize = 12;
const SEED: u64 = 0x0DD5_EED5;

/// Largest singular value with a certificate: `lower` is attained by an explicit
/// vector, `upper` is min(Frobenius, sqrt(‖A‖₁‖A‖∞)).
#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct NormEstimate {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl NormEstimate {
    fn exact(v: f64) -> Self {
        NormEstimate {
            value: v,
            lower: v,
            upper: v,
            converged: true,
            iterations: 0,
        }
    }
}

fn upper_certificate(a: &CsrMatrix) -> f64 {
    a.frobenius().min((a.norm_one() * a.norm_inf()).sqrt())
}

/// ‖A‖ by Lanczos on A*A with full reorthogonalization and fixed-seed restarts.
pub fn op_norm(a: &CsrMatrix, tol: f64) -> NormEstimate {
    op_norm_witness(a, tol).0
}

/// Same as [`op_norm`], also returning a unit vector x with ‖Ax‖ = `lower`.
pub fn op_norm_witness(a: &CsrMatrix, tol: f64) -> (NormEstimate, Vec<C64>) {
    let n = a.ncols();
    if a.nnz() == 0 || n == 0 {
        let mut x = vec![C64::new(0.0, 0.0); n];
        if let Some(v) = x.first_mut() {
            *v = C64::new(1.0, 0.0);
        }
        return (NormEstimate::exact(0.0), x);
    }
    if a.is_monomial() {
        // a weighted partial permutation: the norm is the largest modulus
        let (_, c, _) = a
            .triplets()
            .max_by(|x, y| x.2.norm().partial_cmp(&y.2.norm()).unwrap())
            .expect("nonzero matrix");
        let mut x = vec![C64::new(0.0, 0.0); n];
        x[c] = C64::new(1.0, 0.0);
        return (NormEstimate::exact(a.max_abs()), x);
    }
    let upper = upper_certificate(a);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut start: Vec<C64> = (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let mut tmp = vec![C64::new(0.0, 0.0); a.nrows()];
    let mut w = vec![C64::new(0.0, 0.0); n];
    let mut best = 0.0f64;
    let mut witness: Vec<C64> = Vec::new();
    let mut iterations = 0;
    let mut converged = false;

    let mut apply_ata = |x: &[C64], out: &mut [C64]| {
        a.matvec(x, &mut tmp);
        a.adjoint_matvec(&tmp, out);
    };

    for _ in 0..MAX_RESTARTS {
        let nrm = vec_norm(&start);
        if nrm == 0.0 {
            break;
        }
        let mut basis: Vec<Vec<C64>> = vec![start.iter().map(|v| v / nrm).collect()];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let kmax = MAX_KRYLOV.min(n);
        let mut ritz: Option<(f64, Vec<f64>)> = None;
        loop {
            let j = basis.len() - 1;
            apply_ata(&basis[j], &mut w);
            iterations += 1;
            let aj = dot(&basis[j], &w).re;
            alpha.push(aj);
            // full reorthogonalization, twice
            for _ in 0..2 {
                for q in &basis {
                    let c = dot(q, &w);
                    for (wi, qi) in w.iter_mut().zip(q) {
                        *wi -= c * qi;
                    }
                }
            }
            let b = vec_norm(&w);
            let k = alpha.len();
            let check = k == kmax || b <= 1e-300 || k % 8 == 0 || k <= 4;
            if check {
                let mut t = DMatrix::<f64>::zeros(k, k);
                for i in 0..k {
                    t[(i, i)] = alpha[i];
                    if i + 1 < k {
                        t[(i, i + 1)] = beta[i];
                        t[(i + 1, i)] = beta[i];
                    }
                }
                let eig = SymmetricEigen::new(t);
                let (imax, &theta) = eig
                    .eigenvalues
                    .iter()
                    .enumerate()
                    .max_by(|x, y| x.1.partial_cmp(y.1).unwrap())
                    .unwrap();
                let s: Vec<f64> = eig.eigenvectors.column(imax).iter().copied().collect();
                let resid = b * s[k - 1].abs();
                ritz = Some((theta, s));
                if resid <= tol * theta.abs().max(1e-300) || b <= 1e-300 * theta.abs().max(1.0) || k == kmax {
                    converged = resid <= tol * theta.abs().max(1e-300) || b <= 1e-300 * theta.abs().max(1.0);
                    break;
                }
            }
            if b <= 1e-300 {
                break;
            }
            beta.push(b);
            basis.push(w.iter().map(|v| v / b).collect());
        }
        let (_, s) = ritz.expect("at least one Ritz pair");
        // Ritz vector and its attained value
        let mut y = vec![C64::new(0.0, 0.0); n];
        for (q, &si) in basis.iter().zip(&s) {
            for (yi, qi) in y.iter_mut().zip(q) {
                *yi += qi * si;
            }
        }
        let ny = vec_norm(&y);
        let unit: Vec<C64> = y.iter().map(|v| v / ny).collect();
        let attained = vec_norm(&a.apply(&unit));
        if attained > best || witness.is_empty() {
            best = attained;
            witness = unit;
        }
        if converged {
            break;
        }
        start = y;
    }
    let est = NormEstimate {
        value: best,
        lower: best,
        upper: upper.max(best),
        converged,
        iterations,
    };
    (est, witness)
}

/// Exact norm of a 2×2 complex matrix.
///
/// Largest eigenvalue of M*M = [[p, q], [q̄, r]] as (p+r)/2 + hypot((p−r)/2, |q|); the
/// discriminant fro⁴ − 4|det|² cancels badly when the singular values coincide.
pub fn norm_2x2(m: &[[C64; 2]; 2]) -> f64 {
    let p = m[0][0].norm_sqr() + m[1][0].norm_sqr();
    let r = m[0][1].norm_sqr() + m[1][1].norm_sqr();
    let q = m[0][0].conj() * m[0][1] + m[1][0].conj() * m[1][1];
    ((p + r) / 2.0 + ((p - r) / 2.0).hypot(q.norm())).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn dense_norm(a: &CsrMatrix) -> f64 {
        let svd = a.to_dense().svd(false, false);
        svd.singular_values.iter().copied().fold(0.0, f64::max)
    }

    #[test]
    fn simple_cases() {
        assert_eq!(op_norm(&CsrMatrix::identity(5), 1e-9).value, 1.0);
        let d = CsrMatrix::from_triplets(2, 2, vec![(0, 0, C64::new(3.0, 0.0)), (1, 1, C64::new(-4.0, 0.0))]);
        assert_eq!(op_norm(&d, 1e-9).value, 4.0);
        assert_eq!(op_norm(&CsrMatrix::zeros(3, 3), 1e-9).value, 0.0);
    }

    #[test]
    fn norm_2x2_with_equal_singular_values() {
        let pi = std::f64::consts::PI;
        for (a, b) in [(pi * 3.0 / 8.0, 8.0), (1e-3, 7.0), (5.0, 0.0), (0.1, 0.2)] {
            let m = [[C64::new(a, 0.0), C64::new(b, 0.0)], [C64::new(b, 0.0), C64::new(-a, 0.0)]];
            assert!((norm_2x2(&m) - a.hypot(b)).abs() <= 4.0 * f64::EPSILON * a.hypot(b));
        }
        let m = [[C64::new(1.0, 1.0), C64::new(2.0, 0.0)], [C64::new(0.0, -3.0), C64::new(0.5, 0.0)]];
        let dense = CsrMatrix::from_triplets(2, 2, (0..4).map(|k| (k / 2, k % 2, m[k / 2][k % 2])));
        assert!((norm_2x2(&m) - dense_norm(&dense)).abs() < 1e-13);
    }

    #[test]
    fn random_dense_matches_svd() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for trial in 0..5 {
            let n = 50;
            let mut t = Vec::new();
            for k in 0..n * n {
                if rng.gen_bool(0.3) {
                    t.push((k / n, k % n, C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))));
                }
            }
            let a = CsrMatrix::from_triplets(n, n, t);
            let est = op_norm(&a, 1e-9);
            let exact = dense_norm(&a);
            assert!(est.converged);
            assert!((est.value - exact).abs() <= 1e-9 * exact, "trial {trial}: {} vs {}", est.value, exact);
            assert!(est.lower <= exact * (1.0 + 1e-12) && exact <= est.upper * (1.0 + 1e-12));
        }
    }

    #[test]
    fn rectangular_and_clustered() {
        // nearly repeated top singular values
        let mut t = vec![];
        for i in 0..40 {
            t.push((i, i, C64::new(1.0 - 1e-7 * i as f64, 0.0)));
            t.push((i, (i + 1) % 40, C64::new(0.0, 1e-3)));
        }
        let a = CsrMatrix::from_triplets(45, 40, t);
        let est = op_norm(&a, 1e-10);
        let exact = dense_norm(&a);
        assert!((est.value - exact).abs() <= 1e-9 * exact);
    }

    #[test]
    fn two_by_two() {
        let m = [[C64::new(3.0, 0.0), C64::new(4.0, 0.0)], [C64::new(4.0, 0.0), C64::new(-3.0, 0.0)]];
        assert!((norm_2x2(&m) - 5.0).abs() < 1e-14);
    }
}

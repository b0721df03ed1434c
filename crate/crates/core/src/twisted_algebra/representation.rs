use super::cocycle::Cocycle;
use super::element::AlgebraElement;
use crate::group_geometry::{Ball, GroupElement};
use crate::linalg::{CsrMatrix, C64};

/// P_B λ(g) P_B: entry (gk, k) = σ(g, k) whenever k and gk lie in B.
pub fn lambda_matrix(sigma: &Cocycle, g: &GroupElement, ball: &Ball) -> CsrMatrix {
    let n = ball.len();
    let group = &ball.group;
    let t = ball.elements().iter().enumerate().filter_map(|(j, k)| {
        let gk = group.op(g, k);
        ball.index_of(&gk).map(|i| (i, j, sigma.eval(g, k)))
    });
    CsrMatrix::from_triplets(n, n, t.collect::<Vec<_>>())
}

/// P_B ρ(k) P_B with ρ(k)δ_m = σ(m, k⁻¹) δ_{mk⁻¹}.
pub fn rho_matrix(sigma: &Cocycle, k: &GroupElement, ball: &Ball) -> CsrMatrix {
    let n = ball.len();
    let group = &ball.group;
    let kinv = group.inverse(k);
    let t = ball.elements().iter().enumerate().filter_map(|(j, m)| {
        let mk = group.op(m, &kinv);
        ball.index_of(&mk).map(|i| (i, j, sigma.eval(m, &kinv)))
    });
    CsrMatrix::from_triplets(n, n, t.collect::<Vec<_>>())
}

/// Σ_g f(g)·λ(g), compressed to B.
pub fn lambda_of(sigma: &Cocycle, f: &AlgebraElement, ball: &Ball) -> CsrMatrix {
    let n = ball.len();
    let group = &ball.group;
    let mut t = Vec::new();
    for (g, c) in f.terms() {
        for (j, k) in ball.elements().iter().enumerate() {
            if let Some(i) = ball.index_of(&group.op(g, k)) {
                t.push((i, j, c * sigma.eval(g, k)));
            }
        }
    }
    CsrMatrix::from_triplets(n, n, t)
}

/// Index of the basis vector δ_g in ℓ²(B), if present.
pub fn basis_vector(ball: &Ball, g: &GroupElement) -> Option<Vec<C64>> {
    let i = ball.index_of(g)?;
    let mut v = vec![C64::new(0.0, 0.0); ball.len()];
    v[i] = C64::new(1.0, 0.0);
    Some(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group_geometry::{enumerate_ball, Group, LengthFunction, VecNorm};
    use crate::twisted_algebra::element::{involution, trace, twisted_convolution};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (Group, Cocycle, Ball) {
        let g = Group::solenoid(2, 2).unwrap();
        let s = Cocycle::bicharacter(&g, vec![vec![0.0, 0.21], vec![-0.21, 0.0]]).unwrap();
        let b = enumerate_ball(&g, &LengthFunction::max_of(VecNorm::Max), 2.0, 10_000).unwrap();
        (g, s, b)
    }

    #[test]
    fn identity_and_disjoint_shift() {
        let (g, _, b) = setup();
        let t = Cocycle::trivial();
        assert_eq!(lambda_matrix(&t, &g.identity(), &b), CsrMatrix::identity(b.len()));
        assert_eq!(rho_matrix(&t, &g.identity(), &b), CsrMatrix::identity(b.len()));
        let far = g.dyadic(&[(100, 0), (0, 0)]).unwrap();
        assert_eq!(lambda_matrix(&t, &far, &b).nnz(), 0);
    }

    #[test]
    fn columns_have_one_unimodular_entry() {
        let (g, s, b) = setup();
        let x = g.dyadic(&[(1, 1), (-1, 0)]).unwrap();
        let m = lambda_matrix(&s, &x, &b);
        assert!(m.is_monomial());
        for (_, _, v) in m.triplets() {
            assert!((v.norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn left_and_right_commute_on_inner_ball() {
        let (g, s, b) = setup();
        let inner = b.restrict_radius(1.0);
        let x = g.dyadic(&[(1, 1), (0, 0)]).unwrap();
        let k = g.dyadic(&[(0, 0), (1, 1)]).unwrap();
        let l = lambda_matrix(&s, &x, &b);
        let r = rho_matrix(&s, &k, &b);
        let diff = l.mul(&r).sub(&r.mul(&l));
        let cols: Vec<usize> = inner.elements().iter().map(|e| b.index_of(e).unwrap()).collect();
        let rows: Vec<usize> = (0..b.len()).collect();
        assert!(diff.submatrix(&rows, &cols).max_abs() < 1e-14);
    }

    #[test]
    fn rho_unitary_on_orbit() {
        let g = Group::finite(&[4, 4]).unwrap();
        let s = Cocycle::bicharacter(&g, vec![vec![0.0, 0.25], vec![-0.25, 0.0]]).unwrap();
        let b = enumerate_ball(&g, &LengthFunction::h(VecNorm::Max), 10.0, 100).unwrap();
        let k = g.parse_element("1, 3").unwrap();
        let r = rho_matrix(&s, &k, &b);
        let p = r.adjoint().mul(&r);
        assert!(p.sub(&CsrMatrix::identity(b.len())).max_abs() < 1e-14);
    }

    #[test]
    fn homomorphism_on_padded_truncation() {
        let (g, s, _) = setup();
        let len = LengthFunction::max_of(VecNorm::Max);
        let pad = enumerate_ball(&g, &len, 4.0, 100_000).unwrap();
        let inner = pad.restrict_radius(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let small: Vec<_> = pad.restrict_radius(1.0).elements().to_vec();
        for _ in 0..10 {
            let f1 = AlgebraElement::random(&g, &mut rng, &small, 3);
            let f2 = AlgebraElement::random(&g, &mut rng, &small, 3);
            let prod = lambda_of(&s, &f1, &pad).mul(&lambda_of(&s, &f2, &pad));
            let conv = lambda_of(&s, &twisted_convolution(&g, &s, &f1, &f2), &pad);
            let idx: Vec<usize> = inner.elements().iter().map(|e| pad.index_of(e).unwrap()).collect();
            let d = prod.sub(&conv).submatrix(&idx, &idx);
            assert!(d.max_abs() < 1e-13);
            // adjoint matches involution exactly on the full ball (compression of a *-map)
            let a = lambda_of(&s, &involution(&g, &s, &f1), &pad);
            assert!(a.sub(&lambda_of(&s, &f1, &pad).adjoint()).max_abs() < 1e-14);
            // trace is the identity matrix element
            let e = basis_vector(&pad, &g.identity()).unwrap();
            let i0 = pad.index_of(&g.identity()).unwrap();
            let col = lambda_of(&s, &f1, &pad).apply(&e);
            assert!((col[i0] - trace(&g, &f1)).norm() < 1e-15);
        }
    }
}

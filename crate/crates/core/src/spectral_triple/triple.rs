use serde::Serialize;

use super::clifford::{block_apply, dirac_block, Block, CliffordPair};
use super::norm::{norm_2x2, op_norm, NormEstimate};
use crate::error::{invalid, Result};
use crate::group_geometry::{Ball, ElementRecord, GroupElement, LengthFunction};
use crate::linalg::{vec_norm, CsrMatrix, C64};
use crate::twisted_algebra::{lambda_of, self_adjoint_part, AlgebraElement, Cocycle};

/// Leibniz constants for spectral-triple seminorms: L(ab) ≤ Ω(L(a)‖b‖ + ‖a‖L(b)) + Ω′L(a)L(b).
pub const LEIBNIZ_OMEGA: f64 = 1.0;
pub const LEIBNIZ_OMEGA_PRIME: f64 = 0.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncationTag {
    Level(usize),
    Window,
}

/// Dirac operator M_{𝕃_H}⊗γ₁ + M_𝔽⊗γ₂ compressed to ℓ²(B)⊗E, stored blockwise.
#[derive(Clone, Debug)]
pub struct TruncatedTriple {
    pub ball: Ball,
    pub sigma: Cocycle,
    pub h_len: LengthFunction,
    pub f_len: LengthFunction,
    pub clifford: CliffordPair,
    pub tag: TruncationTag,
    lh: Vec<f64>,
    fv: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumEntry {
    pub value: f64,
    pub multiplicity: usize,
    pub element: ElementRecord,
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct SeminormBracket {
    pub lower: f64,
    pub upper: f64,
    pub radius: f64,
}

/// A block-diagonal operator on ℓ²(B)⊗E (one 2×2 block per element, repeated over copies).
#[derive(Clone, Debug)]
pub struct BlockOperator {
    pub blocks: Vec<Block>,
    pub dim_e: usize,
}

impl BlockOperator {
    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); x.len()];
        for (i, b) in self.blocks.iter().enumerate() {
            for c in 0..self.dim_e / 2 {
                let o = i * self.dim_e + 2 * c;
                let r = block_apply(b, [x[o], x[o + 1]]);
                y[o] = r[0];
                y[o + 1] = r[1];
            }
        }
        y
    }

    pub fn to_csr(&self) -> CsrMatrix {
        let n = self.blocks.len() * self.dim_e;
        let mut t = Vec::new();
        for (i, b) in self.blocks.iter().enumerate() {
            for c in 0..self.dim_e / 2 {
                let o = i * self.dim_e + 2 * c;
                for r in 0..2 {
                    for s in 0..2 {
                        t.push((o + r, o + s, b[r][s]));
                    }
                }
            }
        }
        CsrMatrix::from_triplets(n, n, t)
    }

    /// Exact operator norm (max over blocks).
    pub fn norm(&self) -> f64 {
        self.blocks.iter().map(norm_2x2).fold(0.0, f64::max)
    }
}

impl TruncatedTriple {
    pub fn dirac(ball: Ball, h_len: LengthFunction, f_len: LengthFunction, sigma: Cocycle, dim_e: usize, tag: TruncationTag) -> Result<Self> {
        let clifford = CliffordPair::new(dim_e).ok_or_else(|| invalid(format!("dim E = {dim_e} must be even and positive")))?;
        let lh = ball.elements().iter().map(|g| h_len.eval(&ball.group, g)).collect();
        let fv = ball.elements().iter().map(|g| f_len.eval(&ball.group, g)).collect();
        Ok(TruncatedTriple {
            ball,
            sigma,
            h_len,
            f_len,
            clifford,
            tag,
            lh,
            fv,
        })
    }

    /// Same lengths and cocycle on another ball.
    pub fn with_ball(&self, ball: Ball, tag: TruncationTag) -> TruncatedTriple {
        TruncatedTriple::dirac(ball, self.h_len.clone(), self.f_len.clone(), self.sigma.clone(), self.clifford.dim_e, tag)
            .expect("dimension already validated")
    }

    /// The G_n part of this truncation.
    pub fn level_part(&self, n: usize) -> TruncatedTriple {
        self.with_ball(self.ball.restrict_level(n), TruncationTag::Level(n))
    }

    pub fn len(&self) -> usize {
        self.ball.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ball.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.ball.len() * self.clifford.dim_e
    }

    pub fn lh_values(&self) -> &[f64] {
        &self.lh
    }

    pub fn f_values(&self) -> &[f64] {
        &self.fv
    }

    pub fn block(&self, i: usize) -> Block {
        dirac_block(self.lh[i], self.fv[i])
    }

    pub fn dirac_blocks(&self) -> BlockOperator {
        BlockOperator {
            blocks: (0..self.len()).map(|i| self.block(i)).collect(),
            dim_e: self.clifford.dim_e,
        }
    }

    pub fn apply_dirac(&self, x: &[C64]) -> Vec<C64> {
        self.dirac_blocks().apply(x)
    }

    pub fn dirac_matrix(&self) -> CsrMatrix {
        self.dirac_blocks().to_csr()
    }

    pub fn grading(&self) -> BlockOperator {
        BlockOperator {
            blocks: vec![CliffordPair::GRADING; self.len()],
            dim_e: self.clifford.dim_e,
        }
    }

    /// λ(f) ⊗ 1_E.
    pub fn lambda_e(&self, f: &AlgebraElement) -> CsrMatrix {
        let base = lambda_of(&self.sigma, f, &self.ball);
        let de = self.clifford.dim_e;
        let t = base.triplets().flat_map(|(r, c, v)| (0..de).map(move |e| (r * de + e, c * de + e, v))).collect::<Vec<_>>();
        CsrMatrix::from_triplets(self.dim(), self.dim(), t)
    }

    /// Sorted spectrum with multiplicities dim(E)/2 for each sign.
    pub fn spectrum(&self) -> Vec<SpectrumEntry> {
        let mult = self.clifford.copies();
        let mut out = Vec::with_capacity(2 * self.len());
        for (i, g) in self.ball.elements().iter().enumerate() {
            let m = self.lh[i].hypot(self.fv[i]);
            for v in [-m, m] {
                out.push(SpectrumEntry {
                    value: v,
                    multiplicity: mult,
                    element: g.into(),
                });
            }
        }
        out.sort_by(|a, b| a.value.partial_cmp(&b.value).unwrap());
        out
    }

    /// The spectrum as a flat sorted multiset.
    pub fn spectrum_values(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .spectrum()
            .iter()
            .flat_map(|e| std::iter::repeat(e.value).take(e.multiplicity))
            .collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    /// #{eigenvalues of |D| ≤ r} with multiplicity.
    pub fn eigenvalue_counting(&self, r: f64) -> usize {
        let de = self.clifford.dim_e;
        (0..self.len()).filter(|&i| self.lh[i].hypot(self.fv[i]) <= r).count() * de
    }

    fn commutator_with(&self, f: &AlgebraElement, dim_e: usize) -> CsrMatrix {
        let group = &self.ball.group;
        let mut t = Vec::new();
        for (g, c) in f.terms() {
            for (j, h) in self.ball.elements().iter().enumerate() {
                let Some(i) = self.ball.index_of(&group.op(g, h)) else { continue };
                let coef = c * self.sigma.eval(g, h);
                let da = self.lh[i] - self.lh[j];
                let db = self.fv[i] - self.fv[j];
                if da == 0.0 && db == 0.0 {
                    continue;
                }
                let blk = dirac_block(da, db);
                for cp in 0..dim_e / 2 {
                    for r in 0..2 {
                        for s in 0..2 {
                            let v = blk[r][s] * coef;
                            if v != C64::new(0.0, 0.0) {
                                t.push((i * dim_e + 2 * cp + r, j * dim_e + 2 * cp + s, v));
                            }
                        }
                    }
                }
            }
        }
        CsrMatrix::from_triplets(self.len() * dim_e, self.len() * dim_e, t)
    }

    /// [D, λ(f)⊗1_E] on the truncation.
    pub fn commutator(&self, f: &AlgebraElement) -> CsrMatrix {
        self.commutator_with(f, self.clifford.dim_e)
    }

    /// The commutator with one Clifford copy (same norm, smaller matrix).
    pub fn commutator_core(&self, f: &AlgebraElement) -> CsrMatrix {
        self.commutator_with(f, 2)
    }

    /// [M_v, λ(f)] on ℓ²(B) for a multiplication operator given by values on B.
    pub fn multiplication_commutator(&self, values: &[f64], f: &AlgebraElement) -> CsrMatrix {
        scalar_commutator(&self.ball, &self.sigma, values, f)
    }

    /// ‖[D, λ(f)]‖ at this truncation for the self-adjoint part of f.
    pub fn seminorm_lower(&self, f: &AlgebraElement, tol: f64) -> NormEstimate {
        let fs = self_adjoint_part(&self.ball.group, &self.sigma, f);
        op_norm(&self.commutator_core(&fs), tol)
    }

    pub fn seminorm_bracket(&self, f: &AlgebraElement, tol: f64) -> SeminormBracket {
        let group = &self.ball.group;
        let fs = self_adjoint_part(group, &self.sigma, f);
        let lower = op_norm(&self.commutator_core(&fs), tol).value;
        // On the whole group [D, λ_g] multiplies by (𝕃_H(x) − 𝕃_H(g⁻¹x))γ₁ + (𝔽(x) − 𝔽(g⁻¹x))γ₂,
        // and both differences are bounded by the lengths of g.
        let upper = fs
            .terms()
            .iter()
            .map(|(g, c)| c.norm() * self.h_len.eval(group, g).hypot(self.f_len.eval(group, g)))
            .sum::<f64>();
        SeminormBracket {
            lower,
            upper: upper.max(lower),
            radius: self.ball.radius,
        }
    }

    /// ‖ξ‖ + ‖Dξ‖.
    pub fn dn_norm(&self, xi: &[C64]) -> f64 {
        vec_norm(xi) + vec_norm(&self.apply_dirac(xi))
    }

    /// exp(isD) in closed form per block.
    pub fn unitary_dynamics(&self, s: f64) -> BlockOperator {
        let blocks = (0..self.len())
            .map(|i| {
                let (a, b) = (self.lh[i], self.fv[i]);
                let m = a.hypot(b);
                let (cs, sn) = if m == 0.0 { (1.0, 0.0) } else { ((s * m).cos(), (s * m).sin() / m) };
                let k = C64::new(0.0, sn);
                [[C64::new(cs, 0.0) + k * a, k * b], [k * b, C64::new(cs, 0.0) - k * a]]
            })
            .collect();
        BlockOperator {
            blocks,
            dim_e: self.clifford.dim_e,
        }
    }

    /// f(D) through the spectral projections (1 ± B/m)/2 of each block.
    pub fn functional_calculus(&self, f: &dyn Fn(f64) -> C64) -> BlockOperator {
        let blocks = (0..self.len())
            .map(|i| {
                let (a, b) = (self.lh[i], self.fv[i]);
                let m = a.hypot(b);
                if m == 0.0 {
                    let v = f(0.0);
                    return [[v, C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), v]];
                }
                let (fp, fm) = (f(m), f(-m));
                let avg = (fp + fm) * 0.5;
                let dif = (fp - fm) * (0.5 / m);
                [[avg + dif * a, dif * b], [dif * b, avg - dif * a]]
            })
            .collect();
        BlockOperator {
            blocks,
            dim_e: self.clifford.dim_e,
        }
    }

    /// Extends a vector on a sub-truncation by zero.
    pub fn lift_from(&self, sub: &TruncatedTriple, xi: &[C64]) -> Vec<C64> {
        let de = self.clifford.dim_e;
        let mut out = vec![C64::new(0.0, 0.0); self.dim()];
        for (j, g) in sub.ball.elements().iter().enumerate() {
            let i = self.ball.index_of(g).expect("sub-truncation inside this one");
            out[i * de..(i + 1) * de].copy_from_slice(&xi[j * de..(j + 1) * de]);
        }
        out
    }

    pub fn index_of(&self, g: &GroupElement) -> Option<usize> {
        self.ball.index_of(g)
    }
}

/// [M_v, λ(f)] on ℓ²(B): entry (gh, h) = f(g)σ(g,h)(v(gh) − v(h)).
pub fn scalar_commutator(ball: &Ball, sigma: &Cocycle, values: &[f64], f: &AlgebraElement) -> CsrMatrix {
    let group = &ball.group;
    let mut t = Vec::new();
    for (g, c) in f.terms() {
        for (j, h) in ball.elements().iter().enumerate() {
            if let Some(i) = ball.index_of(&group.op(g, h)) {
                let dv = values[i] - values[j];
                if dv != 0.0 {
                    t.push((i, j, c * sigma.eval(g, h) * dv));
                }
            }
        }
    }
    CsrMatrix::from_triplets(ball.len(), ball.len(), t)
}

/// Odd-triple diagnostic ‖[M_𝕃, λ(f)]‖ on ℓ²(B).
pub fn connes_commutator_norm(ball: &Ball, sigma: &Cocycle, length: &LengthFunction, f: &AlgebraElement, tol: f64) -> NormEstimate {
    let values: Vec<f64> = ball.elements().iter().map(|g| length.eval(&ball.group, g)).collect();
    op_norm(&scalar_commutator(ball, sigma, &values, f), tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group_geometry::{enumerate_ball, Group, VecNorm};
    use crate::twisted_algebra::{lambda_of, twisted_convolution};
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(r: f64, dim_e: usize) -> TruncatedTriple {
        let g = Group::solenoid(2, 2).unwrap();
        let s = Cocycle::bicharacter(&g, vec![vec![0.0, 0.3], vec![-0.3, 0.0]]).unwrap();
        let len = LengthFunction::max_of(VecNorm::Max);
        let ball = enumerate_ball(&g, &len, r, 100_000).unwrap();
        TruncatedTriple::dirac(ball, LengthFunction::h(VecNorm::Max), LengthFunction::f(), s, dim_e, TruncationTag::Window).unwrap()
    }

    fn hermitian_eigs(m: &CsrMatrix) -> Vec<f64> {
        let d = m.to_dense();
        let n = d.nrows();
        // realify the Hermitian matrix [[Re, -Im], [Im, Re]]: each eigenvalue doubles
        let mut r = DMatrix::<f64>::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                r[(i, j)] = d[(i, j)].re;
                r[(i + n, j + n)] = d[(i, j)].re;
                r[(i, j + n)] = -d[(i, j)].im;
                r[(i + n, j)] = d[(i, j)].im;
            }
        }
        let mut e: Vec<f64> = r.symmetric_eigen().eigenvalues.iter().copied().collect();
        e.sort_by(|a, b| a.partial_cmp(b).unwrap());
        e.into_iter().step_by(2).collect()
    }

    #[test]
    fn spectrum_matches_dense_diagonalization() {
        let t = setup(1.0, 4);
        let dense = hermitian_eigs(&t.dirac_matrix());
        let ours = t.spectrum_values();
        assert_eq!(dense.len(), ours.len());
        for (a, b) in dense.iter().zip(&ours) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
        assert_eq!(t.eigenvalue_counting(f64::INFINITY), t.dim());
        assert_eq!(t.eigenvalue_counting(0.0), 4);
    }

    #[test]
    fn grading_anticommutes_with_dirac() {
        let t = setup(1.0, 2);
        let d = t.dirac_matrix();
        let g = t.grading().to_csr();
        assert!(d.mul(&g).add(&g.mul(&d)).max_abs() < 1e-14);
        assert!(g.mul(&g).sub(&CsrMatrix::identity(t.dim())).max_abs() < 1e-14);
    }

    #[test]
    fn dynamics_and_functional_calculus_agree() {
        let t = setup(1.0, 2);
        for s in [0.0, 0.3, -2.0, 7.5] {
            let u = t.unitary_dynamics(s);
            let f = t.functional_calculus(&|x: f64| C64::new(0.0, s * x).exp());
            for (a, b) in u.blocks.iter().zip(&f.blocks) {
                for i in 0..2 {
                    for j in 0..2 {
                        assert!((a[i][j] - b[i][j]).norm() < 1e-12);
                    }
                }
            }
            let m = u.to_csr();
            assert!(m.adjoint().mul(&m).sub(&CsrMatrix::identity(t.dim())).max_abs() < 1e-12);
        }
        let abs = t.functional_calculus(&|x: f64| C64::new(x.abs(), 0.0));
        let d = t.dirac_matrix();
        assert!(abs.to_csr().mul(&abs.to_csr()).sub(&d.mul(&d)).max_abs() < 1e-10);
    }

    #[test]
    fn commutator_matches_matrix_product() {
        let t = setup(2.0, 2);
        let group = &t.ball.group;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let small = t.ball.restrict_radius(0.5).elements().to_vec();
        for _ in 0..5 {
            let f = AlgebraElement::random(group, &mut rng, &small, 4);
            let l = t.lambda_e(&f);
            let d = t.dirac_matrix();
            let direct = d.mul(&l).sub(&l.mul(&d));
            assert!(direct.sub(&t.commutator(&f)).max_abs() < 1e-13);
        }
    }

    #[test]
    fn seminorm_bracket_orders_and_monomials_are_exact() {
        let t = setup(2.0, 2);
        let group = t.ball.group.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let small = t.ball.restrict_radius(1.0).elements().to_vec();
        for _ in 0..5 {
            let f = AlgebraElement::random(&group, &mut rng, &small, 5);
            let b = t.seminorm_bracket(&f, 1e-10);
            assert!(b.lower <= b.upper * (1.0 + 1e-12));
        }
        let x = group.dyadic(&[(1, 1), (0, 0)]).unwrap();
        let len = LengthFunction::max_of(VecNorm::Max);
        let est = connes_commutator_norm(&t.ball, &t.sigma, &len, &AlgebraElement::delta(x.clone()), 1e-12);
        assert!(est.converged && est.lower == est.upper);
        assert!(est.value <= len.eval(&group, &x) + 1e-15);
    }

    /// L(fg) ≤ L(f)‖g‖ + ‖f‖L(g) on an inner truncation of a padded ball.
    #[test]
    fn leibniz_on_padded_truncation() {
        let pad = setup(3.0, 2);
        let group = pad.ball.group.clone();
        let inner = pad.with_ball(pad.ball.restrict_radius(1.0), TruncationTag::Window);
        let small = pad.ball.restrict_radius(0.5).elements().to_vec();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..5 {
            let f = AlgebraElement::random(&group, &mut rng, &small, 3);
            let g = AlgebraElement::random(&group, &mut rng, &small, 3);
            let fg = twisted_convolution(&group, &pad.sigma, &f, &g);
            let lhs = op_norm(&inner.commutator_core(&fg), 1e-12).value;
            let lf = op_norm(&pad.commutator_core(&f), 1e-12).upper;
            let lg = op_norm(&pad.commutator_core(&g), 1e-12).upper;
            let nf = f.l1_norm().min(op_norm(&lambda_of(&pad.sigma, &f, &pad.ball), 1e-12).upper);
            let ng = g.l1_norm().min(op_norm(&lambda_of(&pad.sigma, &g, &pad.ball), 1e-12).upper);
            let bound = LEIBNIZ_OMEGA * (lf * ng + nf * lg) + LEIBNIZ_OMEGA_PRIME * lf * lg;
            assert!(lhs <= bound + 1e-9, "{lhs} > {bound}");
        }
    }

    #[test]
    fn lift_from_and_dn_norm() {
        let t = setup(2.0, 2);
        let sub = t.level_part(0);
        let xi: Vec<C64> = (0..sub.dim()).map(|i| C64::new(i as f64, 1.0)).collect();
        let up = t.lift_from(&sub, &xi);
        assert!((t.dn_norm(&up) - sub.dn_norm(&xi)).abs() < 1e-12);
    }
}

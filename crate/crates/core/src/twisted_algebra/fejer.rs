use num_traits::{Signed, ToPrimitive};

use super::element::AlgebraElement;
use crate::group_geometry::{Group, GroupElement};

fn triangle(x: f64, k: f64) -> f64 {
    (1.0 - x.abs() / k).max(0.0)
}

/// Kernel coefficient ĉ_k(g) ∈ [0,1] of the k-th averaging measure on the dual group.
///
/// Solenoid: indicator of G_k times a product of triangle functions.
/// Roots: indicator of μ_{α_k} (the full average over the finite dual), times the
/// Fejér triangle on the ℤ factor. Finite: cyclic Fejér until k reaches N/2, then 1.
pub fn fejer_coefficient(group: &Group, g: &GroupElement, k: usize) -> f64 {
    if k == 0 {
        return if g.is_identity() { 1.0 } else { 0.0 };
    }
    let kf = k as f64;
    match (group, g) {
        (Group::Solenoid { p, .. }, GroupElement::Solenoid { coords, .. }) => {
            if group.level(g) > k {
                return 0.0;
            }
            coords.iter().map(|c| triangle(c.to_f64(*p), kf)).product()
        }
        (Group::RootsOfUnity { .. } | Group::BunceDeddens { .. }, GroupElement::Root { root, z }) => {
            if root.level as usize > k {
                return 0.0;
            }
            triangle(z.abs().to_f64().unwrap_or(f64::INFINITY), kf)
        }
        (Group::Finite { moduli }, GroupElement::Finite(r)) => r
            .iter()
            .zip(moduli)
            .map(|(&x, &m)| {
                if 2 * k > m as usize {
                    1.0
                } else {
                    triangle(x.min(m - x) as f64, kf)
                }
            })
            .product(),
        _ => panic!("element of another family"),
    }
}

/// β^{φ_k}(f): multiply each coefficient by the kernel coefficient.
pub fn fejer_average(group: &Group, f: &AlgebraElement, k: usize) -> AlgebraElement {
    f.map_coefficients(group, |g, c| c * fejer_coefficient(group, g, k))
}

/// Conditional expectation onto C*(G_n): keep the terms inside G_n.
pub fn level_expectation(group: &Group, f: &AlgebraElement, n: usize) -> AlgebraElement {
    f.map_coefficients(group, |g, c| if group.in_level(g, n) { c } else { 0.0.into() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn coefficients_are_symmetric_bounded_and_increasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for group in [
            Group::solenoid(2, 2).unwrap(),
            Group::bunce_deddens(&[2, 6, 30, 210]).unwrap(),
            Group::finite(&[7, 12]).unwrap(),
        ] {
            for _ in 0..300 {
                let g = group.sample(&mut rng, 3, 5);
                let mut prev = 0.0;
                for k in 1..40 {
                    let c = fejer_coefficient(&group, &g, k);
                    assert!((0.0..=1.0).contains(&c));
                    assert_eq!(c, fejer_coefficient(&group, &group.inverse(&g), k));
                    assert!(c >= prev);
                    prev = c;
                }
                assert!(prev > 0.5, "{g}");
            }
            assert_eq!(fejer_coefficient(&group, &group.identity(), 1), 1.0);
        }
    }

    /// The kernel coefficients are positive definite: the Gram matrix on any finite set is PSD.
    #[test]
    fn coefficients_positive_definite_on_finite_group() {
        let group = Group::finite(&[9]).unwrap();
        for k in 1..6 {
            let n = 9;
            // Fourier transform on ℤ/9 must be nonnegative
            for chi in 0..n {
                let mut s = 0.0;
                for x in 0..n {
                    let c = fejer_coefficient(&group, &GroupElement::Finite(vec![x as u64]), k);
                    s += c * (2.0 * std::f64::consts::PI * (chi * x) as f64 / n as f64).cos();
                }
                assert!(s > -1e-12, "k={k} chi={chi} s={s}");
            }
        }
    }

    #[test]
    fn averaging_converges_to_f() {
        let group = Group::solenoid(2, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cands: Vec<_> = (0..20).map(|_| group.sample(&mut rng, 2, 3)).collect();
        let f = AlgebraElement::random(&group, &mut rng, &cands, 6);
        let mut prev = f64::INFINITY;
        for k in 1..200 {
            let d = fejer_average(&group, &f, k).sub(&group, &f).l1_norm();
            assert!(d <= prev + 1e-15);
            prev = d;
        }
        assert!(prev < 0.1);
        let e = AlgebraElement::delta(group.identity());
        assert_eq!(fejer_average(&group, &e, 3), e);
    }
}

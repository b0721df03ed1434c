use std::f64::consts::PI;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::Signed;
use serde::Serialize;

use super::ball::enumerate_ball;
use super::element::GroupElement;
use super::group::Group;
use super::length::{ratio_f64, CircleMetric, LengthFunction, VecNorm};
use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize)]
pub struct HausdorffEstimate {
    pub n: usize,
    pub window_radius: f64,
    pub exact: Option<f64>,
    pub enumerated: f64,
}

/// Distance in 𝕃_H from g to the subgroup G_n (nearest-point rounding, exact inputs).
pub fn distance_to_level(group: &Group, g: &GroupElement, n: usize, norm: VecNorm, circle: CircleMetric) -> f64 {
    match (group, g) {
        (Group::Solenoid { p, .. }, GroupElement::Solenoid { coords, .. }) => {
            let pb = BigInt::from(*p);
            norm.apply(coords.iter().map(|c| {
                if c.exp as usize <= n {
                    return 0.0;
                }
                // c = a / p^e; distance to p^{-n}ℤ is dist(a, p^{e-n}ℤ) / p^e
                let m = pb.pow(c.exp - n as u32);
                let r = c.num.mod_floor(&m);
                let other = &m - &r;
                let best = if other < r { other } else { r };
                let best = best.abs().to_biguint().unwrap_or_default();
                ratio_f64(&best, &pb.pow(c.exp).to_biguint().unwrap_or_default())
            }))
        }
        (Group::RootsOfUnity { tower } | Group::BunceDeddens { tower }, GroupElement::Root { root, .. }) => {
            let lvl = root.level as usize;
            if lvl <= n {
                return 0.0;
            }
            let top = tower.alpha(lvl).expect("level within tower");
            let an = tower.alpha(n).expect("level within tower");
            // ζ = r/α_L turns; distance to (1/α_n)ℤ in turns is dist(r·α_n, α_Lℤ)/(α_L·α_n)
            let t = (&root.residue * an) % top;
            let other: BigUint = top - &t;
            let best = if other < t { other } else { t };
            let turns = ratio_f64(&best, &(top * an));
            circle.of_turns(turns)
        }
        (Group::Finite { .. }, _) => 0.0,
        _ => panic!("element of another family"),
    }
}

/// One-sided Hausdorff distance from the 𝕃-ball of radius R to G_n, measured with 𝕃_H.
pub fn hausdorff_subgroup_distance(
    group: &Group,
    window: &LengthFunction,
    h: (VecNorm, CircleMetric),
    n: usize,
    radius: f64,
    budget: usize,
) -> Result<HausdorffEstimate> {
    if group.is_finite() {
        return Err(Error::FamilyMismatch("Hausdorff distances need an infinite family".into()));
    }
    let ball = enumerate_ball(group, window, radius, budget)?;
    let enumerated = ball
        .elements()
        .iter()
        .map(|g| distance_to_level(group, g, n, h.0, h.1))
        .fold(0.0, f64::max);
    let exact = match (group, h) {
        (Group::Solenoid { p, .. }, (VecNorm::Max, _)) => Some(0.5 / (*p as f64).powi(n as i32)),
        (Group::RootsOfUnity { tower } | Group::BunceDeddens { tower }, (_, CircleMetric::Arc)) => {
            Some(PI / tower.alpha_f64(n))
        }
        _ => None,
    };
    Ok(HausdorffEstimate {
        n,
        window_radius: radius,
        exact,
        enumerated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group_geometry::ball::DEFAULT_BUDGET;

    fn brute_distance_solenoid(group: &Group, g: &GroupElement, n: usize) -> f64 {
        // min over lattice points of G_n in a neighbourhood, max-norm
        let xs = g.coords_f64(|_| 1.0);
        let s = match group {
            Group::Solenoid { p, .. } => (*p as f64).powi(n as i32),
            _ => unreachable!(),
        };
        xs.iter()
            .map(|x| {
                let c = (x * s).floor() as i64;
                (c - 2..=c + 2).map(|k| (x - k as f64 / s).abs()).fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn dyadic_level_three() {
        let g = Group::solenoid(2, 1).unwrap();
        let window = LengthFunction::max_of(VecNorm::Max);
        let est = hausdorff_subgroup_distance(&g, &window, (VecNorm::Max, CircleMetric::Arc), 3, 32.0, DEFAULT_BUDGET).unwrap();
        assert_eq!(est.exact, Some(1.0 / 16.0));
        assert_eq!(est.enumerated, 1.0 / 16.0);
        let ball = enumerate_ball(&g, &window, 32.0, DEFAULT_BUDGET).unwrap();
        let brute = ball.elements().iter().map(|e| brute_distance_solenoid(&g, e, 3)).fold(0.0, f64::max);
        assert_eq!(brute, 1.0 / 16.0);
    }

    #[test]
    fn saturated_window_is_zero() {
        let g = Group::solenoid(2, 2).unwrap();
        let window = LengthFunction::max_of(VecNorm::Max);
        let est = hausdorff_subgroup_distance(&g, &window, (VecNorm::Max, CircleMetric::Arc), 3, 8.0, DEFAULT_BUDGET).unwrap();
        assert_eq!(est.enumerated, 0.0);
    }

    #[test]
    fn odd_prime_is_below_exact() {
        let g = Group::solenoid(3, 1).unwrap();
        let window = LengthFunction::max_of(VecNorm::Max);
        let est = hausdorff_subgroup_distance(&g, &window, (VecNorm::Max, CircleMetric::Arc), 1, 81.0, DEFAULT_BUDGET).unwrap();
        let exact = est.exact.unwrap();
        assert!(est.enumerated < exact);
        // closest approach from levels ≤ 4: (3^3 − 1)/(2·3^3) · 1/3
        assert!((est.enumerated - 13.0 / 81.0).abs() < 1e-15);
    }

    #[test]
    fn roots_arc_length() {
        let g = Group::roots_of_unity(&[2, 4, 8, 16, 32]).unwrap();
        let window = LengthFunction::max_of(VecNorm::Max);
        for n in 1..4 {
            let est = hausdorff_subgroup_distance(&g, &window, (VecNorm::Max, CircleMetric::Arc), n, 32.0, DEFAULT_BUDGET).unwrap();
            let exact = est.exact.unwrap();
            assert!((exact - PI / 2f64.powi(n as i32)).abs() < 1e-15);
            // brute force: every root of order ≤ 32, nearest α_n-th root by scanning
            let an = 2f64.powi(n as i32);
            let mut brute: f64 = 0.0;
            for r in 0..32 {
                let t = r as f64 / 32.0;
                let d = (0..=an as i64).map(|k| (t - k as f64 / an).abs()).fold(f64::INFINITY, f64::min);
                brute = brute.max(2.0 * PI * d);
            }
            assert!((est.enumerated - brute).abs() < 1e-12);
            assert!((est.enumerated - exact).abs() < 1e-12);
        }
    }
}

use proptest::prelude::*;

use solenoid_triples::group_geometry::{Group, GroupElement, LengthFunction, VecNorm};
use solenoid_triples::quantum_metric::FiniteQcms;
use solenoid_triples::twisted_algebra::fejer_coefficient;

fn solenoid_element(g: &Group, c: &[(i64, u32)]) -> GroupElement {
    g.dyadic(c).unwrap()
}

fn coords() -> impl Strategy<Value = Vec<(i64, u32)>> {
    prop::collection::vec((-200i64..200, 0u32..6), 2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn solenoid_length_is_symmetric_and_subadditive(a in coords(), b in coords()) {
        let g = Group::solenoid(2, 2).unwrap();
        let (x, y) = (solenoid_element(&g, &a), solenoid_element(&g, &b));
        for len in [LengthFunction::max_of(VecNorm::Max), LengthFunction::sum_of(VecNorm::L1)] {
            let (lx, ly) = (len.eval(&g, &x), len.eval(&g, &y));
            prop_assert_eq!(lx, len.eval(&g, &g.inverse(&x)));
            prop_assert!(len.eval(&g, &g.op(&x, &y)) <= lx + ly + 1e-12);
            prop_assert_eq!(lx == 0.0, x == g.identity());
        }
    }

    #[test]
    fn fejer_coefficients_bounded_symmetric_monotone(a in coords(), k in 1usize..40) {
        let g = Group::solenoid(2, 2).unwrap();
        let x = solenoid_element(&g, &a);
        let c = fejer_coefficient(&g, &x, k);
        prop_assert!((0.0..=1.0).contains(&c));
        prop_assert_eq!(c, fejer_coefficient(&g, &g.inverse(&x), k));
        prop_assert!(fejer_coefficient(&g, &x, k + 1) >= c);
    }

    #[test]
    fn line_kantorovich_is_a_metric(
        pts in prop::collection::btree_set(-64i32..64, 3..6),
        w in prop::collection::vec(1u32..9, 18),
    ) {
        let coords: Vec<f64> = pts.into_iter().map(|v| v as f64 / 8.0).collect();
        let m = coords.len();
        let state = |k: usize| {
            let raw = &w[k * 6..k * 6 + m];
            let total: u32 = raw.iter().sum();
            raw.iter().map(|&v| v as f64 / total as f64).collect::<Vec<f64>>()
        };
        let (p, q, r) = (state(0), state(1), state(2));
        let space = FiniteQcms::line(&coords).unwrap();
        let d = |a: &[f64], b: &[f64]| space.kantorovich(a, b).unwrap();
        prop_assert!(d(&p, &p).abs() < 1e-12);
        prop_assert!((d(&p, &q) - d(&q, &p)).abs() < 1e-12);
        prop_assert!(d(&p, &r) <= d(&p, &q) + d(&q, &r) + 1e-12);
    }
}

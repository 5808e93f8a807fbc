use hyperlab_core::connect::{crossing_count, minimal_segment, ConnectOptions};
use hyperlab_core::disc::*;
use hyperlab_core::group::genus2_group;
use hyperlab_core::metric::{hyperbolic_norm, randers_exact};
use proptest::prelude::*;

fn point(r: f64, a: f64) -> C64 {
    C64::from_polar(r, a)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distance_is_a_metric(r1 in 0.0..0.95f64, a1 in 0.0..6.28f64, r2 in 0.0..0.95f64, a2 in 0.0..6.28f64, r3 in 0.0..0.95f64, a3 in 0.0..6.28f64) {
        let (x, y, z) = (point(r1, a1), point(r2, a2), point(r3, a3));
        prop_assert!((distance(x, y) - distance(y, x)).abs() <= 1e-12 * (1.0 + distance(x, y)));
        prop_assert!(distance(x, z) <= distance(x, y) + distance(y, z) + 1e-9);
    }

    #[test]
    fn mobius_maps_are_isometries(r in 0.0..0.9f64, a in 0.0..6.28f64, th in 0.0..6.28f64, r1 in 0.0..0.9f64, a1 in 0.0..6.28f64, r2 in 0.0..0.9f64, a2 in 0.0..6.28f64) {
        let m = MobiusMap::translation_to(point(r, a)).compose(&MobiusMap::rotation(th));
        let (x, y) = (point(r1, a1), point(r2, a2));
        let d = distance(x, y);
        prop_assert!((distance(m.apply(x), m.apply(y)) - d).abs() <= 1e-9 * (1.0 + d));
    }

    #[test]
    fn reduction_lands_in_the_domain_and_is_idempotent(r in 0.0..0.97f64, a in 0.0..6.28f64) {
        let g = genus2_group();
        let x = DiscPoint::from_complex(point(r, a)).unwrap();
        let (rep, word) = g.reduce_to_domain(x).unwrap();
        prop_assert!(g.in_domain(rep.z(), 1e-9));
        prop_assert!(distance(word.apply(x.z()), rep.z()) <= 1e-8);
        let (again, w2) = g.reduce_to_domain(rep).unwrap();
        prop_assert!(distance(again.z(), rep.z()) <= 1e-12);
        prop_assert!(w2.is_identity_word());
    }

    #[test]
    fn tanh_law_on_every_diameter(a in 0.0..6.28f64, t in -6.0..6.0f64) {
        let g = HyperbolicGeodesic::through_boundary(BoundaryDirection::new(a + std::f64::consts::PI), BoundaryDirection::new(a)).unwrap();
        let z = g.point_c(t);
        prop_assert!((z - point((0.5 * t).tanh(), a)).norm() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn randers_distance_is_the_shifted_hyperbolic_distance(r1 in 0.0..0.8f64, a1 in 0.0..6.28f64, r2 in 0.0..0.8f64, a2 in 0.0..6.28f64) {
        let m = randers_exact(0.2).unwrap();
        let (x, y) = (point(r1, a1), point(r2, a2));
        prop_assume!(distance(x, y) > 1e-3);
        let opts = ConnectOptions::default();
        let fwd = minimal_segment(m.as_ref(), DiscPoint::from_complex(x).unwrap(), DiscPoint::from_complex(y).unwrap(), &opts).unwrap();
        let back = minimal_segment(m.as_ref(), DiscPoint::from_complex(y).unwrap(), DiscPoint::from_complex(x).unwrap(), &opts).unwrap();
        let d = distance(x, y);
        prop_assert!((fwd.length - d - 0.2 * (y.re - x.re)).abs() <= 1e-5 * (1.0 + d));
        prop_assert!((fwd.length - back.length - 0.4 * (y.re - x.re)).abs() <= 1e-5 * (1.0 + d));
    }

    #[test]
    fn hyperbolic_segments_cross_at_most_once(a in 0.0..6.28f64, b in 0.0..6.28f64, s in 0.5..4.0f64) {
        let m = hyperbolic_norm();
        let opts = ConnectOptions::default();
        let seg = |c: f64| {
            let g = HyperbolicGeodesic::through_boundary(BoundaryDirection::new(c + std::f64::consts::PI), BoundaryDirection::new(c)).unwrap();
            minimal_segment(m.as_ref(), g.point(-s), g.point(s), &opts).unwrap()
        };
        let (p, q) = (seg(a), seg(b));
        let r = crossing_count(&p.path, &q.path);
        prop_assert!(r.transverse <= 1);
    }
}

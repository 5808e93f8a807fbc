//! Bounding pairs under the bump metric: equivariance and strip confinement.

use hyperlab_core::asymptotic::{bounding_geodesics, distance_to_path, offset_at, BoundingOptions};
use hyperlab_core::disc::*;
use hyperlab_core::group::genus2_group;
use hyperlab_core::kam::{busemann_along, calibrated_ray, BusemannOptions, Region};
use hyperlab_core::metric::conformal_bump;

fn opts() -> BoundingOptions {
    BoundingOptions {
        d_est: 0.4,
        ..Default::default()
    }
}

#[test]
fn bounding_pair_commutes_with_the_deck_group() {
    let group = genus2_group();
    let metric = conformal_bump(&group, 0.5, 0.8).unwrap();
    let g = HyperbolicGeodesic::through_boundary(BoundaryDirection::new(3.7), BoundaryDirection::new(0.9)).unwrap();
    let tau = group.parse_word("b").unwrap().map;
    let pair = bounding_geodesics(metric.as_ref(), &g, &opts()).unwrap();
    let image = bounding_geodesics(metric.as_ref(), &g.mapped(&tau), &opts()).unwrap();
    assert!(pair.converged && image.converged);
    let moved = pair.mapped(&tau);
    let line = moved.background;
    let window = 0.25 * pair.horizon;
    let mut worst: f64 = 0.0;
    for (mine, theirs) in [(&moved.c0, &image.c0), (&moved.c1, &image.c1)] {
        for s in &mine.samples {
            if line.fermi_coordinates(s.z).0.abs() <= window {
                worst = worst.max(distance_to_path(s.z, theirs));
            }
        }
    }
    assert!(worst <= 1e-4, "equivariance defect {worst:e}");
}

#[test]
fn calibrated_rays_stay_in_the_strip() {
    let group = genus2_group();
    let metric = conformal_bump(&group, 0.5, 0.8).unwrap();
    let axis = HyperbolicGeodesic::through_boundary(BoundaryDirection::new(std::f64::consts::PI), BoundaryDirection::new(0.0)).unwrap();
    let pair = bounding_geodesics(metric.as_ref(), &axis, &opts()).unwrap();
    assert!(pair.converged);
    let lo = offset_at(&axis, &pair.c0, 0.0).unwrap();
    let hi = offset_at(&axis, &pair.c1, 0.0).unwrap();
    assert!(hi - lo > 0.3, "strip collapsed: [{lo}, {hi}]");

    let t_max = 0.5 * pair.horizon;
    let busemann_opts = BusemannOptions {
        spacing: 0.3,
        ..Default::default()
    };
    for frac in [0.2, 0.4, 0.65, 0.85] {
        let x = DiscPoint::from_complex(axis.fermi_point(0.0, lo + frac * (hi - lo))).unwrap();
        let region = Region::new(x, 0.35).unwrap();
        let u = busemann_along(&metric, x, axis, region, &busemann_opts).unwrap();
        let ray = calibrated_ray(&u, x, t_max - 1.0).unwrap();
        for s in &ray.ray.samples {
            let (t, off) = axis.fermi_coordinates(s.z);
            if t.abs() > t_max {
                continue;
            }
            let a = offset_at(&axis, &pair.c0, t).unwrap();
            let b = offset_at(&axis, &pair.c1, t).unwrap();
            assert!(
                off >= a - 1e-3 && off <= b + 1e-3,
                "ray from fraction {frac} leaves the strip at t = {t}: {off} not in [{a}, {b}]"
            );
        }
    }
}

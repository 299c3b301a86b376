mod common;

use std::f64::consts::{PI, TAU};

use blockage_core::geom2d::{convex_intersect, minkowski_segment_rect, polygon_area, union_area, ConvexPolygon, Point2};
use blockage_core::shapes::{blocking_region, Link};
use common::{raster_union_area, random_hexagon, region_area_closed_form};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn point() -> impl Strategy<Value = Point2> {
    (-100.0..100.0f64, -100.0..100.0f64).prop_map(|(x, y)| Point2::new(x, y))
}

fn hexagon() -> impl Strategy<Value = ConvexPolygon> {
    (point(), point(), 0.0..20.0f64, 0.0..20.0f64, 0.0..PI)
        .prop_map(|(a, b, l, w, t)| minkowski_segment_rect(a, b, l, w, t).unwrap())
}

fn transform(p: &ConvexPolygon, shift: Point2, angle: f64) -> ConvexPolygon {
    let (c, s) = (angle.cos(), angle.sin());
    let pts: Vec<Point2> = p
        .vertices()
        .iter()
        .map(|v| Point2::new(c * v.x - s * v.y, s * v.x + c * v.y) + shift)
        .collect();
    ConvexPolygon::hull(&pts)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn union_is_subadditive_and_monotone(polys in prop::collection::vec(hexagon(), 1..6), extra in hexagon()) {
        let u = union_area(&polys);
        let sum: f64 = polys.iter().map(polygon_area).sum();
        prop_assert!(u <= sum * (1.0 + 1e-9) + 1e-9);
        let mut more = polys.clone();
        more.push(extra);
        prop_assert!(union_area(&more) >= u - 1e-9 * (1.0 + u));
    }

    #[test]
    fn union_of_one_is_its_area(p in hexagon()) {
        let a = polygon_area(&p);
        prop_assert!((union_area(&[p]) - a).abs() <= 1e-12 * (1.0 + a));
    }

    #[test]
    fn minkowski_area_formula(a in point(), b in point(), l in 0.0..30.0f64, w in 0.0..30.0f64, theta in 0.0..PI) {
        let poly = minkowski_segment_rect(a, b, l, w, theta).unwrap();
        let delta = theta - (b.y - a.y).atan2(b.x - a.x);
        let want = a.distance(b) * (l * delta.sin().abs() + w * delta.cos().abs()) + l * w;
        prop_assert!((polygon_area(&poly) - want).abs() <= 1e-12 * want.max(1.0), "{} vs {}", polygon_area(&poly), want);
    }

    #[test]
    fn intersection_bounded_and_commutative(a in hexagon(), b in hexagon()) {
        let ab = polygon_area(&convex_intersect(&a, &b));
        let ba = polygon_area(&convex_intersect(&b, &a));
        let scale = polygon_area(&a).max(polygon_area(&b)).max(1.0);
        prop_assert!(ab <= polygon_area(&a).min(polygon_area(&b)) + 1e-9 * scale);
        prop_assert!((ab - ba).abs() <= 1e-12 * scale);
    }

    #[test]
    fn rigid_motions_preserve_areas(polys in prop::collection::vec(hexagon(), 2..5), shift in point(), angle in 0.0..TAU) {
        let moved: Vec<ConvexPolygon> = polys.iter().map(|p| transform(p, shift, angle)).collect();
        let (u0, u1) = (union_area(&polys), union_area(&moved));
        prop_assert!((u0 - u1).abs() <= 1e-9 * u0.max(1.0));
        let (i0, i1) = (polygon_area(&convex_intersect(&polys[0], &polys[1])), polygon_area(&convex_intersect(&moved[0], &moved[1])));
        prop_assert!((i0 - i1).abs() <= 1e-9 * polygon_area(&polys[0]).max(1.0));
    }

    #[test]
    fn region_area_matches_piecewise_formula(
        a in point(), b in point(), ha in 0.0..50.0f64, hb in 0.0..50.0f64,
        l in 0.0..30.0f64, w in 0.0..30.0f64, h in 0.0..60.0f64, theta in 0.0..PI,
    ) {
        let link = Link::new(a, b, ha, hb).unwrap();
        let got = polygon_area(&blocking_region(&link, l, w, h, theta).unwrap());
        let want = region_area_closed_form(&link, l, w, h, theta);
        prop_assert!((got - want).abs() <= 1e-9 * want.max(1e-6), "{got} vs {want}");
    }
}

#[test]
fn union_matches_raster_on_small_scenes() {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..40 {
        let n = rng.gen_range(2..=6);
        let polys: Vec<ConvexPolygon> = (0..n).map(|_| random_hexagon(&mut rng, 6.0)).collect();
        let exact = union_area(&polys);
        let raster = raster_union_area(&polys, 1e-3);
        worst = worst.max((exact - raster).abs() / exact);
    }
    assert!(worst < 5e-3, "worst relative deviation {worst}");
}

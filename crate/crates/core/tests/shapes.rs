mod common;

use blockage_core::geom2d::Point2;
use blockage_core::multilink::{expected_blockers_union, QuadratureSpec};
use blockage_core::shapes::{eta, expected_blockers, mu, p_blocked, p_footprint, Link, ScalarDist, ShapeDistribution};
use common::{eta_numeric, mu_numeric};
use proptest::prelude::*;

fn link(d: f64, ha: f64, hb: f64) -> Link {
    Link::new(Point2::ORIGIN, Point2::new(d, 0.0), ha, hb).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn height_factors_match_integration(h0 in 0.0..60.0f64, h1 in 0.0..60.0f64, hmax in 0.1..60.0f64, same in any::<bool>()) {
        let h1 = if same { h0 } else { h1 };
        let hd = ScalarDist::uniform(hmax);
        let (hi, lo) = (h0.max(h1), h0.min(h1));
        prop_assert!((eta(hi, lo, Some(&hd)).unwrap() - eta_numeric(hi, lo, &hd)).abs() < 1e-10);
        prop_assert!((mu(lo, Some(&hd)) - mu_numeric(lo, &hd)).abs() < 1e-10);
    }

    #[test]
    fn deterministic_height_factors(h0 in 0.0..60.0f64, h1 in 0.0..60.0f64, hb in 0.0..60.0f64) {
        let hd = ScalarDist::deterministic(hb);
        let (hi, lo) = (h0.max(h1), h0.min(h1));
        prop_assume!((hb - hi).abs() > 1e-6 && (hb - lo).abs() > 1e-6);
        prop_assert!((eta(hi, lo, Some(&hd)).unwrap() - eta_numeric(hi, lo, &hd)).abs() < 1e-9);
    }

    #[test]
    fn monotone_in_density_distance_and_sizes(
        d in 0.0..300.0f64, dd in 0.0..50.0f64, lambda in 0.0..5e-4f64, dl in 0.0..1e-4f64,
        lmax in 0.0..40.0f64, grow in 0.0..10.0f64,
    ) {
        let mut base = ShapeDistribution::urban_default(lambda);
        base.length = ScalarDist::uniform(lmax);
        let k = |dist: &ShapeDistribution, d: f64| expected_blockers(&link(d, 40.0, 1.5), dist).unwrap();
        let k0 = k(&base, d);
        prop_assert!(k(&base.with_density(lambda + dl), d) >= k0);
        prop_assert!(k(&base, d + dd) >= k0);
        let mut bigger = base;
        bigger.length = ScalarDist::uniform(lmax + grow);
        prop_assert!(k(&bigger, d) >= k0 - 1e-15);
        bigger = base;
        bigger.height = Some(ScalarDist::uniform(30.0 + grow));
        prop_assert!(k(&bigger, d) >= k0 - 1e-15);
    }

    #[test]
    fn blockage_probability_range(d in 0.0..5000.0f64, lambda in 0.0..1e-3f64) {
        let dist = ShapeDistribution::urban_default(lambda);
        let p = p_blocked(&link(d, 40.0, 1.5), &dist).unwrap();
        prop_assert!((0.0..1.0).contains(&p));
    }
}

#[test]
fn zero_length_link_sees_only_footprints() {
    for lambda in [1e-4, 2.2e-4] {
        let dist = ShapeDistribution::urban_default(lambda);
        let want = 1.0 - (-mu(1.5, dist.height.as_ref()) * p_footprint(&dist)).exp();
        let got = p_blocked(&link(0.0, 40.0, 1.5), &dist).unwrap();
        assert!((got - want).abs() <= 1e-14 * want, "{got} vs {want}");
    }
    let dist = ShapeDistribution::urban_default(1e-4);
    assert!((p_blocked(&link(0.0, 40.0, 1.5), &dist).unwrap() - 0.021148).abs() < 5e-7);
}

#[test]
fn closed_form_matches_region_quadrature() {
    let q = QuadratureSpec::default();
    for (d, ha, hb, lambda) in [(300.0, 40.0, 1.5, 1e-4), (120.0, 1.5, 40.0, 2.2e-4), (57.0, 20.0, 3.0, 1e-4), (0.0, 40.0, 1.5, 1e-4)] {
        let l = link(d, ha, hb);
        let dist = ShapeDistribution::urban_default(lambda);
        let closed = expected_blockers(&l, &dist).unwrap();
        let quad = expected_blockers_union(&[l], &dist, &q).unwrap();
        assert!((closed - quad).abs() <= 1e-4 * closed, "d={d}: {closed} vs {quad}");
    }
    // infinitely tall segments: the line model βd
    let mut dist = ShapeDistribution::urban_default(1e-4);
    dist.height = None;
    dist.width = ScalarDist::deterministic(0.0);
    let l = link(200.0, 40.0, 1.5);
    let closed = expected_blockers(&l, &dist).unwrap();
    assert!((closed - 2.0 * 1e-4 * 15.0 / std::f64::consts::PI * 200.0).abs() < 1e-12);
    let quad = expected_blockers_union(&[l], &dist, &q).unwrap();
    assert!((closed - quad).abs() <= 1e-4 * closed);
}

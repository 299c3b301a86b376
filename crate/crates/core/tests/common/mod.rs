//! Oracles shared by the integration tests. Each one recomputes a quantity by
//! a route that does not go through the code under test.
#![allow(dead_code)]

use blockage_core::geom2d::{ConvexPolygon, Point2};
use blockage_core::shapes::{Link, ScalarDist};
use rand::Rng;

/// Area of a union of convex polygons by counting cell centers of a square
/// grid with spacing `cell`, row by row.
pub fn raster_union_area(polys: &[ConvexPolygon], cell: f64) -> f64 {
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in polys {
        for v in p.vertices() {
            y0 = y0.min(v.y);
            y1 = y1.max(v.y);
        }
    }
    if !y0.is_finite() {
        return 0.0;
    }
    let mut count: u64 = 0;
    let mut spans: Vec<(f64, f64)> = Vec::new();
    let mut row = (y0 / cell).floor() as i64;
    loop {
        let y = (row as f64 + 0.5) * cell;
        if y > y1 {
            break;
        }
        spans.clear();
        spans.extend(polys.iter().filter_map(|p| row_span(p.vertices(), y)));
        spans.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut cur: Option<(f64, f64)> = None;
        for &(a, b) in &spans {
            cur = match cur {
                Some((ca, cb)) if a <= cb => Some((ca, cb.max(b))),
                Some(done) => {
                    count += centers_in(done, cell);
                    Some((a, b))
                }
                None => Some((a, b)),
            };
        }
        if let Some(done) = cur {
            count += centers_in(done, cell);
        }
        row += 1;
    }
    count as f64 * cell * cell
}

/// Chord of a convex polygon along the horizontal line `y`, from its edge crossings.
fn row_span(vs: &[Point2], y: f64) -> Option<(f64, f64)> {
    if vs.len() < 3 {
        return None;
    }
    let xs: Vec<f64> = (0..vs.len())
        .filter_map(|i| {
            let (a, b) = (vs[i], vs[(i + 1) % vs.len()]);
            let crosses = (a.y <= y && y <= b.y) || (b.y <= y && y <= a.y);
            match (crosses, a.y == b.y) {
                (false, _) => None,
                (true, true) => Some(a.x.min(b.x)),
                (true, false) => Some(a.x + (y - a.y) / (b.y - a.y) * (b.x - a.x)),
            }
        })
        .collect();
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo <= hi).then_some((lo, hi))
}

/// Number of `(k + ½)·cell` inside `[a, b]`.
fn centers_in((a, b): (f64, f64), cell: f64) -> u64 {
    let first = (a / cell - 0.5).ceil() as i64;
    let last = (b / cell - 0.5).floor() as i64;
    (last - first + 1).max(0) as u64
}

/// Blocking-region area from the piecewise formula: zero below the low
/// endpoint, otherwise `d'(l|sin δ| + w|cos δ|) + lw` with `d'` the part of
/// the link below the blocker top and `δ` the angle to the link.
pub fn region_area_closed_form(link: &Link, l: f64, w: f64, h: f64, theta: f64) -> f64 {
    let (lo, hi) = (link.height_a.min(link.height_b), link.height_a.max(link.height_b));
    if h < lo {
        return 0.0;
    }
    let d = link.length();
    let d_eff = if h >= hi { d } else { d * (h - lo) / (hi - lo) };
    let azimuth = (link.b.y - link.a.y).atan2(link.b.x - link.a.x);
    let delta = theta - azimuth;
    d_eff * (l * delta.sin().abs() + w * delta.cos().abs()) + l * w
}

/// `1 − (1/(h0−h1)) ∫_{h1}^{h0} F_H` by composite Simpson on pieces split at
/// the kinks of the cdf; `1 − F_H(h0)` when the heights coincide.
pub fn eta_numeric(h0: f64, h1: f64, hd: &ScalarDist) -> f64 {
    let cdf = |x: f64| match *hd {
        ScalarDist::Uniform { max } if max > 0.0 => (x / max).clamp(0.0, 1.0),
        ScalarDist::Uniform { .. } => 1.0,
        ScalarDist::Deterministic { value } => (x >= value) as u8 as f64,
    };
    let (lo, hi) = (h0.min(h1), h0.max(h1));
    if hi - lo < 1e-12 {
        return 1.0 - cdf(hi);
    }
    let mut cuts = vec![lo, hi];
    let kink = hd.upper();
    if kink > lo && kink < hi {
        cuts.insert(1, kink);
    }
    let mut integral = 0.0;
    for c in cuts.windows(2) {
        let (a, b) = (c[0], c[1]);
        let n = 200;
        let step = (b - a) / n as f64;
        // sample strictly inside the piece so a jump at an end never leaks in
        let f = |x: f64| cdf(x.clamp(a + 1e-12 * (b - a), b - 1e-12 * (b - a)));
        let mut s = f(a) + f(b);
        for k in 1..n {
            s += f(a + k as f64 * step) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        integral += s * step / 3.0;
    }
    1.0 - integral / (hi - lo)
}

pub fn mu_numeric(h1: f64, hd: &ScalarDist) -> f64 {
    eta_numeric(h1, h1, hd)
}

pub fn random_link<R: Rng>(rng: &mut R, extent: f64) -> Link {
    let a = Point2::new(rng.gen_range(-extent..extent), rng.gen_range(-extent..extent));
    let b = Point2::new(rng.gen_range(-extent..extent), rng.gen_range(-extent..extent));
    Link::new(a, b, rng.gen_range(0.0..50.0), rng.gen_range(0.0..50.0)).unwrap()
}

/// A random hexagon: the footprint of a random rectangle swept along a random
/// short segment, all inside a `scene`-sized box.
pub fn random_hexagon<R: Rng>(rng: &mut R, scene: f64) -> ConvexPolygon {
    let c = Point2::new(rng.gen_range(0.0..scene), rng.gen_range(0.0..scene));
    let dir = Point2::polar(rng.gen_range(0.5..scene / 3.0), rng.gen_range(0.0..std::f64::consts::TAU));
    blockage_core::geom2d::minkowski_segment_rect(
        c,
        c + dir,
        rng.gen_range(0.2..scene / 4.0),
        rng.gen_range(0.2..scene / 4.0),
        rng.gen_range(0.0..std::f64::consts::PI),
    )
    .unwrap()
}

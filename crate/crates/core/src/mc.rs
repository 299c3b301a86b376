//! Monte Carlo oracle: Poisson scenes of box-shaped blockers, tested link by
//! link in 3D.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::error::{invalid, BlockageError, Result};
use crate::geom2d::Point2;
use crate::multilink::{LinkSet, PathSet};
use crate::shapes::{Link, ScalarDist, ShapeDistribution};

/// Rejected scenes allowed per trial before conditioning is declared hopeless.
pub const MAX_ATTEMPTS_PER_TRIAL: u64 = 10_000;

/// Minimum acceptance rate of the conditioning on clear links.
pub const MIN_ACCEPTANCE: f64 = 1e-3;

/// One realized obstacle: an upright box standing on the ground.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Blocker {
    pub center: Point2,
    pub length: f64,
    pub width: f64,
    /// `f64::INFINITY` for obstacles without height.
    pub height: f64,
    /// Direction of the length side, in `[0, π)`.
    pub orientation: f64,
}

/// Disc on which blocker centers are scattered.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleRegion {
    pub center: Point2,
    pub radius: f64,
}

impl SampleRegion {
    pub fn new(center: Point2, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) || !center.is_finite() {
            return Err(invalid(format!("sample region needs a finite center and radius > 0, got {radius}")));
        }
        Ok(Self { center, radius })
    }

    /// Disc around a cell of radius `cell_radius` at the origin, grown by the
    /// largest footprint half-diagonal so blockers centered outside the cell
    /// still get the chance to cut links inside it.
    pub fn for_cell(cell_radius: f64, dist: &ShapeDistribution) -> Result<Self> {
        Self::new(Point2::ORIGIN, cell_radius + dist.max_footprint_radius())
    }

    /// Smallest disc around the links' bounding box that contains every
    /// blocker able to touch any of them.
    pub fn covering(links: &[Link], dist: &ShapeDistribution) -> Result<Self> {
        if links.is_empty() {
            return Err(invalid("cannot cover an empty link list"));
        }
        let pts: Vec<Point2> = links.iter().flat_map(|l| [l.a, l.b]).collect();
        let (mut lo, mut hi) = (pts[0], pts[0]);
        for p in &pts {
            lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let center = (lo + hi) * 0.5;
        let reach = pts.iter().map(|p| p.distance(center)).fold(0.0, f64::max);
        // a small floor keeps the disc valid for zero-length links and point footprints
        Self::new(center, (reach + dist.max_footprint_radius()).max(1e-6))
    }

    pub fn area(&self) -> f64 {
        std::f64::consts::PI * self.radius * self.radius
    }

    fn sample_point<R: Rng>(&self, rng: &mut R) -> Point2 {
        let r = self.radius * rng.gen::<f64>().sqrt();
        let a = rng.gen_range(0.0..std::f64::consts::TAU);
        self.center + Point2::polar(r, a)
    }
}

/// Empirical probability with its binomial standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub p_hat: f64,
    pub stderr: f64,
    pub trials: u64,
}

impl Estimate {
    pub fn from_counts(hits: u64, trials: u64) -> Self {
        let p = hits as f64 / trials as f64;
        Self { p_hat: p, stderr: (p * (1.0 - p) / trials as f64).sqrt(), trials }
    }

    /// Wilson score interval at `z` standard deviations.
    pub fn wilson(&self, z: f64) -> (f64, f64) {
        let n = self.trials as f64;
        let z2 = z * z;
        let denom = 1.0 + z2 / n;
        let mid = (self.p_hat + z2 / (2.0 * n)) / denom;
        let half = z * (self.p_hat * (1.0 - self.p_hat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
        ((mid - half).max(0.0), (mid + half).min(1.0))
    }

    /// Whether `p` lies within `k` standard errors of the estimate. A zero
    /// standard error (all or no hits) falls back to the Wilson interval.
    pub fn agrees_with(&self, p: f64, k: f64) -> bool {
        if self.stderr > 0.0 {
            (p - self.p_hat).abs() <= k * self.stderr
        } else {
            let (lo, hi) = self.wilson(k);
            (lo..=hi).contains(&p)
        }
    }
}

fn draw<R: Rng>(d: &ScalarDist, rng: &mut R) -> f64 {
    match *d {
        ScalarDist::Uniform { max } => max * rng.gen::<f64>(),
        ScalarDist::Deterministic { value } => value,
    }
}

/// One Poisson scene: `Poisson(λ·area)` blockers with i.i.d. shapes and
/// centers uniform on the disc.
pub fn sample_scene<R: Rng>(region: &SampleRegion, dist: &ShapeDistribution, rng: &mut R) -> Vec<Blocker> {
    let mean = dist.density * region.area();
    let count = if mean > 0.0 {
        Poisson::new(mean).map(|p| p.sample(rng) as usize).unwrap_or(0)
    } else {
        0
    };
    (0..count)
        .map(|_| {
            let center = region.sample_point(rng);
            let length = draw(&dist.length, rng);
            let width = draw(&dist.width, rng);
            let height = dist.height.as_ref().map_or(f64::INFINITY, |h| draw(h, rng));
            let orientation = draw(&dist.orientation, rng).rem_euclid(std::f64::consts::PI);
            Blocker { center, length, width, height, orientation }
        })
        .collect()
}

/// Whether the box cuts the 3D sightline of `link`.
///
/// The segment is clipped to the footprint by a slab test in the box frame;
/// since link height is monotone along the segment, the lowest point of the
/// clipped piece sits at one of its ends.
pub fn blocks(b: &Blocker, link: &Link) -> bool {
    let (ca, sa) = (b.orientation.cos(), b.orientation.sin());
    let to_local = |p: Point2| {
        let q = p - b.center;
        (q.x * ca + q.y * sa, -q.x * sa + q.y * ca)
    };
    let (u0, v0) = to_local(link.a);
    let (u1, v1) = to_local(link.b);
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for (start, delta, half) in [(u0, u1 - u0, 0.5 * b.length), (v0, v1 - v0, 0.5 * b.width)] {
        if delta == 0.0 {
            if start.abs() > half {
                return false;
            }
            continue;
        }
        let (ta, tb) = ((-half - start) / delta, (half - start) / delta);
        t0 = t0.max(ta.min(tb));
        t1 = t1.min(ta.max(tb));
        if t0 > t1 {
            return false;
        }
    }
    let h_at = |t: f64| link.height_a + t * (link.height_b - link.height_a);
    h_at(t0).min(h_at(t1)) <= b.height
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Fraction of scenes in which every path has at least one blocked link,
/// among scenes leaving all clear-set links unblocked.
///
/// Trial `i` draws from its own counter-indexed stream, so the estimate does
/// not depend on thread scheduling.
pub fn estimate_paths(
    ps: &PathSet,
    dist: &ShapeDistribution,
    region: &SampleRegion,
    trials: u64,
    seed: u64,
) -> Result<Estimate> {
    if trials == 0 {
        return Err(invalid("trials must be >= 1"));
    }
    ps.validate(usize::MAX)?;
    dist.validate()?;
    let (hits, attempts) = (0..trials)
        .into_par_iter()
        .map(|i| run_trial(ps, dist, region, seed, i))
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
    let rate = trials as f64 / attempts as f64;
    if rate < MIN_ACCEPTANCE {
        return Err(BlockageError::Diagnostics(format!(
            "conditioning acceptance rate {rate:.2e} below {MIN_ACCEPTANCE:e}"
        )));
    }
    Ok(Estimate::from_counts(hits, trials))
}

fn run_trial(ps: &PathSet, dist: &ShapeDistribution, region: &SampleRegion, seed: u64, i: u64) -> Result<(u64, u64)> {
    let mut rng = trial_rng(seed, i);
    for attempt in 1..=MAX_ATTEMPTS_PER_TRIAL {
        let scene = sample_scene(region, dist, &mut rng);
        let hit = |k: usize| scene.iter().any(|b| blocks(b, &ps.links[k]));
        if ps.clear.iter().any(|&k| hit(k)) {
            continue;
        }
        let all_failed = ps.paths.iter().all(|p| p.iter().any(|&k| hit(k)));
        return Ok((all_failed as u64, attempt));
    }
    Err(BlockageError::Diagnostics(format!(
        "trial {i}: no scene with clear links unblocked after {MAX_ATTEMPTS_PER_TRIAL} attempts"
    )))
}

/// Empirical `P(all links outside the clear set blocked | clear set unblocked)`.
pub fn estimate_p_all_blocked(
    ls: &LinkSet,
    dist: &ShapeDistribution,
    region: &SampleRegion,
    trials: u64,
    seed: u64,
) -> Result<Estimate> {
    estimate_paths(&ls.to_paths(), dist, region, trials, seed)
}

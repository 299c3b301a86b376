//! Blocker statistics and single-link blockage.
//!
//! A blocker is a box with a random footprint (length `L` along orientation
//! `Θ`, width `W` across it) and a random height `H`, its center drawn from a
//! Poisson process of density λ. The four classic models are special cases:
//! line segments have `W = 0`, and a missing height distribution means
//! blockers are infinitely tall.
//!
//! For uniform orientation on `[0, π]` the expected number of blockers hitting
//! a link of horizontal length `d` is `η·β·d + μ·p`, with
//! `β = 2λ(E[L] + E[W]) / π`, `p = λ E[L] E[W]`, and the height factors
//! `η`, `μ` from [`eta`] and [`mu`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, BlockageError, Result};
use crate::geom2d::{minkowski_segment_rect, ConvexPolygon, Point2};

/// Distribution of one blocker dimension (meters) or of the orientation (radians).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarDist {
    /// Uniform on `[0, max]`.
    Uniform { max: f64 },
    /// Point mass at `value`.
    Deterministic { value: f64 },
}

impl ScalarDist {
    pub fn uniform(max: f64) -> Self {
        ScalarDist::Uniform { max }
    }

    pub fn deterministic(value: f64) -> Self {
        ScalarDist::Deterministic { value }
    }

    pub fn validate(&self, what: &str) -> Result<()> {
        let v = match *self {
            ScalarDist::Uniform { max } => max,
            ScalarDist::Deterministic { value } => value,
        };
        if v.is_finite() && v >= 0.0 {
            Ok(())
        } else {
            Err(invalid(format!("{what} distribution parameter must be finite and >= 0, got {v}")))
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            ScalarDist::Uniform { max } => 0.5 * max,
            ScalarDist::Deterministic { value } => value,
        }
    }

    /// Largest value in the support.
    pub fn upper(&self) -> f64 {
        match *self {
            ScalarDist::Uniform { max } => max,
            ScalarDist::Deterministic { value } => value,
        }
    }

    /// True when all mass sits on one point (including `Uniform { max: 0 }`).
    pub fn is_point_mass(&self) -> bool {
        match *self {
            ScalarDist::Deterministic { .. } => true,
            ScalarDist::Uniform { max } => max == 0.0,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            ScalarDist::Uniform { max } if max > 0.0 => (x / max).clamp(0.0, 1.0),
            _ => {
                if x >= self.upper() {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Antiderivative of the cdf, `∫_0^x F(t) dt`, for `x >= 0`.
    pub fn cdf_antiderivative(&self, x: f64) -> f64 {
        match *self {
            ScalarDist::Uniform { max } if max > 0.0 => {
                if x <= max {
                    x * x / (2.0 * max)
                } else {
                    0.5 * max + (x - max)
                }
            }
            _ => (x - self.upper()).max(0.0),
        }
    }
}

/// Statistics of the blocker population.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeDistribution {
    pub length: ScalarDist,
    pub width: ScalarDist,
    /// `None` means blockers are infinitely tall.
    pub height: Option<ScalarDist>,
    /// Orientation in radians; a uniform orientation must span `[0, π]`.
    pub orientation: ScalarDist,
    /// Blocker centers per square meter.
    pub density: f64,
}

impl ShapeDistribution {
    pub fn new(
        length: ScalarDist,
        width: ScalarDist,
        height: Option<ScalarDist>,
        orientation: ScalarDist,
        density: f64,
    ) -> Result<Self> {
        let d = Self { length, width, height, orientation, density };
        d.validate()?;
        Ok(d)
    }

    /// Buildings with `L, W, H ~ U[0, 30 m]` and uniform orientation.
    pub fn urban_default(density: f64) -> Self {
        Self {
            length: ScalarDist::uniform(30.0),
            width: ScalarDist::uniform(30.0),
            height: Some(ScalarDist::uniform(30.0)),
            orientation: ScalarDist::uniform(PI),
            density,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.length.validate("length")?;
        self.width.validate("width")?;
        if let Some(h) = &self.height {
            h.validate("height")?;
        }
        self.orientation.validate("orientation")?;
        match self.orientation {
            ScalarDist::Uniform { max } if (max - PI).abs() > 1e-12 => {
                return Err(invalid(format!("uniform orientation must span [0, π], got [0, {max}]")))
            }
            ScalarDist::Deterministic { value } if value > PI => {
                return Err(invalid(format!("orientation {value} is outside [0, π]")))
            }
            _ => {}
        }
        if !(self.density.is_finite() && self.density >= 0.0) {
            return Err(invalid(format!("density must be finite and >= 0, got {}", self.density)));
        }
        Ok(())
    }

    pub fn with_density(mut self, density: f64) -> Self {
        self.density = density;
        self
    }

    pub fn has_uniform_orientation(&self) -> bool {
        matches!(self.orientation, ScalarDist::Uniform { max } if (max - PI).abs() <= 1e-12)
    }

    /// Half-diagonal of the largest footprint any blocker can have.
    pub fn max_footprint_radius(&self) -> f64 {
        0.5 * self.length.upper().hypot(self.width.upper())
    }
}

/// A link between two ground positions with antenna heights.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub a: Point2,
    pub b: Point2,
    pub height_a: f64,
    pub height_b: f64,
}

impl Link {
    pub fn new(a: Point2, b: Point2, height_a: f64, height_b: f64) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() {
            return Err(invalid("link endpoints must be finite"));
        }
        if !(height_a >= 0.0 && height_b >= 0.0 && height_a.is_finite() && height_b.is_finite()) {
            return Err(invalid(format!("link heights must be finite and >= 0, got {height_a}, {height_b}")));
        }
        Ok(Self { a, b, height_a, height_b })
    }

    /// Horizontal length.
    pub fn length(&self) -> f64 {
        self.a.distance(self.b)
    }

    /// Straight-line length including the height difference.
    pub fn length_3d(&self) -> f64 {
        self.length().hypot(self.height_a - self.height_b)
    }

    pub fn high(&self) -> f64 {
        self.height_a.max(self.height_b)
    }

    pub fn low(&self) -> f64 {
        self.height_a.min(self.height_b)
    }

    /// The endpoint with the lower antenna, then the other one.
    pub fn low_then_high(&self) -> (Point2, Point2) {
        if self.height_a <= self.height_b {
            (self.a, self.b)
        } else {
            (self.b, self.a)
        }
    }

    /// Link azimuth in `[0, π)`; blocker geometry is symmetric under reversal.
    pub fn axis_angle(&self) -> f64 {
        self.a.azimuth_to(self.b).rem_euclid(PI)
    }
}

/// `β = 2λ(E[L] + E[W]) / π`, valid only for orientation uniform on `[0, π]`.
pub fn beta(dist: &ShapeDistribution) -> Result<f64> {
    if !dist.has_uniform_orientation() {
        return Err(BlockageError::UnsupportedDistribution(
            "closed-form β requires orientation uniform on [0, π]".into(),
        ));
    }
    Ok(2.0 * dist.density * (dist.length.mean() + dist.width.mean()) / PI)
}

/// Footprint term `p = λ E[L] E[W]`.
pub fn p_footprint(dist: &ShapeDistribution) -> f64 {
    dist.density * dist.length.mean() * dist.width.mean()
}

/// Height factor of the swept term for a link whose endpoints sit at
/// `h0 >= h1`: `η = 1 − (1/(h0−h1)) ∫_{h1}^{h0} F_H(h) dh`, and its limit
/// `1 − F_H(h0)` when the heights coincide. No height distribution gives 1.
pub fn eta(h0: f64, h1: f64, height: Option<&ScalarDist>) -> Result<f64> {
    if !(h1 >= 0.0 && h0.is_finite()) {
        return Err(invalid(format!("link heights must be finite and >= 0, got {h0}, {h1}")));
    }
    if h1 > h0 {
        return Err(invalid(format!("eta expects h0 >= h1, got h0={h0}, h1={h1}")));
    }
    let Some(dist) = height else {
        return Ok(1.0);
    };
    if h0 - h1 <= 1e-12 * h0.max(1.0) {
        return Ok(1.0 - dist.cdf(h0));
    }
    let value = match *dist {
        ScalarDist::Uniform { max } if max > 0.0 => {
            if h0 <= max {
                1.0 - (h0 + h1) / (2.0 * max)
            } else if h1 <= max {
                1.0 - ((max * max - h1 * h1) / (2.0 * max) + h0 - max) / (h0 - h1)
            } else {
                0.0
            }
        }
        _ => 1.0 - (dist.cdf_antiderivative(h0) - dist.cdf_antiderivative(h1)) / (h0 - h1),
    };
    Ok(value.clamp(0.0, 1.0))
}

/// Height factor of the footprint term, `μ = 1 − F_H(h1)`.
pub fn mu(h1: f64, height: Option<&ScalarDist>) -> f64 {
    height.map_or(1.0, |d| 1.0 - d.cdf(h1))
}

/// Closed-form `E[K] = η β d + μ p` for one link.
pub fn expected_blockers(link: &Link, dist: &ShapeDistribution) -> Result<f64> {
    let b = beta(dist)?;
    let h = dist.height.as_ref();
    let eta = eta(link.high(), link.low(), h)?;
    Ok(eta * b * link.length() + mu(link.low(), h) * p_footprint(dist))
}

/// Probability that at least one blocker hits the link, `1 − e^{−E[K]}`.
pub fn p_blocked(link: &Link, dist: &ShapeDistribution) -> Result<f64> {
    Ok(-(-expected_blockers(link, dist)?).exp_m1())
}

/// Centers of blockers with the given size and orientation that hit the link.
///
/// A blocker of height `h` can only cut the part of the link that runs below
/// `h`; that part starts at the lower endpoint and spans the fraction
/// `(h − low)/(high − low)` of the link. Pass `f64::INFINITY` for blockers
/// without height.
pub fn blocking_region(link: &Link, l: f64, w: f64, h: f64, theta: f64) -> Result<ConvexPolygon> {
    if h.is_nan() || h < 0.0 {
        return Err(invalid(format!("blocker height must be >= 0, got {h}")));
    }
    let (lo, hi) = (link.low(), link.high());
    if h < lo {
        return Ok(ConvexPolygon::empty());
    }
    if h >= hi {
        return minkowski_segment_rect(link.a, link.b, l, w, theta);
    }
    let (start, end) = link.low_then_high();
    let frac = (h - lo) / (hi - lo);
    minkowski_segment_rect(start, start + (end - start) * frac, l, w, theta)
}

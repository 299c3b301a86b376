//! Relay-assisted cell: link budgets, failure probability at a user position,
//! cell averages and relay placement.
//!
//! The base station sits at the origin; `N` relays sit on a ring of radius
//! `r` at azimuths `2πk/N`. A user is served if some path is unblocked and
//! every hop of it closes its link budget: the direct link, or a relay pair
//! (BS→relay, relay→user). Sectorized cells only offer the relay of the
//! user's sector; otherwise every relay is a candidate.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geom2d::Point2;
use crate::multilink::{evaluate_path_selections, JointBlockage, PathSet, QuadratureSpec};
use crate::quad::{piecewise_nodes, GaussLegendre};
use crate::shapes::{beta, eta, mu, p_blocked, p_footprint, Link, ShapeDistribution};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Distance below which path loss is evaluated at the clamp, in meters.
pub const MIN_PATHLOSS_DISTANCE: f64 = 1.0;

/// How path loss grows with distance.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathLossModel {
    /// Free-space loss at 1 m plus `10 α log10(d / 1 m)`.
    #[default]
    CloseIn,
    /// Friis ratio raised to the exponent: `10 α log10(4π f d / c)`.
    ScaledFriis,
}

/// Transmit/receive figures of one link class.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkBudget {
    pub tx_power_dbm: f64,
    pub tx_gain_dbi: f64,
    pub rx_gain_dbi: f64,
    pub sensitivity_dbm: f64,
    pub frequency_hz: f64,
    pub pathloss_exponent: f64,
    #[serde(default)]
    pub model: PathLossModel,
}

impl LinkBudget {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.tx_power_dbm, self.tx_gain_dbi, self.rx_gain_dbi, self.sensitivity_dbm]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(invalid("link budget figures must be finite"));
        }
        if !(self.frequency_hz > 0.0 && self.frequency_hz.is_finite()) {
            return Err(invalid(format!("frequency must be > 0, got {}", self.frequency_hz)));
        }
        if !(self.pathloss_exponent > 0.0 && self.pathloss_exponent.is_finite()) {
            return Err(invalid(format!("path-loss exponent must be > 0, got {}", self.pathloss_exponent)));
        }
        Ok(())
    }
}

/// Budgets of the three link classes of a relay cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellBudgets {
    pub bs_ue: LinkBudget,
    pub bs_relay: LinkBudget,
    pub relay_ue: LinkBudget,
}

impl CellBudgets {
    /// 28 GHz, α = 2.3; BS 25 dBm / 23 dBi, relay 20 dBm / 23 dBi, UE 0 dBi;
    /// sensitivities −90.2 dBm (relay) and −79.5 dBm (UE). The relay's receive
    /// gain is left out of the BS→relay budget, which gives 138.2 dB there and
    /// 122.5 dB on the relay→UE hop.
    pub fn reference(model: PathLossModel) -> Self {
        let base = LinkBudget {
            tx_power_dbm: 25.0,
            tx_gain_dbi: 23.0,
            rx_gain_dbi: 0.0,
            sensitivity_dbm: -79.5,
            frequency_hz: 28e9,
            pathloss_exponent: 2.3,
            model,
        };
        Self {
            bs_ue: base,
            bs_relay: LinkBudget { sensitivity_dbm: -90.2, ..base },
            relay_ue: LinkBudget { tx_power_dbm: 20.0, ..base },
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.bs_ue.validate()?;
        self.bs_relay.validate()?;
        self.relay_ue.validate()
    }
}

/// Geometry, blocker statistics and budgets of a relay cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellScenario {
    pub radius: f64,
    pub bs_height: f64,
    pub ue_height: f64,
    pub relay_count: usize,
    pub relay_radius: f64,
    pub relay_height: f64,
    pub sectorized: bool,
    pub blockers: ShapeDistribution,
    /// `None` disables every link-budget constraint.
    pub budgets: Option<CellBudgets>,
    /// Treat BS→relay links as always in line of sight.
    pub bs_relay_los_assumed: bool,
}

impl CellScenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(invalid(format!("cell radius must be > 0, got {}", self.radius)));
        }
        if !(0.0..=self.radius).contains(&self.relay_radius) {
            return Err(invalid(format!(
                "relay radius {} must lie in [0, {}]",
                self.relay_radius, self.radius
            )));
        }
        for (name, h) in [("bs", self.bs_height), ("ue", self.ue_height), ("relay", self.relay_height)] {
            if !(h >= 0.0 && h.is_finite()) {
                return Err(invalid(format!("{name} height must be finite and >= 0, got {h}")));
            }
        }
        self.blockers.validate()?;
        if let Some(b) = &self.budgets {
            b.validate()?;
        }
        Ok(())
    }

    pub fn relay_position(&self, n: usize) -> Point2 {
        Point2::polar(self.relay_radius, relay_azimuths(self.relay_count)[n])
    }

    /// Index of the sector containing azimuth `phi`; edges go to the lower index.
    pub fn sector_of(&self, phi: f64) -> usize {
        let n = self.relay_count;
        if n <= 1 {
            return 0;
        }
        let width = 2.0 * PI / n as f64;
        let k = (phi + 0.5 * width).rem_euclid(2.0 * PI) / width;
        let idx = if (k - k.round()).abs() < 1e-12 && k.round() > 0.0 {
            k.round() as usize - 1
        } else {
            k.floor() as usize
        };
        idx % n
    }
}

/// User location in polar coordinates around the base station.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UserPosition {
    pub distance: f64,
    pub azimuth: f64,
}

impl UserPosition {
    pub fn new(distance: f64, azimuth: f64) -> Self {
        Self { distance, azimuth }
    }

    pub fn point(&self) -> Point2 {
        Point2::polar(self.distance, self.azimuth)
    }
}

/// Equispaced relay azimuths starting at 0.
pub fn relay_azimuths(n: usize) -> Vec<f64> {
    (0..n).map(|k| k as f64 * 2.0 * PI / n as f64).collect()
}

/// Path loss in dB over a 3D distance.
pub fn path_loss_db(distance3d: f64, budget: &LinkBudget) -> Result<f64> {
    if !(distance3d > 0.0) {
        return Err(invalid(format!("path-loss distance must be > 0, got {distance3d}")));
    }
    let d = distance3d.max(MIN_PATHLOSS_DISTANCE);
    let friis_1m = 20.0 * (4.0 * PI * budget.frequency_hz / SPEED_OF_LIGHT).log10();
    let alpha = budget.pathloss_exponent;
    Ok(match budget.model {
        PathLossModel::CloseIn => friis_1m + 10.0 * alpha * d.log10(),
        PathLossModel::ScaledFriis => 0.5 * alpha * friis_1m + 10.0 * alpha * d.log10(),
    })
}

/// Largest path loss the link tolerates: `P_T + G_T + G_R − S`.
pub fn max_allowable_path_loss(budget: &LinkBudget) -> f64 {
    budget.tx_power_dbm + budget.tx_gain_dbi + budget.rx_gain_dbi - budget.sensitivity_dbm
}

/// Whether the link closes its budget in line of sight; blockers play no part.
pub fn link_feasible(link: &Link, budget: &LinkBudget) -> bool {
    let d = link.length_3d().max(MIN_PATHLOSS_DISTANCE);
    path_loss_db(d, budget).is_ok_and(|pl| pl <= max_allowable_path_loss(budget))
}

/// Failure probabilities at one user position.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PositionFailure {
    /// Budgets applied (equal to `blocking_only` when the scenario has none).
    pub with_budget: JointBlockage,
    /// Every candidate path treated as budget-feasible.
    pub blocking_only: JointBlockage,
}

impl PositionFailure {
    /// Correlated failure probability under the scenario's budget setting.
    pub fn p(&self) -> f64 {
        self.with_budget.p_all_failed
    }
}

/// Direct path first, then one two-hop path per candidate relay.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidatePaths {
    pub paths: PathSet,
    /// Whether each path closes its link budgets in line of sight.
    pub feasible: Vec<bool>,
}

impl CandidatePaths {
    /// The same set with budget-infeasible paths dropped.
    pub fn feasible_only(&self) -> PathSet {
        let paths = self
            .paths
            .paths
            .iter()
            .zip(&self.feasible)
            .filter(|(_, &ok)| ok)
            .map(|(p, _)| p.clone())
            .collect();
        PathSet { paths, ..self.paths.clone() }
    }
}

/// Paths available to a user at `u`: sectorized cells offer the direct link
/// and the sector's relay, others every relay.
pub fn candidate_paths(u: &UserPosition, s: &CellScenario) -> Result<CandidatePaths> {
    let ue = u.point();
    let bu = Link::new(Point2::ORIGIN, ue, s.bs_height, s.ue_height)?;
    let relays: Vec<usize> = match (s.relay_count, s.sectorized) {
        (0, _) => Vec::new(),
        (_, true) => vec![s.sector_of(u.azimuth)],
        (n, false) => (0..n).collect(),
    };
    let mut links = vec![bu];
    let mut paths = vec![vec![0]];
    let mut feasible = vec![s.budgets.map_or(true, |b| link_feasible(&bu, &b.bs_ue))];
    let mut clear = Vec::new();
    for n in relays {
        let rp = s.relay_position(n);
        let br = Link::new(Point2::ORIGIN, rp, s.bs_height, s.relay_height)?;
        let ru = Link::new(rp, ue, s.relay_height, s.ue_height)?;
        let ok = s
            .budgets
            .map_or(true, |b| link_feasible(&br, &b.bs_relay) && link_feasible(&ru, &b.relay_ue));
        let i = links.len();
        links.push(br);
        links.push(ru);
        paths.push(vec![i, i + 1]);
        feasible.push(ok);
        if s.bs_relay_los_assumed {
            clear.push(i);
        }
    }
    Ok(CandidatePaths { paths: PathSet { links, paths, clear }, feasible })
}

/// Failure probabilities at `u`, with and without budget gating, from one
/// geometry integration.
pub fn failure_breakdown(u: &UserPosition, s: &CellScenario, quad: &QuadratureSpec) -> Result<PositionFailure> {
    s.validate()?;
    if !(u.distance >= 0.0 && u.distance <= s.radius * (1.0 + 1e-12)) {
        return Err(invalid(format!("user distance {} outside the cell of radius {}", u.distance, s.radius)));
    }
    let c = candidate_paths(u, s)?;
    let all = u32::MAX >> (32 - c.feasible.len());
    let feasible = c
        .feasible
        .iter()
        .enumerate()
        .filter(|(_, &ok)| ok)
        .fold(0u32, |m, (k, _)| m | (1 << k));
    let r = evaluate_path_selections(&c.paths, &[feasible, all], &s.blockers, quad)?;
    Ok(PositionFailure { with_budget: r[0], blocking_only: r[1] })
}

/// `P(allKO | D = d, Φ = φ)` under the scenario's budget setting.
pub fn failure_prob_at(u: &UserPosition, s: &CellScenario, quad: &QuadratureSpec) -> Result<f64> {
    Ok(failure_breakdown(u, s, quad)?.p())
}

/// User-position quadrature for cell averages.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellQuadrature {
    /// Gauss–Legendre nodes in distance, per piece (the relay ring splits `[0, R]`).
    pub radial_nodes: usize,
    /// Nodes in azimuth over the integrated angular range.
    pub azimuth_nodes: usize,
}

impl Default for CellQuadrature {
    fn default() -> Self {
        Self { radial_nodes: 16, azimuth_nodes: 8 }
    }
}

/// Cell-averaged failure probabilities.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AverageFailure {
    pub with_budget: f64,
    pub blocking_only: f64,
    pub with_budget_independent: f64,
    pub blocking_only_independent: f64,
}

/// Weighted user positions covering the cell, weights summing to 1.
///
/// `f_D(d) = 2d/R²`. With uniform blocker orientation the problem is
/// invariant under rotation by `2π/N` and under reflection about a relay
/// azimuth, so only `φ ∈ [0, π/N]` is integrated; otherwise the full circle is
/// covered sector by sector.
pub fn user_nodes(s: &CellScenario, cq: &CellQuadrature) -> Result<Vec<(UserPosition, f64)>> {
    if cq.radial_nodes < 2 || cq.azimuth_nodes < 2 {
        return Err(invalid("cell quadrature needs at least 2 radial and 2 azimuth nodes"));
    }
    let r2 = s.radius * s.radius;
    let radial_rule = GaussLegendre::new(cq.radial_nodes);
    let az_rule = GaussLegendre::new(cq.azimuth_nodes);
    let n = s.relay_count.max(1);
    let sector = 2.0 * PI / n as f64;
    let az_breaks = azimuth_breaks(s);
    let on = |a: f64, b: f64| piecewise_nodes(&az_rule, a, b, &az_breaks);
    let azimuths: Vec<(f64, f64)> = if s.relay_count == 0 && s.blockers.has_uniform_orientation() {
        vec![(0.0, 1.0)]
    } else if s.blockers.has_uniform_orientation() {
        on(0.0, 0.5 * sector).into_iter().map(|(p, w)| (p, w / (0.5 * sector))).collect()
    } else {
        (0..n)
            .flat_map(|k| {
                let c = k as f64 * sector;
                on(c - 0.5 * sector, c + 0.5 * sector)
            })
            .map(|(p, w)| (p, w / (2.0 * PI)))
            .collect()
    };
    let mut out = Vec::new();
    for &(phi, wp) in &azimuths {
        let breaks = radial_breaks(s, phi);
        for (d, wd) in piecewise_nodes(&radial_rule, 0.0, s.radius, &breaks) {
            out.push((UserPosition::new(d, phi), wd * 2.0 * d / r2 * wp));
        }
    }
    Ok(out)
}

/// Largest 3D distance over which the link closes its budget, `None` if it
/// fails even at the clamp distance.
pub fn max_range(budget: &LinkBudget) -> Option<f64> {
    let at_clamp = path_loss_db(MIN_PATHLOSS_DISTANCE, budget).ok()?;
    let margin = max_allowable_path_loss(budget) - at_clamp;
    (margin >= 0.0).then(|| MIN_PATHLOSS_DISTANCE * 10f64.powf(margin / (10.0 * budget.pathloss_exponent)))
}

/// Horizontal reach of a link class between the two heights.
fn ground_range(budget: &LinkBudget, h0: f64, h1: f64) -> Option<f64> {
    let d = max_range(budget)?;
    let dh = (h0 - h1).abs();
    (d >= dh).then(|| (d * d - dh * dh).sqrt())
}

/// Azimuths where the set of radial breaks changes: the relay→UE range circle
/// is tangent to the ray, or its crossings meet the cell edge, the relay ring
/// or the direct-link range.
fn azimuth_breaks(s: &CellScenario) -> Vec<f64> {
    let (Some(b), r) = (s.budgets, s.relay_radius) else { return Vec::new() };
    let Some(rho) = ground_range(&b.relay_ue, s.relay_height, s.ue_height) else { return Vec::new() };
    if r <= 0.0 {
        return Vec::new();
    }
    let mut offsets = Vec::new();
    if rho < r {
        offsets.push((rho / r).asin());
    }
    let mut radii = vec![s.radius, r];
    radii.extend(ground_range(&b.bs_ue, s.bs_height, s.ue_height));
    for d in radii {
        if d > 0.0 {
            let c = (d * d + r * r - rho * rho) / (2.0 * d * r);
            if c.abs() <= 1.0 {
                offsets.push(c.acos());
            }
        }
    }
    relay_azimuths(s.relay_count)
        .into_iter()
        .flat_map(|psi| offsets.iter().flat_map(move |&o| [psi - o, psi + o, psi - o + 2.0 * PI, psi + o - 2.0 * PI]))
        .collect()
}

/// User distances along azimuth `phi` where the integrand has a kink or a
/// jump: the relay ring and every budget boundary.
fn radial_breaks(s: &CellScenario, phi: f64) -> Vec<f64> {
    let mut breaks = vec![s.relay_radius];
    let Some(b) = s.budgets else { return breaks };
    if let Some(g) = ground_range(&b.bs_ue, s.bs_height, s.ue_height) {
        breaks.push(g);
    }
    if let Some(rho) = ground_range(&b.relay_ue, s.relay_height, s.ue_height) {
        // |d·e(φ) − r·e(ψ)| = ρ  ⇔  d² − 2 d r cos(φ − ψ) + r² − ρ² = 0
        for psi in relay_azimuths(s.relay_count) {
            let c = s.relay_radius * (phi - psi).cos();
            let disc = c * c - s.relay_radius * s.relay_radius + rho * rho;
            if disc >= 0.0 {
                breaks.extend([c - disc.sqrt(), c + disc.sqrt()]);
            }
        }
    }
    breaks
}

/// Cell averages of [`failure_breakdown`] over uniformly placed users.
pub fn average_failure(s: &CellScenario, quad: &QuadratureSpec, cq: &CellQuadrature) -> Result<AverageFailure> {
    s.validate()?;
    let mut out = AverageFailure::default();
    for (u, w) in user_nodes(s, cq)? {
        let f = failure_breakdown(&u, s, quad)?;
        out.with_budget += w * f.with_budget.p_all_failed;
        out.blocking_only += w * f.blocking_only.p_all_failed;
        out.with_budget_independent += w * f.with_budget.p_all_failed_independent;
        out.blocking_only_independent += w * f.blocking_only.p_all_failed_independent;
    }
    Ok(out)
}

/// Cell-averaged failure probability under the scenario's budget setting.
pub fn average_failure_prob(
    s: &CellScenario,
    quad: &QuadratureSpec,
    radial_nodes: usize,
    azimuth_nodes: usize,
) -> Result<f64> {
    Ok(average_failure(s, quad, &CellQuadrature { radial_nodes, azimuth_nodes })?.with_budget)
}

/// Closed-form cell average of the direct-link blockage probability,
/// `1 + 2(x − eˣ + 1)/x² · e^{−(x + μp)}` with `x = ηβR`.
pub fn mean_single_link_blockage(radius: f64, dist: &ShapeDistribution, bs_height: f64, ue_height: f64) -> Result<f64> {
    let h = dist.height.as_ref();
    let eta = eta(bs_height.max(ue_height), bs_height.min(ue_height), h)?;
    let x = eta * beta(dist)? * radius;
    let mp = mu(bs_height.min(ue_height), h) * p_footprint(dist);
    if x <= 0.0 {
        return Ok(-(-mp).exp_m1());
    }
    // x − eˣ + 1 = −(expm1(x) − x), kept accurate for small x
    let excess = if x < 1e-5 { x * x * (0.5 + x / 6.0) } else { x.exp_m1() - x };
    Ok(1.0 - 2.0 * excess / (x * x) * (-(x + mp)).exp())
}

/// Cell average of the direct-link blockage by Gauss–Legendre quadrature of
/// `p_blocked(d)·2d/R²`; a numerical cross-check of the closed form.
pub fn mean_single_link_blockage_quadrature(
    radius: f64,
    dist: &ShapeDistribution,
    bs_height: f64,
    ue_height: f64,
    nodes: usize,
) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(invalid(format!("cell radius must be > 0, got {radius}")));
    }
    let rule = GaussLegendre::new(nodes.max(1));
    let mut total = 0.0;
    for (d, w) in rule.on(0.0, radius) {
        let link = Link::new(Point2::ORIGIN, Point2::new(d, 0.0), bs_height, ue_height)?;
        total += w * p_blocked(&link, dist)? * 2.0 * d / (radius * radius);
    }
    Ok(total)
}

/// One relay placement of a sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RelayPlacement {
    pub relay_radius: f64,
    pub relay_height: f64,
    pub average: AverageFailure,
}

/// Evaluates every `(r, h_R)` on the grid.
pub fn sweep_relays(
    template: &CellScenario,
    r_grid: &[f64],
    h_grid: &[f64],
    quad: &QuadratureSpec,
    cq: &CellQuadrature,
) -> Result<Vec<RelayPlacement>> {
    if r_grid.is_empty() || h_grid.is_empty() {
        return Err(invalid("relay grids must not be empty"));
    }
    let mut out = Vec::with_capacity(r_grid.len() * h_grid.len());
    for &r in r_grid {
        for &h in h_grid {
            let s = CellScenario { relay_radius: r, relay_height: h, ..*template };
            out.push(RelayPlacement { relay_radius: r, relay_height: h, average: average_failure(&s, quad, cq)? });
        }
    }
    Ok(out)
}

/// Argmin of `key`, ties toward smaller radius, then smaller height.
pub fn best_placement(points: &[RelayPlacement], key: impl Fn(&AverageFailure) -> f64) -> Option<RelayPlacement> {
    let mut sorted: Vec<&RelayPlacement> = points.iter().collect();
    sorted.sort_by(|a, b| {
        a.relay_radius
            .total_cmp(&b.relay_radius)
            .then(a.relay_height.total_cmp(&b.relay_height))
    });
    sorted.into_iter().fold(None, |best: Option<RelayPlacement>, p| match best {
        Some(b) if key(&b.average) <= key(&p.average) => Some(b),
        _ => Some(*p),
    })
}

/// Optimal `(r*, h_R*, P̄*)` by exhaustive grid search under the template's
/// budget setting.
pub fn optimize_relays(
    template: &CellScenario,
    r_grid: &[f64],
    h_grid: &[f64],
    quad: &QuadratureSpec,
    cq: &CellQuadrature,
) -> Result<(f64, f64, f64)> {
    let pts = sweep_relays(template, r_grid, h_grid, quad, cq)?;
    let best = best_placement(&pts, |a| a.with_budget).expect("grid is non-empty");
    Ok((best.relay_radius, best.relay_height, best.average.with_budget))
}

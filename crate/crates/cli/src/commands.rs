use std::io::Write;

use blockage_core::cell::{
    best_placement, candidate_paths, failure_breakdown, mean_single_link_blockage,
    mean_single_link_blockage_quadrature, sweep_relays, CellScenario, UserPosition,
};
use blockage_core::geom2d::Point2;
use blockage_core::mc::{estimate_p_all_blocked, estimate_paths, Estimate, SampleRegion};
use blockage_core::multilink::LinkSet;
use blockage_core::shapes::{beta, eta, mu, p_blocked, p_footprint, Link, ScalarDist, ShapeDistribution};
use serde::Serialize;

use crate::config::{ScenarioConfig, SweepVariable};
use crate::error::CliError;

/// Nodes of the 1D radial rule used to cross-check the closed-form cell mean.
const DENSITY_QUAD_NODES: usize = 32;

/// Deviation, in standard errors, beyond which a validation check fails.
pub const VALIDATION_SIGMAS: f64 = 3.0;

/// Switches shared by all subcommands.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunOptions {
    /// Emit the independence baseline next to the correlated values.
    pub independent: bool,
    /// Multiplies η in single-link analytic values; 1 outside of debugging.
    pub eta_scale: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { independent: false, eta_scale: 1.0 }
    }
}

/// A CSV table with a fixed header.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(header: Vec<&'static str>) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| *h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Independent per-row seeds derived from the master seed.
fn row_seed(seed: u64, row: usize) -> u64 {
    seed ^ (row as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn direct_link(cfg: &ScenarioConfig, d: f64) -> Result<Link, CliError> {
    Ok(Link::new(Point2::ORIGIN, Point2::new(d, 0.0), cfg.cell.bs_height_m, cfg.cell.ue_height_m)?)
}

fn single_link_analytic(link: &Link, dist: &ShapeDistribution, eta_scale: f64) -> Result<f64, CliError> {
    if eta_scale == 1.0 {
        return Ok(p_blocked(link, dist)?);
    }
    let h = dist.height.as_ref();
    let k = eta_scale * eta(link.high(), link.low(), h)? * beta(dist)? * link.length()
        + mu(link.low(), h) * p_footprint(dist);
    Ok(-(-k).exp_m1())
}

/// Direct-link blockage against distance, analytic and simulated, for every density.
pub fn single(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<Table, CliError> {
    let mut t = Table::new(vec!["lambda", "d_m", "p_analytic", "p_mc", "mc_stderr"]);
    let mut row = 0;
    for lambda in cfg.values(SweepVariable::DensityPerM2) {
        let dist = cfg.blockers_at(lambda);
        for d in cfg.values(SweepVariable::DistanceM) {
            let link = direct_link(cfg, d)?;
            let p = single_link_analytic(&link, &dist, opts.eta_scale)?;
            let region = SampleRegion::covering(&[link], &dist)?;
            let e = estimate_p_all_blocked(
                &LinkSet::new(vec![link])?,
                &dist,
                &region,
                cfg.monte_carlo.trials,
                row_seed(cfg.monte_carlo.seed, row),
            )?;
            t.rows.push(vec![lambda, d, p, e.p_hat, e.stderr]);
            row += 1;
        }
    }
    Ok(t)
}

/// Cell-averaged direct-link blockage against density and maximum height.
pub fn density(cfg: &ScenarioConfig, _opts: &RunOptions) -> Result<Table, CliError> {
    let mut t = Table::new(vec!["lambda", "hmax_m", "mean_p_closed_form", "mean_p_quadrature"]);
    let c = &cfg.cell;
    for hmax in cfg.values(SweepVariable::HmaxM) {
        for lambda in cfg.values(SweepVariable::DensityPerM2) {
            let mut dist = cfg.blockers_at(lambda);
            if hmax.is_finite() {
                dist.height = Some(ScalarDist::uniform(hmax));
            }
            let closed = mean_single_link_blockage(c.radius_m, &dist, c.bs_height_m, c.ue_height_m)?;
            let quad = mean_single_link_blockage_quadrature(
                c.radius_m,
                &dist,
                c.bs_height_m,
                c.ue_height_m,
                DENSITY_QUAD_NODES,
            )?;
            t.rows.push(vec![lambda, hmax, closed, quad]);
        }
    }
    Ok(t)
}

/// Analytic and simulated failure probability at `u`, budget-infeasible
/// paths excluded from both.
fn failure_with_mc(
    cfg: &ScenarioConfig,
    s: &CellScenario,
    u: &UserPosition,
    seed: u64,
) -> Result<(f64, f64, Estimate), CliError> {
    let f = failure_breakdown(u, s, &cfg.quadrature)?;
    let paths = candidate_paths(u, s)?.feasible_only();
    let region = SampleRegion::for_cell(s.radius, &s.blockers)?;
    let e = estimate_paths(&paths, &s.blockers, &region, cfg.monte_carlo.trials, seed)?;
    Ok((f.with_budget.p_all_failed, f.with_budget.p_all_failed_independent, e))
}

/// Failure probability against distance along fixed user azimuths.
pub fn sector_profile(cfg: &ScenarioConfig, _opts: &RunOptions) -> Result<Table, CliError> {
    let mut t = Table::new(vec!["d_m", "phi_deg", "p_correlated", "p_independent", "p_mc", "mc_stderr"]);
    let s = cfg.scenario();
    let mut row = 0;
    for phi in cfg.values(SweepVariable::AzimuthDeg) {
        for d in cfg.values(SweepVariable::DistanceM) {
            let u = UserPosition::new(d, phi.to_radians());
            let (p, p_ind, e) = failure_with_mc(cfg, &s, &u, row_seed(cfg.monte_carlo.seed, row))?;
            t.rows.push(vec![d, phi, p, p_ind, e.p_hat, e.stderr]);
            row += 1;
        }
    }
    Ok(t)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Placement {
    pub r_m: f64,
    pub h_r_m: f64,
    pub p: f64,
}

/// Optimal placements of a relay sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OptimizeSummary {
    pub blocking_only: Placement,
    pub with_budget: Placement,
    pub no_relay_p: f64,
}

/// Cell-average failure over the relay radius and height grid.
pub fn optimize(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<(Table, OptimizeSummary), CliError> {
    let mut header = vec!["r_m", "h_R_m", "p_blocking_only", "p_with_budget", "p_no_relay"];
    if opts.independent {
        header.extend(["p_blocking_only_independent", "p_with_budget_independent"]);
    }
    let mut t = Table::new(header);
    let s = cfg.scenario();
    let c = &cfg.cell;
    let no_relay = mean_single_link_blockage(c.radius_m, &s.blockers, c.bs_height_m, c.ue_height_m)?;
    let pts = sweep_relays(
        &s,
        &cfg.values(SweepVariable::RelayRadiusM),
        &cfg.values(SweepVariable::RelayHeightM),
        &cfg.quadrature,
        &cfg.cell_quadrature,
    )?;
    for p in &pts {
        let a = &p.average;
        let mut row = vec![p.relay_radius, p.relay_height, a.blocking_only, a.with_budget, no_relay];
        if opts.independent {
            row.extend([a.blocking_only_independent, a.with_budget_independent]);
        }
        t.rows.push(row);
    }
    let pick = |key: fn(&blockage_core::cell::AverageFailure) -> f64| {
        let b = best_placement(&pts, key).expect("sweeps are never empty");
        Placement { r_m: b.relay_radius, h_r_m: b.relay_height, p: key(&b.average) }
    };
    let summary = OptimizeSummary {
        blocking_only: pick(|a| a.blocking_only),
        with_budget: pick(|a| a.with_budget),
        no_relay_p: no_relay,
    };
    Ok((t, summary))
}

/// One analytic-versus-simulation comparison.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub analytic: f64,
    pub p_mc: f64,
    pub stderr: f64,
    /// `(analytic − p_mc) / stderr`; zero when both are exact and equal.
    pub deviation_sigmas: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub sigmas: f64,
    pub checks: Vec<Check>,
}

fn check(name: String, analytic: f64, e: &Estimate) -> Check {
    let dev = analytic - e.p_hat;
    let deviation_sigmas = if e.stderr > 0.0 {
        dev / e.stderr
    } else if dev == 0.0 {
        0.0
    } else {
        dev.signum() * f64::INFINITY
    };
    Check {
        name,
        analytic,
        p_mc: e.p_hat,
        stderr: e.stderr,
        deviation_sigmas,
        pass: e.agrees_with(analytic, VALIDATION_SIGMAS),
    }
}

/// Every single-link and sector-profile point against the Monte Carlo oracle.
pub fn validate(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<ValidationReport, CliError> {
    let mut checks = Vec::new();
    let single = single(cfg, opts)?;
    for r in &single.rows {
        let e = Estimate { p_hat: r[3], stderr: r[4], trials: cfg.monte_carlo.trials };
        checks.push(check(format!("single lambda={} d={}", r[0], r[1]), r[2], &e));
    }
    let s = cfg.scenario();
    let mut row = single.rows.len();
    for phi in cfg.values(SweepVariable::AzimuthDeg) {
        for d in cfg.values(SweepVariable::DistanceM) {
            let u = UserPosition::new(d, phi.to_radians());
            let (p, _, e) = failure_with_mc(cfg, &s, &u, row_seed(cfg.monte_carlo.seed, row))?;
            checks.push(check(format!("cell phi={phi} d={d}"), p, &e));
            row += 1;
        }
    }
    Ok(ValidationReport { passed: checks.iter().all(|c| c.pass), sigmas: VALIDATION_SIGMAS, checks })
}

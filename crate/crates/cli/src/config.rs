//! JSON scenario files.
//!
//! Every section is optional and falls back to the reference scenario. Lengths
//! are meters, powers dBm, gains dBi, frequencies Hz, densities blockers/m²;
//! angles are degrees here and radians everywhere past this module.

use std::path::Path;

use blockage_core::cell::{CellBudgets, CellQuadrature, CellScenario, PathLossModel};
use blockage_core::multilink::QuadratureSpec;
use blockage_core::shapes::{ScalarDist, ShapeDistribution};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Largest number of points a single sweep may expand to.
pub const MAX_SWEEP_POINTS: usize = 100_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub cell: CellConfig,
    pub blockers: BlockerConfig,
    /// `null` disables every link-budget constraint.
    pub budgets: Option<CellBudgets>,
    pub quadrature: QuadratureSpec,
    pub cell_quadrature: CellQuadrature,
    pub monte_carlo: McConfig,
    pub sweeps: Vec<Sweep>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CellConfig {
    pub radius_m: f64,
    pub bs_height_m: f64,
    pub ue_height_m: f64,
    pub relay_count: usize,
    pub relay_radius_m: f64,
    pub relay_height_m: f64,
    pub sectorized: bool,
    pub bs_relay_los_assumed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BlockerConfig {
    pub length_m: ScalarDist,
    pub width_m: ScalarDist,
    /// `null` for infinitely tall blockers.
    pub height_m: Option<ScalarDist>,
    pub orientation_deg: ScalarDist,
    pub density_per_m2: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McConfig {
    pub trials: u64,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    DistanceM,
    DensityPerM2,
    HmaxM,
    RelayRadiusM,
    RelayHeightM,
    AzimuthDeg,
}

/// `start, start + step, …` up to and including `stop`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub variable: SweepVariable,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Sweep {
    pub fn new(variable: SweepVariable, start: f64, stop: f64, step: f64) -> Self {
        Self { variable, start, stop, step }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let ok = self.start.is_finite() && self.stop.is_finite() && self.step.is_finite();
        if !ok || self.stop < self.start {
            return Err(CliError::config(format!("sweep {:?}: need finite start <= stop", self.variable)));
        }
        if self.stop > self.start && self.step <= 0.0 {
            return Err(CliError::config(format!("sweep {:?}: step must be > 0", self.variable)));
        }
        if self.stop > self.start && (self.stop - self.start) / self.step >= MAX_SWEEP_POINTS as f64 {
            return Err(CliError::config(format!("sweep {:?}: more than {MAX_SWEEP_POINTS} points", self.variable)));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        if self.stop <= self.start {
            return vec![self.start];
        }
        // tolerate round-off so that e.g. 0:0.1:0.3 keeps its last point
        let n = ((self.stop - self.start) / self.step * (1.0 + 1e-12) + 1e-9).floor() as usize;
        (0..=n).map(|k| self.start + k as f64 * self.step).collect()
    }
}

impl Default for CellConfig {
    fn default() -> Self {
        Self {
            radius_m: 300.0,
            bs_height_m: 40.0,
            ue_height_m: 1.5,
            relay_count: 3,
            relay_radius_m: 180.0,
            relay_height_m: 20.0,
            sectorized: true,
            bs_relay_los_assumed: false,
        }
    }
}

impl Default for BlockerConfig {
    fn default() -> Self {
        Self {
            length_m: ScalarDist::uniform(30.0),
            width_m: ScalarDist::uniform(30.0),
            height_m: Some(ScalarDist::uniform(30.0)),
            orientation_deg: ScalarDist::uniform(180.0),
            density_per_m2: 1e-4,
        }
    }
}

impl Default for McConfig {
    fn default() -> Self {
        Self { trials: 100_000, seed: 1 }
    }
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        use SweepVariable::*;
        Self {
            cell: CellConfig::default(),
            blockers: BlockerConfig::default(),
            budgets: Some(CellBudgets::reference(PathLossModel::CloseIn)),
            quadrature: QuadratureSpec::default(),
            cell_quadrature: CellQuadrature { radial_nodes: 8, azimuth_nodes: 6 },
            monte_carlo: McConfig::default(),
            sweeps: vec![
                Sweep::new(DistanceM, 0.0, 300.0, 50.0),
                Sweep::new(DensityPerM2, 1e-4, 2.2e-4, 1.2e-4),
                Sweep::new(HmaxM, 30.0, 40.0, 10.0),
                Sweep::new(RelayRadiusM, 10.0, 290.0, 10.0),
                Sweep::new(RelayHeightM, 20.0, 20.0, 1.0),
                Sweep::new(AzimuthDeg, 0.0, 30.0, 15.0),
            ],
        }
    }
}

fn to_radians(d: ScalarDist) -> ScalarDist {
    match d {
        ScalarDist::Uniform { max } => ScalarDist::uniform(max.to_radians()),
        ScalarDist::Deterministic { value } => ScalarDist::deterministic(value.to_radians()),
    }
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.scenario().validate().map_err(|e| CliError::config(e.to_string()))?;
        self.quadrature.validate().map_err(|e| CliError::config(e.to_string()))?;
        if self.cell_quadrature.radial_nodes < 2 || self.cell_quadrature.azimuth_nodes < 2 {
            return Err(CliError::config("cell_quadrature needs at least 2 radial and 2 azimuth nodes"));
        }
        if self.monte_carlo.trials == 0 {
            return Err(CliError::config("monte_carlo.trials must be >= 1"));
        }
        for (i, s) in self.sweeps.iter().enumerate() {
            s.validate()?;
            if self.sweeps[..i].iter().any(|t| t.variable == s.variable) {
                return Err(CliError::config(format!("sweep {:?} defined twice", s.variable)));
            }
        }
        for lambda in self.values(SweepVariable::DensityPerM2) {
            self.blockers_at(lambda).validate().map_err(|e| CliError::config(e.to_string()))?;
        }
        for h in self.values(SweepVariable::HmaxM) {
            if h < 0.0 {
                return Err(CliError::config(format!("hmax_m must be >= 0, got {h}")));
            }
        }
        for r in self.values(SweepVariable::RelayRadiusM) {
            if !(0.0..=self.cell.radius_m).contains(&r) {
                return Err(CliError::config(format!("relay radius {r} outside [0, {}]", self.cell.radius_m)));
            }
        }
        for d in self.values(SweepVariable::DistanceM) {
            if !(0.0..=self.cell.radius_m).contains(&d) {
                return Err(CliError::config(format!("distance {d} outside [0, {}]", self.cell.radius_m)));
            }
        }
        for h in self.values(SweepVariable::RelayHeightM) {
            if h < 0.0 {
                return Err(CliError::config(format!("relay height must be >= 0, got {h}")));
            }
        }
        Ok(())
    }

    /// Points of the sweep over `v`, or the scenario's own single value.
    pub fn values(&self, v: SweepVariable) -> Vec<f64> {
        if let Some(s) = self.sweeps.iter().find(|s| s.variable == v) {
            return s.values();
        }
        let single = match v {
            SweepVariable::DistanceM => self.cell.radius_m,
            SweepVariable::DensityPerM2 => self.blockers.density_per_m2,
            SweepVariable::HmaxM => self.blockers.height_m.map_or(f64::INFINITY, |h| h.upper()),
            SweepVariable::RelayRadiusM => self.cell.relay_radius_m,
            SweepVariable::RelayHeightM => self.cell.relay_height_m,
            SweepVariable::AzimuthDeg => 0.0,
        };
        vec![single]
    }

    pub fn blockers(&self) -> ShapeDistribution {
        self.blockers_at(self.blockers.density_per_m2)
    }

    pub fn blockers_at(&self, density: f64) -> ShapeDistribution {
        let b = &self.blockers;
        ShapeDistribution {
            length: b.length_m,
            width: b.width_m,
            height: b.height_m,
            orientation: to_radians(b.orientation_deg),
            density,
        }
    }

    pub fn scenario(&self) -> CellScenario {
        let c = &self.cell;
        CellScenario {
            radius: c.radius_m,
            bs_height: c.bs_height_m,
            ue_height: c.ue_height_m,
            relay_count: c.relay_count,
            relay_radius: c.relay_radius_m,
            relay_height: c.relay_height_m,
            sectorized: c.sectorized,
            blockers: self.blockers(),
            budgets: self.budgets,
            bs_relay_los_assumed: c.bs_relay_los_assumed,
        }
    }
}

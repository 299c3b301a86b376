//! Blockage probabilities for mmWave links under random 3D obstacles, and
//! relay placement built on top of them.
//!
//! - [`geom2d`]: convex blocking-region geometry and union areas.
//! - [`shapes`]: blocker statistics and closed-form single-link blockage.
//! - [`multilink`]: correlated blockage of several links by inclusion–exclusion.
//! - [`mc`]: Monte Carlo oracle over Poisson scenes of blockers.
//! - [`cell`]: link budgets, cell-level failure probability, relay placement.

pub mod error;
pub mod geom2d;
pub mod mc;
pub mod cell;
pub mod multilink;
pub mod quad;
pub mod shapes;

pub use error::{BlockageError, Result};

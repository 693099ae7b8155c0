//! Simulation and analysis for scattering-phase measurements in a
//! juggling cesium fountain clock.
//!
//! Two cold clouds are launched so they collide inside a Ramsey
//! interrogation window; atoms that scatter acquire the s-wave phase
//! difference of the two clock channels, which shows up as a phase shift
//! of their Ramsey fringe. The crate provides the collision physics
//! ([`scatter`]), fountain kinematics ([`fountain`]), two-level clock
//! dynamics ([`clock`]), a deterministic Monte Carlo of the colliding
//! clouds and the velocity-selective detection ([`collider`]), fringe
//! fitting and measurement campaigns ([`analysis`]), plus a JSON-driven
//! command line frontend ([`cli`]).

pub mod clock;
pub mod analysis;
pub mod collider;
pub mod constants;
pub mod error;
pub mod fountain;
pub mod scatter;

pub use error::{Error, Result};

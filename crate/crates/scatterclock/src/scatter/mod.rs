//! Single-channel elastic scattering: model potentials, radial phase
//! shift integration, tabulated phase shifts, amplitudes, cross
//! sections, and the two-channel coherence factor.

pub mod amplitude;
pub mod length;
pub mod numerov;
pub mod potential;
pub mod specfun;
pub mod squarewell;
pub mod table;

pub use amplitude::{
    coherence_factor, coherence_factor_at_cos, cross_sections, scattering_amplitude, CrossSections,
};
pub use length::{scattering_length, ScatteringLength};
pub use numerov::{solve_phase_shift, solve_phase_shift_with, SolverSettings};
pub use potential::{Potential, PotentialKind};
pub use table::PhaseShiftTable;

//! Ramsey interferometry on the cesium clock transition.
//!
//! The atom starts in |3,0>. A first pi/2 pulse splits it into an
//! equal superposition of the two clock states, the coherence then
//! precesses freely for a time T, and a second pi/2 pulse converts the
//! accumulated phase into a population difference. Everything is
//! written in the rotating frame of the microwave synthesizer, where
//! free precession advances the F = 3 amplitude relative to the F = 4
//! amplitude by 2*pi*detuning*t, so the detected fringe is
//!
//!     P3 = (1 - cos(2*pi*detuning*T + phi - beta)) / 2
//!
//! with phi any extra phase picked up by the F = 3 amplitude during
//! the free-precession window (for a scattered atom, the argument of
//! the two-channel coherence factor) and beta the microwave phase of
//! the second pulse relative to the first. Because the detuning phase
//! and the inserted phase are both diagonal in the clock basis, the
//! fringe does not care at what instant during T the collision
//! happens.
//!
//! Pulses are either ideal instantaneous rotations or square pulses of
//! finite Rabi frequency, propagated exactly with the two-level
//! rotating-wave Hamiltonian.

use num_complex::Complex64;
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, TAU};

use crate::error::{Error, Result};

/// Complex amplitudes of the two clock states |3,0> and |4,0>.
///
/// Normalized atoms satisfy |c3|^2 + |c4|^2 = 1; scattered-branch
/// records keep unit-normalized amplitudes and carry the flux in a
/// separate weight instead.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClockStateAmplitudes {
    /// Amplitude of |3,0>.
    pub c3: Complex64,
    /// Amplitude of |4,0>.
    pub c4: Complex64,
}

impl ClockStateAmplitudes {
    pub fn new(c3: Complex64, c4: Complex64) -> ClockStateAmplitudes {
        ClockStateAmplitudes { c3, c4 }
    }

    /// The |3,0> state every fountain cycle starts in.
    pub fn ground() -> ClockStateAmplitudes {
        ClockStateAmplitudes::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
    }

    /// The state right after an ideal first pulse, (|3,0> - i|4,0>)/sqrt(2).
    /// Atoms collide in this superposition.
    pub fn equal_superposition() -> ClockStateAmplitudes {
        ClockStateAmplitudes::new(
            Complex64::new(FRAC_1_SQRT_2, 0.0),
            Complex64::new(0.0, -FRAC_1_SQRT_2),
        )
    }

    /// Population of |3,0>.
    pub fn p3(&self) -> f64 {
        self.c3.norm_sqr()
    }

    /// Population of |4,0>.
    pub fn p4(&self) -> f64 {
        self.c4.norm_sqr()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c3.norm_sqr() + self.c4.norm_sqr()
    }

    /// Phase of c3 relative to c4, the quantity a collision shifts.
    pub fn coherence_phase(&self) -> f64 {
        (self.c3 * self.c4.conj()).arg()
    }
}

/// How the two Ramsey pulses are modeled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PulseModel {
    /// Instantaneous resonant pi/2 rotations. The fringe is then the
    /// closed form in the module docs.
    IdealPiOverTwo,
    /// Square pulses with Rabi frequency `omega` (rad/s) lasting
    /// `tau_p` (s), propagated at the sequence detuning. The pulse
    /// area must stay within [`PULSE_AREA_TOLERANCE`] of pi/2.
    FiniteRabi { omega: f64, tau_p: f64 },
}

/// Largest accepted deviation of the pulse area omega * tau_p from
/// pi/2, rad. Miscalibration beyond this is a configuration mistake,
/// not a systematic worth modeling.
pub const PULSE_AREA_TOLERANCE: f64 = 0.05;

/// One pulse-precess-pulse interrogation cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RamseySequence {
    /// Free-precession time between the pulses, s.
    pub t_free: f64,
    /// Synthesizer frequency minus the unperturbed clock frequency, Hz.
    pub detuning_hz: f64,
    pub pulse: PulseModel,
    /// Extra phase on c3 relative to c4 during free precession, rad.
    /// For a scattered atom this is the argument of the coherence
    /// factor; zero for unscattered atoms.
    pub inserted_phase: f64,
    /// Microwave phase of the second pulse relative to the first, rad.
    /// Models a static cavity-leakage systematic; it subtracts from
    /// the fringe phase.
    pub pulse_phase_offset: f64,
}

impl RamseySequence {
    /// A clean sequence with ideal pulses and no inserted phases.
    pub fn ideal(t_free: f64, detuning_hz: f64) -> RamseySequence {
        RamseySequence {
            t_free,
            detuning_hz,
            pulse: PulseModel::IdealPiOverTwo,
            inserted_phase: 0.0,
            pulse_phase_offset: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_free > 0.0) {
            return Err(Error::parameter(format!(
                "free-precession time must be positive, got {} s",
                self.t_free
            )));
        }
        if !self.detuning_hz.is_finite()
            || !self.inserted_phase.is_finite()
            || !self.pulse_phase_offset.is_finite()
        {
            return Err(Error::parameter(
                "detuning and phase offsets must be finite",
            ));
        }
        if let PulseModel::FiniteRabi { omega, tau_p } = self.pulse {
            if !(omega > 0.0) || !(tau_p > 0.0) {
                return Err(Error::parameter(format!(
                    "Rabi pulse needs positive omega and tau_p, got {omega} rad/s, {tau_p} s"
                )));
            }
            let area = omega * tau_p;
            if (area - FRAC_PI_2).abs() > PULSE_AREA_TOLERANCE {
                return Err(Error::parameter(format!(
                    "pulse area omega * tau_p = {area:.4} rad is not a pi/2 pulse"
                )));
            }
        }
        Ok(())
    }
}

/// Which final-state population the detector reads out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectedState {
    F3,
    F4,
}

/// Probability of finding the atom in `detect` at the end of the
/// sequence, starting from |3,0>.
pub fn ramsey_probability(seq: &RamseySequence, detect: DetectedState) -> Result<f64> {
    let (p3, p4) = ramsey_populations(seq)?;
    Ok(match detect {
        DetectedState::F3 => p3,
        DetectedState::F4 => p4,
    })
}

/// Both final-state populations (P3, P4) for one sequence. They sum
/// to one; the pair is returned so fringe scans and detector models do
/// not run the propagation twice.
pub fn ramsey_populations(seq: &RamseySequence) -> Result<(f64, f64)> {
    seq.validate()?;
    match seq.pulse {
        PulseModel::IdealPiOverTwo => {
            let phase =
                TAU * seq.detuning_hz * seq.t_free + seq.inserted_phase - seq.pulse_phase_offset;
            let p3 = 0.5 * (1.0 - phase.cos());
            Ok((p3, 1.0 - p3))
        }
        PulseModel::FiniteRabi { omega, tau_p } => {
            let delta = TAU * seq.detuning_hz;
            let first = pulse_propagator(omega, delta, tau_p, 0.0);
            let second = pulse_propagator(omega, delta, tau_p, seq.pulse_phase_offset);
            let mid = free_evolution(
                first.apply(ClockStateAmplitudes::ground()),
                delta,
                seq.t_free,
                seq.inserted_phase,
            );
            let end = second.apply(mid);
            let (p3, p4) = (end.p3(), end.p4());
            let total = p3 + p4;
            Ok((p3 / total, p4 / total))
        }
    }
}

/// Free precession for time `t` at angular detuning `delta`, with an
/// extra phase on c3. Both factors are diagonal, so where the extra
/// phase lands inside the window never matters.
fn free_evolution(
    amps: ClockStateAmplitudes,
    delta: f64,
    t: f64,
    extra_phase_on_c3: f64,
) -> ClockStateAmplitudes {
    ClockStateAmplitudes::new(
        amps.c3 * Complex64::from_polar(1.0, 0.5 * delta * t + extra_phase_on_c3),
        amps.c4 * Complex64::from_polar(1.0, -0.5 * delta * t),
    )
}

#[derive(Debug, Clone, Copy)]
struct Propagator {
    m33: Complex64,
    m34: Complex64,
    m43: Complex64,
    m44: Complex64,
}

impl Propagator {
    fn apply(&self, s: ClockStateAmplitudes) -> ClockStateAmplitudes {
        ClockStateAmplitudes::new(
            self.m33 * s.c3 + self.m34 * s.c4,
            self.m43 * s.c3 + self.m44 * s.c4,
        )
    }
}

/// Exact propagator for a square pulse: Rabi frequency `omega`,
/// angular detuning `delta`, duration `tau`, drive phase `phi`. The
/// rotation axis tilts out of the equator by the detuning, which is
/// what makes finite pulses deviate from ideal ones off resonance.
fn pulse_propagator(omega: f64, delta: f64, tau: f64, phi: f64) -> Propagator {
    let w = omega.hypot(delta);
    let (sin_half, cos_half) = (0.5 * w * tau).sin_cos();
    let tilt = Complex64::new(0.0, delta / w * sin_half);
    let kick = Complex64::new(0.0, -omega / w * sin_half);
    Propagator {
        m33: cos_half + tilt,
        m34: kick * Complex64::from_polar(1.0, phi),
        m43: kick * Complex64::from_polar(1.0, -phi),
        m44: cos_half - tilt,
    }
}

/// One point of a fringe scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringePoint {
    pub detuning_hz: f64,
    pub p3: f64,
    pub p4: f64,
}

/// Evaluate the sequence across a detuning grid. The template's own
/// detuning is ignored; everything else (pulse model, phases, T) is
/// held fixed. The grid must be finite and strictly ascending.
pub fn fringe_scan(template: &RamseySequence, grid: &[f64]) -> Result<Vec<FringePoint>> {
    if grid.is_empty() {
        return Err(Error::parameter("detuning grid is empty"));
    }
    if grid.iter().any(|nu| !nu.is_finite()) {
        return Err(Error::parameter("detuning grid contains non-finite values"));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::parameter("detuning grid must be strictly ascending"));
    }
    grid.iter()
        .map(|&detuning_hz| {
            let seq = RamseySequence {
                detuning_hz,
                ..*template
            };
            let (p3, p4) = ramsey_populations(&seq)?;
            Ok(FringePoint {
                detuning_hz,
                p3,
                p4,
            })
        })
        .collect()
}

pub const DEFAULT_GRID_POINTS: usize = 161;

/// Evenly spaced detuning grid covering +/- 2/T, wide enough to show
/// the central fringe and the first two side lobes on each side. The
/// middle point is exactly zero.
pub fn default_detuning_grid(t_free: f64) -> Result<Vec<f64>> {
    if !(t_free > 0.0) {
        return Err(Error::parameter(format!(
            "free-precession time must be positive, got {t_free} s"
        )));
    }
    let span = 2.0 / t_free;
    let half = (DEFAULT_GRID_POINTS as isize - 1) / 2;
    Ok((-half..=half)
        .map(|j| span * j as f64 / half as f64)
        .collect())
}

/// A scattered branch of the clock superposition: the amplitudes with
/// the collision phase folded in, plus the branch's relative weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteredBranch {
    pub amps: ClockStateAmplitudes,
    /// |f3||f4| in m^2, the geometric mean of the two channel fluxes.
    /// The collider turns this into expected counts; zero just means
    /// the branch never shows up in a detector sum.
    pub weight: f64,
}

/// Fold a collision into the superposition. The coherence factor
/// c = f3 * conj(f4) advances the F = 3 amplitude by arg c and leaves
/// F = 4 untouched; its magnitude becomes the branch weight. A dark
/// direction (c = 0) yields a zero-weight branch, not an error.
pub fn insert_scattering_phase(amps: &ClockStateAmplitudes, c: Complex64) -> ScatteredBranch {
    ScatteredBranch {
        amps: ClockStateAmplitudes::new(amps.c3 * Complex64::from_polar(1.0, c.arg()), amps.c4),
        weight: c.norm(),
    }
}

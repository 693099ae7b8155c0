//! Monte Carlo of the cloud collision and state-selective detection.
//!
//! Everything runs in the frame of the colliding pair's center of mass.
//! That frame is itself in free fall, so gravity cancels out of every
//! relative coordinate and all trajectories are straight lines. Cloud 2
//! moves up at +v_r/2, Cloud 1 falls onto it at -v_r/2, the two centers
//! coincide at the collision instant, and times in this module are
//! measured from that instant.
//!
//! Atoms are importance-weighted: a run draws `samples_per_cloud`
//! records per cloud and each record stands in for `N / samples`
//! physical atoms, so expected count rates come out in real atoms while
//! the sample budget stays desk-sized. Every random draw comes from a
//! counter-based stream keyed by (purpose, repetition, atom index), so
//! results are bit-identical for a given seed no matter how the work is
//! split across threads.

mod detect;
mod events;
mod sample;
mod scan;

pub use detect::detect;
pub use events::{scatter_events, ScatterSummary};
pub use sample::sample_clouds;
pub use scan::{prepare_run, synthesize_fringes, velocity_scan, FringeSet, PreparedRun, VelocityScan};

use std::f64::consts::FRAC_PI_2;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::clock::ClockStateAmplitudes;
use crate::constants::{K_B, M_CS};
use crate::error::{Error, Result};
use crate::fountain::CollisionGeometry;
use crate::scatter::PhaseShiftTable;

/// Internal state a cloud is prepared in.
///
/// `Pure` clouds sit in a single hyperfine level; only F = 3 atoms are
/// addressed by the velocity-selective probe, and F = 4 atoms are the
/// ones removed by the clearing push. `ClockSuperposition` marks the
/// cloud that rides the Ramsey interferometer: its records carry the
/// coherence between the two clock states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudState {
    Pure { f: u8, m: i8 },
    ClockSuperposition,
}

/// Which launch the cloud belongs to. Cloud 1 goes up first and comes
/// down onto Cloud 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaunchSlot {
    Cloud1,
    Cloud2,
}

/// One prepared cloud: physical atom number, temperature, initial size,
/// peak density at launch, internal state, and launch assignment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CloudSpec {
    /// Physical atoms in the cloud (importance weights sum to this).
    pub atom_count: f64,
    /// Kinetic temperature, K.
    pub temperature: f64,
    /// Initial rms radius per axis at launch, m.
    pub sigma_pos: f64,
    /// Peak number density at launch, 1/m^3. This is the field the
    /// overlap integral sees; it should agree with `atom_count` and
    /// `sigma_pos` for a Gaussian cloud, and `validate` flags it when
    /// it does not.
    pub peak_density: f64,
    pub state: CloudState,
    pub slot: LaunchSlot,
}

/// Peak density inconsistencies beyond this fraction are flagged.
pub const DENSITY_CONSISTENCY_TOLERANCE: f64 = 0.20;

impl CloudSpec {
    /// Peak density a Gaussian cloud of `atom_count` atoms with rms
    /// radius `sigma_pos` would have: N / ((2 pi)^{3/2} sigma^3).
    pub fn implied_peak_density(&self) -> f64 {
        let two_pi = 2.0 * std::f64::consts::PI;
        self.atom_count / (two_pi.powf(1.5) * self.sigma_pos.powi(3))
    }

    /// Rms radius per axis after ballistic expansion for `travel_time`
    /// seconds: sigma(t)^2 = sigma_0^2 + (k_B T / m) t^2.
    pub fn sigma_at(&self, travel_time: f64) -> f64 {
        let v2 = K_B * self.temperature / M_CS;
        (self.sigma_pos * self.sigma_pos + v2 * travel_time * travel_time).sqrt()
    }

    /// Per-axis thermal velocity spread sqrt(k_B T / m), m/s.
    pub fn thermal_rms(&self) -> f64 {
        (K_B * self.temperature / M_CS).sqrt()
    }

    /// Density at displacement-squared `r2` from the cloud center,
    /// `travel_time` seconds after launch. Scales off `peak_density`,
    /// not `atom_count`, so a deliberate density override propagates.
    pub fn density_at(&self, r2: f64, travel_time: f64) -> f64 {
        let sigma = self.sigma_at(travel_time);
        let ratio = self.sigma_pos / sigma;
        self.peak_density * ratio.powi(3) * (-r2 / (2.0 * sigma * sigma)).exp()
    }

    /// Hard errors for impossible clouds, plus advisory warnings (the
    /// run proceeds) when the stated peak density disagrees with the
    /// Gaussian density implied by the atom number and size.
    pub fn validate(&self) -> Result<Vec<String>> {
        if !(self.atom_count > 0.0) || !self.atom_count.is_finite() {
            return Err(Error::config(format!(
                "cloud atom_count must be positive and finite, got {}",
                self.atom_count
            )));
        }
        if !(self.temperature >= 0.0) || !self.temperature.is_finite() {
            return Err(Error::config(format!(
                "cloud temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        if !(self.sigma_pos > 0.0) || !self.sigma_pos.is_finite() {
            return Err(Error::config(format!(
                "cloud sigma_pos must be positive, got {}",
                self.sigma_pos
            )));
        }
        if !(self.peak_density >= 0.0) || !self.peak_density.is_finite() {
            return Err(Error::config(format!(
                "cloud peak_density must be >= 0, got {}",
                self.peak_density
            )));
        }
        if let CloudState::Pure { f, .. } = self.state {
            if f != 3 && f != 4 {
                return Err(Error::config(format!("pure cloud F must be 3 or 4, got {f}")));
            }
        }
        let mut warnings = Vec::new();
        if self.peak_density > 0.0 {
            let implied = self.implied_peak_density();
            let mismatch = (self.peak_density / implied - 1.0).abs();
            if mismatch > DENSITY_CONSISTENCY_TOLERANCE {
                warnings.push(format!(
                    "cloud peak density {:.3e} /m^3 differs from the Gaussian value \
                     {:.3e} /m^3 implied by N and sigma_pos by {:.0}%",
                    self.peak_density,
                    implied,
                    100.0 * mismatch
                ));
            }
        }
        Ok(warnings)
    }

    /// Clock amplitudes a freshly prepared atom of this cloud carries.
    /// F = 4 atoms are outside the probed pair and read as p3 = 0.
    pub(crate) fn initial_amps(&self) -> ClockStateAmplitudes {
        match self.state {
            CloudState::Pure { f: 3, .. } => ClockStateAmplitudes::ground(),
            CloudState::Pure { .. } => ClockStateAmplitudes::new(0.0.into(), 1.0.into()),
            CloudState::ClockSuperposition => ClockStateAmplitudes::equal_superposition(),
        }
    }
}

/// Raman probe velocity response.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lineshape {
    /// Unit transmission inside +- bandwidth/2, zero outside.
    TopHat,
    /// sinc^2 response of a square probe pulse, same FWHM.
    SincSquared,
}

impl Lineshape {
    /// Transmission at velocity offset `dv` from the probe center for a
    /// response of full width at half maximum `fwhm`.
    pub fn value(&self, dv: f64, fwhm: f64) -> f64 {
        match self {
            Lineshape::TopHat => {
                if dv.abs() <= 0.5 * fwhm {
                    1.0
                } else {
                    0.0
                }
            }
            Lineshape::SincSquared => {
                // sin(y)/y falls to half power at y = 1.39155737825151
                let y = 2.0 * 1.391_557_378_251_51 * dv / fwhm;
                if y.abs() < 1e-12 {
                    1.0
                } else {
                    let s = y.sin() / y;
                    s * s
                }
            }
        }
    }
}

/// When the clearing push removes Cloud 1.
///
/// `Late` pushes after the clouds have passed through each other, so
/// scattering has happened (the signal run). `Early` pushes before
/// overlap, so nothing scatters (the reference run). `BackgroundOnly`
/// inhibits Cloud 2 preparation entirely and measures what the
/// detector sees with no probed cloud present.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clearing {
    Early,
    Late,
    BackgroundOnly,
}

/// Velocity-selective probe and detection geometry.
///
/// All apertures are diameters (full heights), not radii. The vertical
/// aperture is a top-hat cut on position at detection time; detection
/// is timed so the probed velocity class is centered in it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionSpec {
    /// Probe velocity in the collision center-of-mass frame, m/s.
    pub probe_vz: f64,
    /// Velocity response full width at half maximum, m/s.
    pub probe_bandwidth: f64,
    pub lineshape: Lineshape,
    /// Vertical extent of the detection aperture, m.
    pub aperture_height: f64,
    /// Detection laser beam diameter (transverse cut at detection), m.
    pub detection_beam_diameter: f64,
    /// Cavity bore diameter (transverse cut at the downward cavity
    /// passage), m.
    pub cavity_aperture: f64,
    pub clearing: Clearing,
}

pub const DEFAULT_PROBE_BANDWIDTH: f64 = 1.4e-2;
pub const DEFAULT_APERTURE_HEIGHT: f64 = 1.0e-2;
pub const DEFAULT_BEAM_DIAMETER: f64 = 2.0e-2;
pub const DEFAULT_CAVITY_APERTURE: f64 = 1.8e-2;

impl Default for DetectionSpec {
    fn default() -> Self {
        DetectionSpec {
            probe_vz: 0.0,
            probe_bandwidth: DEFAULT_PROBE_BANDWIDTH,
            lineshape: Lineshape::TopHat,
            aperture_height: DEFAULT_APERTURE_HEIGHT,
            detection_beam_diameter: DEFAULT_BEAM_DIAMETER,
            cavity_aperture: DEFAULT_CAVITY_APERTURE,
            clearing: Clearing::Late,
        }
    }
}

impl DetectionSpec {
    pub fn validate(&self) -> Result<()> {
        if !self.probe_vz.is_finite() {
            return Err(Error::config(format!("probe_vz must be finite, got {}", self.probe_vz)));
        }
        for (name, v) in [
            ("probe_bandwidth", self.probe_bandwidth),
            ("aperture_height", self.aperture_height),
            ("detection_beam_diameter", self.detection_beam_diameter),
            ("cavity_aperture", self.cavity_aperture),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// One weighted Monte Carlo branch: either an atom that passed through
/// unscattered, or the scattered branch split off one.
///
/// `position` is the center-of-mass-frame position at time `epoch`
/// after the collision instant (zero for unscattered records, the
/// scattering time for scattered ones); `velocity` is constant in this
/// frame. `visibility` is the fringe contrast the branch retains: the
/// coherent fraction 2|f3||f4| / (|f3|^2 + |f4|^2) of the scattered
/// flux, 1 for unscattered atoms.
#[derive(Debug, Clone, Copy)]
pub struct AtomRecord {
    pub position: [f64; 3],
    pub velocity: [f64; 3],
    /// Physical atoms this record stands for. Non-negative.
    pub weight: f64,
    pub scattered: bool,
    /// Scattering angles in the collision-axis frame, rad. Meaningful
    /// only when `scattered` is set.
    pub scatter_theta: f64,
    pub scatter_phi: f64,
    /// Time of `position` relative to the collision instant, s.
    pub epoch: f64,
    pub visibility: f64,
    pub amps: ClockStateAmplitudes,
}

impl AtomRecord {
    /// Straight-line position at time `tau` after the collision.
    pub fn position_at(&self, tau: f64) -> [f64; 3] {
        let dt = tau - self.epoch;
        [
            self.position[0] + self.velocity[0] * dt,
            self.position[1] + self.velocity[1] * dt,
            self.position[2] + self.velocity[2] * dt,
        ]
    }

    /// Collision phase carried by a superposition record: the angle the
    /// 3-4 coherence has been advanced relative to a fresh equal
    /// superposition. Zero for unscattered superposition records.
    pub fn inserted_phase(&self) -> f64 {
        self.amps.coherence_phase() - FRAC_PI_2
    }
}

/// A weighted set of records plus the physical atom number it carries.
#[derive(Debug, Clone, Default)]
pub struct Ensemble {
    pub atoms: Vec<AtomRecord>,
    pub total_weight: f64,
}

impl Ensemble {
    pub(crate) fn from_atoms(atoms: Vec<AtomRecord>) -> Ensemble {
        let total_weight = atoms.iter().map(|a| a.weight).sum();
        Ensemble { atoms, total_weight }
    }
}

/// How the Ramsey phase of scattered branches enters the fringe.
///
/// `PerAtom` uses each record's own inserted phase, evaluated at its
/// sampled scattering angle. `NominalAngle` evaluates the coherence
/// factor once, at the angle the probe velocity nominally selects
/// (cos theta = 2 probe_vz / v_r), and applies it to every scattered
/// branch; per-branch weights, visibilities, and kinematics are
/// untouched. The two agree identically for pure s-wave channels,
/// where the coherence phase is angle-independent, and differ by the
/// sub-milliradian dispersion of the phase across the probe's velocity
/// window otherwise. `NominalAngle` is the default: it reads out the
/// channel phase difference at exactly the angle the probe is tuned
/// to, which is the quantity the instrument reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseMode {
    PerAtom,
    NominalAngle,
}

/// Everything a collision run needs: the two clouds, the fountain
/// geometry, one phase-shift table per clock channel, the detection
/// instrument, and sampling controls.
#[derive(Debug, Clone)]
pub struct ColliderSetup<'a> {
    pub cloud1: CloudSpec,
    pub cloud2: CloudSpec,
    pub geometry: CollisionGeometry,
    /// Phase shifts for collisions of the F = 3 clock state on Cloud 1.
    pub table3: &'a PhaseShiftTable,
    /// Phase shifts for collisions of the F = 4 clock state on Cloud 1.
    pub table4: &'a PhaseShiftTable,
    pub detection: DetectionSpec,
    pub samples_per_cloud: usize,
    pub max_samples: usize,
    /// Fraction of Cloud 1 left in F = 3 by imperfect state
    /// preparation. These atoms survive the clearing push and are what
    /// the background runs measure.
    pub impurity_fraction: f64,
    /// Expected detector counts per run with no atoms at all.
    pub dark_counts_mean: f64,
    /// Fraction of atoms in the detection volume that register as
    /// counts.
    pub detection_efficiency: f64,
    /// When set, each collision samples a thermal partner velocity
    /// from Cloud 1 and evaluates the cross section and coherence
    /// factor at that pair's relative wavenumber instead of the
    /// nominal one.
    pub thermal_averaging: bool,
    pub phase_mode: PhaseMode,
    pub seed: u64,
}

impl ColliderSetup<'_> {
    /// Hard validation plus accumulated advisory warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        let mut warnings = self.cloud1.validate()?;
        warnings.extend(self.cloud2.validate()?);
        if self.cloud1.slot != LaunchSlot::Cloud1 || self.cloud2.slot != LaunchSlot::Cloud2 {
            return Err(Error::config(
                "cloud launch slots are crossed: cloud1 must be LaunchSlot::Cloud1 \
                 and cloud2 LaunchSlot::Cloud2",
            ));
        }
        match self.cloud1.state {
            CloudState::Pure { f: 4, .. } => {}
            _ => {
                return Err(Error::config(
                    "Cloud 1 must be prepared pure in F = 4: the clearing push removes \
                     F = 4 atoms and the collision model clears Cloud 1 with it",
                ))
            }
        }
        if self.samples_per_cloud == 0 {
            return Err(Error::config("samples_per_cloud must be at least 1"));
        }
        if self.samples_per_cloud > self.max_samples {
            return Err(Error::config(format!(
                "sample budget exceeded: samples_per_cloud = {} > max_samples = {}",
                self.samples_per_cloud, self.max_samples
            )));
        }
        if !(0.0..=1.0).contains(&self.impurity_fraction) {
            return Err(Error::config(format!(
                "impurity_fraction must lie in [0, 1], got {}",
                self.impurity_fraction
            )));
        }
        if !(self.dark_counts_mean >= 0.0) || !self.dark_counts_mean.is_finite() {
            return Err(Error::config(format!(
                "dark_counts_mean must be >= 0, got {}",
                self.dark_counts_mean
            )));
        }
        if !(self.detection_efficiency > 0.0 && self.detection_efficiency <= 1.0) {
            return Err(Error::config(format!(
                "detection_efficiency must lie in (0, 1], got {}",
                self.detection_efficiency
            )));
        }
        self.detection.validate()?;
        let k = self.geometry.relative_wavenumber();
        for (name, table) in [("channel 3", self.table3), ("channel 4", self.table4)] {
            if k < table.k_min() || k > table.k_max() {
                return Err(Error::config(format!(
                    "{name} phase-shift table [{:.3e}, {:.3e}] 1/m does not cover the \
                     collision wavenumber {k:.3e} 1/m",
                    table.k_min(),
                    table.k_max()
                )));
            }
        }
        Ok(warnings)
    }

    /// Time from the collision until the pair falls back through the
    /// cavity bore (the second Ramsey pulse instant).
    pub(crate) fn tau_cavity(&self) -> f64 {
        self.geometry.t_pulse1 + self.geometry.t_ramsey - self.geometry.t_collide
    }

    /// Cloud 2's flight time from its own launch to the collision.
    pub(crate) fn travel_time2(&self) -> f64 {
        self.geometry.t_collide - self.geometry.plan.dt_launch
    }
}

// Stream-purpose tags for the counter-based generators. Every draw in
// a run comes from ChaCha8 keyed by the user seed with the stream
// counter set to (purpose << 56) | (rep << 48) | index, so adding or
// reordering parallel work never perturbs another purpose's draws.
pub(crate) const STREAM_CLOUD1: u64 = 1;
pub(crate) const STREAM_CLOUD2: u64 = 2;
pub(crate) const STREAM_REMNANT: u64 = 3;
pub(crate) const STREAM_EVENTS: u64 = 4;
pub(crate) const STREAM_NOISE: u64 = 5;

pub(crate) fn stream_rng(seed: u64, purpose: u64, rep: u64, index: u64) -> ChaCha8Rng {
    debug_assert!(purpose < 256 && rep < 256 && index < (1 << 48));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((purpose << 56) | (rep << 48) | index);
    rng
}

/// Fixed-order parallel sum: chunks are mapped in parallel but combined
/// sequentially, so the floating-point result is independent of the
/// number of worker threads.
pub(crate) fn chunked_sum<T, F>(items: &[T], map: F) -> f64
where
    T: Sync,
    F: Fn(&T) -> f64 + Sync,
{
    use rayon::prelude::*;
    const CHUNK: usize = 4096;
    items
        .par_chunks(CHUNK)
        .map(|chunk| chunk.iter().map(&map).sum::<f64>())
        .collect::<Vec<_>>()
        .into_iter()
        .sum()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::fountain::{collision_geometry, LaunchPlan};

    pub(crate) fn paper_cloud1() -> CloudSpec {
        CloudSpec {
            atom_count: 1.6e9,
            temperature: 500e-9,
            sigma_pos: 2.5678302453e-3,
            peak_density: 6e15,
            state: CloudState::Pure { f: 4, m: 4 },
            slot: LaunchSlot::Cloud1,
        }
    }

    pub(crate) fn paper_cloud2() -> CloudSpec {
        CloudSpec {
            atom_count: 3e8,
            temperature: 250e-9,
            sigma_pos: 2.5131788839e-3,
            peak_density: 1.2e15,
            state: CloudState::ClockSuperposition,
            slot: LaunchSlot::Cloud2,
        }
    }

    pub(crate) fn paper_geometry() -> CollisionGeometry {
        let plan = LaunchPlan::for_collision_speed(2.4895, 0.30, 9.80, 0.0992, 0.5).unwrap();
        collision_geometry(&plan).unwrap()
    }

    pub(crate) fn swave_tables() -> (PhaseShiftTable, PhaseShiftTable) {
        (
            PhaseShiftTable::constant(&[1.5003], 1e6, 1e9, 12).unwrap(),
            PhaseShiftTable::constant(&[1.6413], 1e6, 1e9, 12).unwrap(),
        )
    }

    pub(crate) fn setup_with<'a>(
        t3: &'a PhaseShiftTable,
        t4: &'a PhaseShiftTable,
        samples: usize,
    ) -> ColliderSetup<'a> {
        ColliderSetup {
            cloud1: paper_cloud1(),
            cloud2: paper_cloud2(),
            geometry: paper_geometry(),
            table3: t3,
            table4: t4,
            detection: DetectionSpec::default(),
            samples_per_cloud: samples,
            max_samples: 2_000_000,
            impurity_fraction: 0.005,
            dark_counts_mean: 0.0,
            detection_efficiency: 1.0,
            thermal_averaging: false,
            phase_mode: PhaseMode::NominalAngle,
            seed: 20_240_601,
        }
    }

    #[test]
    fn implied_density_matches_the_published_pair() {
        // the default sizes were chosen so N, sigma, and n0 agree
        let c1 = paper_cloud1();
        assert!((c1.implied_peak_density() / c1.peak_density - 1.0).abs() < 1e-6);
        assert!(c1.validate().unwrap().is_empty());
        let c2 = paper_cloud2();
        assert!((c2.implied_peak_density() / c2.peak_density - 1.0).abs() < 1e-6);
        assert!(c2.validate().unwrap().is_empty());
    }

    #[test]
    fn density_mismatch_is_flagged_not_fatal() {
        let mut c = paper_cloud1();
        c.peak_density *= 1.5;
        let warnings = c.validate().unwrap();
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("differs"), "{}", warnings[0]);
        // within the 20% band stays quiet
        c.peak_density = c.implied_peak_density() * 1.15;
        assert!(c.validate().unwrap().is_empty());
    }

    #[test]
    fn impossible_clouds_are_rejected() {
        let mut c = paper_cloud2();
        c.atom_count = 0.0;
        assert!(c.validate().is_err());
        let mut c = paper_cloud2();
        c.temperature = -1e-9;
        assert!(c.validate().is_err());
        let mut c = paper_cloud2();
        c.sigma_pos = 0.0;
        assert!(c.validate().is_err());
        let mut c = paper_cloud1();
        c.state = CloudState::Pure { f: 5, m: 0 };
        assert!(c.validate().is_err());
    }

    #[test]
    fn lineshapes_have_the_stated_width() {
        let fwhm = 1.4e-2;
        assert_eq!(Lineshape::TopHat.value(0.69e-2, fwhm), 1.0);
        assert_eq!(Lineshape::TopHat.value(0.71e-2, fwhm), 0.0);
        assert!((Lineshape::SincSquared.value(0.7e-2, fwhm) - 0.5).abs() < 1e-9);
        assert_eq!(Lineshape::SincSquared.value(0.0, fwhm), 1.0);
    }

    #[test]
    fn ballistic_expansion_grows_the_rms_radius() {
        let c = paper_cloud2();
        let v = c.thermal_rms();
        assert!((v - 3.9547197567e-3).abs() < 1e-12);
        let t = 0.25;
        let expect = (c.sigma_pos.powi(2) + (v * t).powi(2)).sqrt();
        assert!((c.sigma_at(t) - expect).abs() < 1e-18);
        assert_eq!(c.sigma_at(0.0), c.sigma_pos);
    }
}

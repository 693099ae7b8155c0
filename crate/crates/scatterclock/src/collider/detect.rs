//! State-selective detection of a prepared run.
//!
//! A detection pass applies, per record: the velocity-selective probe
//! response around `probe_vz`, the cavity bore cut at the second-pulse
//! instant, the detection beam's transverse cut, and the vertical
//! aperture at detection time (detection is timed so the probed
//! velocity class sits centered in it). What survives is weighted by
//! the record's F = 3 probability: the bare population when no Ramsey
//! sequence runs, or the full pulse-precess-pulse readout when one
//! does.
//!
//! Scattered branches enter the Ramsey readout as a partially coherent
//! mixture: a fraction `visibility` fringes at the branch's collision
//! phase, the remainder contributes a flat 1/2. With ideal pulses the
//! whole class collapses to two numbers (a flat term and a complex
//! fringe amplitude), so a fringe scan costs one pass over the records
//! no matter how many detunings it covers.

use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::TAU;

use super::scan::PreparedRun;
use super::{
    chunked_sum, AtomRecord, Clearing, CloudState, ColliderSetup, DetectionSpec, Ensemble,
    PhaseMode,
};
use crate::clock::{ramsey_populations, PulseModel, RamseySequence};
use crate::error::{Error, Result};
use crate::scatter::amplitude::amplitude_from_deltas;

/// Expected detector counts for one probe setting on a prepared run.
/// `ramsey` selects the readout: `None` probes the F = 3 population as
/// prepared, `Some` runs the interrogation sequence at its own
/// detuning (its `inserted_phase` must be zero; collisions insert
/// their own).
pub fn detect(
    setup: &ColliderSetup,
    run: &PreparedRun,
    detection: &DetectionSpec,
    ramsey: Option<&RamseySequence>,
) -> Result<f64> {
    match ramsey {
        Some(template) => {
            Ok(detect_fringe(setup, run, detection, template, &[template.detuning_hz])?[0])
        }
        None => {
            detection.validate()?;
            let (main, remnant) = class_atoms(run, detection.clearing);
            let cuts = Cuts::of(setup, detection);
            let atoms = chunked_sum(&main.atoms, |a| a.weight * cuts.acceptance(a) * a.amps.p3())
                + chunked_sum(&remnant.atoms, |a| a.weight * cuts.acceptance(a) * a.amps.p3());
            Ok(setup.detection_efficiency * atoms.max(0.0) + setup.dark_counts_mean)
        }
    }
}

/// Expected counts across a whole detuning grid, one interrogation per
/// point. The template's detuning is ignored in favor of the grid.
pub(crate) fn detect_fringe(
    setup: &ColliderSetup,
    run: &PreparedRun,
    detection: &DetectionSpec,
    template: &RamseySequence,
    grid: &[f64],
) -> Result<Vec<f64>> {
    detection.validate()?;
    template.validate()?;
    if template.inserted_phase != 0.0 {
        return Err(Error::config(
            "the interrogation template must have zero inserted_phase; \
             scattered branches carry their own collision phase",
        ));
    }
    let (main, remnant) = class_atoms(run, detection.clearing);
    if !main.atoms.is_empty() && setup.cloud2.state != CloudState::ClockSuperposition {
        return Err(Error::config(
            "Ramsey readout needs Cloud 2 prepared in the clock superposition",
        ));
    }
    let cuts = Cuts::of(setup, detection);
    let phase_of = ScatterPhase::of(setup, detection)?;
    // the impurity background rides through the pulses inert: it sits
    // in hyperfine levels the clock drive does not address
    let rem = chunked_sum(&remnant.atoms, |a| a.weight * cuts.acceptance(a) * a.amps.p3());
    let finish = |atoms: f64| -> f64 {
        setup.detection_efficiency * (atoms + rem).max(0.0) + setup.dark_counts_mean
    };
    match template.pulse {
        PulseModel::IdealPiOverTwo => {
            let kernel = FringeKernel::over(&main.atoms, &cuts, &phase_of, template);
            Ok(grid.iter().map(|&nu| finish(kernel.atom_counts(nu))).collect())
        }
        PulseModel::FiniteRabi { .. } => Ok(grid
            .iter()
            .map(|&nu| {
                let seq = RamseySequence { detuning_hz: nu, ..*template };
                finish(chunked_sum(&main.atoms, |a| {
                    let acc = cuts.acceptance(a);
                    if acc == 0.0 {
                        return 0.0;
                    }
                    a.weight * acc * ramsey_factor(a, &phase_of, &seq)
                }))
            })
            .collect()),
    }
}

static EMPTY: Ensemble = Ensemble { atoms: Vec::new(), total_weight: 0.0 };

fn class_atoms(run: &PreparedRun, clearing: Clearing) -> (&Ensemble, &Ensemble) {
    match clearing {
        Clearing::Late => (&run.collided, &run.remnant),
        Clearing::Early => (&run.unscattered, &run.remnant),
        Clearing::BackgroundOnly => (&EMPTY, &run.remnant),
    }
}

/// The geometric and spectroscopic cuts of one detection pass.
pub(crate) struct Cuts {
    probe_vz: f64,
    bandwidth: f64,
    lineshape: super::Lineshape,
    half_height: f64,
    beam_r2: f64,
    cavity_r2: f64,
    tau_det: f64,
    tau_cav: f64,
}

impl Cuts {
    pub(crate) fn of(setup: &ColliderSetup, detection: &DetectionSpec) -> Cuts {
        Cuts {
            probe_vz: detection.probe_vz,
            bandwidth: detection.probe_bandwidth,
            lineshape: detection.lineshape,
            half_height: 0.5 * detection.aperture_height,
            beam_r2: (0.5 * detection.detection_beam_diameter).powi(2),
            cavity_r2: (0.5 * detection.cavity_aperture).powi(2),
            tau_det: setup.geometry.t_detect_delay,
            tau_cav: setup.tau_cavity(),
        }
    }

    /// Transmission of one record through every cut, in [0, 1].
    pub(crate) fn acceptance(&self, a: &AtomRecord) -> f64 {
        let line = self.lineshape.value(a.velocity[2] - self.probe_vz, self.bandwidth);
        if line == 0.0 {
            return 0.0;
        }
        line * self.geometric(a, self.probe_vz)
    }

    /// The position cuts alone, with the vertical aperture centered on
    /// the class `class_vz`: 1 if the record survives, else 0.
    pub(crate) fn geometric(&self, a: &AtomRecord, class_vz: f64) -> f64 {
        let at_cavity = a.position_at(self.tau_cav);
        if at_cavity[0] * at_cavity[0] + at_cavity[1] * at_cavity[1] > self.cavity_r2 {
            return 0.0;
        }
        let at_detect = a.position_at(self.tau_det);
        if at_detect[0] * at_detect[0] + at_detect[1] * at_detect[1] > self.beam_r2 {
            return 0.0;
        }
        if (at_detect[2] - class_vz * self.tau_det).abs() > self.half_height {
            return 0.0;
        }
        1.0
    }
}

/// How a scattered record's collision phase enters the fringe.
pub(crate) enum ScatterPhase {
    PerAtom,
    Nominal(f64),
}

impl ScatterPhase {
    /// Resolve the setup's phase mode at this probe setting. In
    /// nominal-angle mode the coherence factor is evaluated once, at
    /// the angle whose half-speed-sphere velocity the probe selects.
    pub(crate) fn of(setup: &ColliderSetup, detection: &DetectionSpec) -> Result<ScatterPhase> {
        match setup.phase_mode {
            PhaseMode::PerAtom => Ok(ScatterPhase::PerAtom),
            PhaseMode::NominalAngle => {
                let k = setup.geometry.relative_wavenumber();
                let cos_theta = (2.0 * detection.probe_vz / setup.geometry.v_r).clamp(-1.0, 1.0);
                let f3 = amplitude_from_deltas(&setup.table3.deltas_at(k)?, k, cos_theta);
                let f4 = amplitude_from_deltas(&setup.table4.deltas_at(k)?, k, cos_theta);
                Ok(ScatterPhase::Nominal((f3 * f4.conj()).arg()))
            }
        }
    }

    fn phase(&self, a: &AtomRecord) -> f64 {
        if !a.scattered {
            return 0.0;
        }
        match self {
            ScatterPhase::PerAtom => a.inserted_phase(),
            ScatterPhase::Nominal(phi) => *phi,
        }
    }
}

/// F = 3 probability of one record after the full sequence: the
/// coherent fraction fringes at the record's phase, the rest sits at
/// one half regardless of pulse shape.
fn ramsey_factor(a: &AtomRecord, phase_of: &ScatterPhase, seq: &RamseySequence) -> f64 {
    let seq = RamseySequence { inserted_phase: phase_of.phase(a), ..*seq };
    let (p3, _) = ramsey_populations(&seq).expect("template validated before the record loop");
    a.visibility * p3 + (1.0 - a.visibility) * 0.5
}

/// One ideal-pulse pass over a record class, reduced to the two sums
/// that determine the whole fringe:
///
///   counts(nu) = flat - Re(e^{i (2 pi nu T - beta)} spinning)
///
/// with `flat` half the accepted weight and `spinning` the accepted,
/// visibility-weighted coherence.
pub(crate) struct FringeKernel {
    flat: f64,
    spinning: Complex64,
    t_free: f64,
    beta: f64,
}

impl FringeKernel {
    pub(crate) fn over(
        atoms: &[AtomRecord],
        cuts: &Cuts,
        phase_of: &ScatterPhase,
        template: &RamseySequence,
    ) -> FringeKernel {
        const CHUNK: usize = 4096;
        let partials: Vec<(f64, f64, f64)> = atoms
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut flat = 0.0;
                let mut re = 0.0;
                let mut im = 0.0;
                for a in chunk {
                    let acc = cuts.acceptance(a);
                    if acc == 0.0 {
                        continue;
                    }
                    let wa = 0.5 * a.weight * acc;
                    flat += wa;
                    let (sin_phi, cos_phi) = phase_of.phase(a).sin_cos();
                    re += wa * a.visibility * cos_phi;
                    im += wa * a.visibility * sin_phi;
                }
                (flat, re, im)
            })
            .collect();
        let mut flat = 0.0;
        let mut spinning = Complex64::new(0.0, 0.0);
        for (f, re, im) in partials {
            flat += f;
            spinning += Complex64::new(re, im);
        }
        FringeKernel {
            flat,
            spinning,
            t_free: template.t_free,
            beta: template.pulse_phase_offset,
        }
    }

    /// Expected accepted atoms (before efficiency, dark counts, and the
    /// clearing-surviving background) at one detuning.
    pub(crate) fn atom_counts(&self, detuning_hz: f64) -> f64 {
        let theta = TAU * detuning_hz * self.t_free - self.beta;
        self.flat - (Complex64::from_polar(1.0, theta) * self.spinning).re
    }
}

#[cfg(test)]
mod tests {
    use super::super::scan::prepare_run;
    use super::super::tests::{setup_with, swave_tables};
    use super::super::{Clearing, CloudState};
    use super::*;
    use crate::clock::RamseySequence;

    #[test]
    fn far_detuned_probe_sees_nothing() {
        let (t3, t4) = swave_tables();
        let setup = setup_with(&t3, &t4, 4000);
        let run = prepare_run(&setup, 0).unwrap();
        let mut det = setup.detection;
        det.probe_vz = 0.4;
        assert_eq!(detect(&setup, &run, &det, None).unwrap(), 0.0);
        det.probe_vz = -0.4;
        assert_eq!(detect(&setup, &run, &det, None).unwrap(), 0.0);
    }

    #[test]
    fn unscattered_peak_has_the_expected_acceptance() {
        let (t3, t4) = swave_tables();
        let mut setup = setup_with(&t3, &t4, 30_000);
        setup.impurity_fraction = 0.0;
        let run = prepare_run(&setup, 0).unwrap();
        let mut det = setup.detection;
        det.probe_vz = setup.geometry.v_z2;
        det.clearing = Clearing::Early;
        let counts = detect(&setup, &run, &det, None).unwrap();
        // acceptance of the unscattered class at its own velocity
        // class, cross-checked against an independent sampler; the 0.5
        // is the F = 3 population of the superposition
        let fraction = counts / (0.5 * run.unscattered.total_weight);
        assert!((fraction - 0.8332).abs() < 0.02, "acceptance {fraction:.4}");
    }

    #[test]
    fn tighter_cuts_only_lose_atoms() {
        let (t3, t4) = swave_tables();
        let setup = setup_with(&t3, &t4, 10_000);
        let run = prepare_run(&setup, 0).unwrap();
        let mut det = setup.detection;
        det.probe_vz = setup.geometry.v_z2;
        det.clearing = Clearing::Early;
        let base = detect(&setup, &run, &det, None).unwrap();
        assert!(base > 0.0);
        let mut narrow = det;
        narrow.aperture_height = det.aperture_height / 10.0;
        let clipped = detect(&setup, &run, &narrow, None).unwrap();
        assert!(clipped < 0.7 * base, "clipped {clipped:e} vs {base:e}");
        let mut slim = det;
        slim.probe_bandwidth = det.probe_bandwidth / 4.0;
        let filtered = detect(&setup, &run, &slim, None).unwrap();
        assert!(filtered < base);
        let mut bore = det;
        bore.cavity_aperture = det.cavity_aperture / 6.0;
        assert!(detect(&setup, &run, &bore, None).unwrap() < 0.9 * base);
    }

    #[test]
    fn background_class_is_remnant_only() {
        let (t3, t4) = swave_tables();
        let setup = setup_with(&t3, &t4, 8000);
        let run = prepare_run(&setup, 0).unwrap();
        let mut det = setup.detection;
        det.clearing = Clearing::BackgroundOnly;
        // at the Cloud 1 velocity class the remnant shows up
        det.probe_vz = setup.geometry.v_z1;
        let bg = detect(&setup, &run, &det, None).unwrap();
        assert!(bg > 0.0);
        // and it is impurity-sized, not cloud-sized
        assert!(bg < 2.0 * setup.impurity_fraction * setup.cloud1.atom_count);
        // with zero impurity nothing is left
        let mut clean = setup.clone();
        clean.impurity_fraction = 0.0;
        let run = prepare_run(&clean, 0).unwrap();
        assert_eq!(detect(&clean, &run, &det, None).unwrap(), 0.0);
    }

    #[test]
    fn dark_counts_shift_every_class_equally() {
        let (t3, t4) = swave_tables();
        let mut setup = setup_with(&t3, &t4, 2000);
        setup.dark_counts_mean = 17.0;
        let run = prepare_run(&setup, 0).unwrap();
        let mut det = setup.detection;
        det.probe_vz = 0.4;
        for clearing in [Clearing::Late, Clearing::Early, Clearing::BackgroundOnly] {
            det.clearing = clearing;
            assert_eq!(detect(&setup, &run, &det, None).unwrap(), 17.0);
        }
    }

    #[test]
    fn ramsey_on_a_pure_cloud_is_a_config_error() {
        let (t3, t4) = swave_tables();
        let mut setup = setup_with(&t3, &t4, 200);
        setup.cloud2.state = CloudState::Pure { f: 3, m: 0 };
        let run = prepare_run(&setup, 0).unwrap();
        let seq = RamseySequence::ideal(setup.geometry.t_ramsey, 0.0);
        let err = detect(&setup, &run, &setup.detection, Some(&seq)).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn template_with_preset_phase_is_rejected() {
        let (t3, t4) = swave_tables();
        let setup = setup_with(&t3, &t4, 200);
        let run = prepare_run(&setup, 0).unwrap();
        let mut seq = RamseySequence::ideal(setup.geometry.t_ramsey, 0.0);
        seq.inserted_phase = 0.3;
        assert!(detect(&setup, &run, &setup.detection, Some(&seq)).is_err());
    }

    #[test]
    fn unscattered_central_fringe_is_dark() {
        let (t3, t4) = swave_tables();
        let mut setup = setup_with(&t3, &t4, 20_000);
        setup.impurity_fraction = 0.0;
        let run = prepare_run(&setup, 0).unwrap();
        let mut det = setup.detection;
        det.probe_vz = setup.geometry.v_z2;
        det.clearing = Clearing::Early;
        let seq = RamseySequence::ideal(setup.geometry.t_ramsey, 0.0);
        let dark = detect(&setup, &run, &det, Some(&seq)).unwrap();
        let bright = detect(
            &setup,
            &run,
            &det,
            Some(&RamseySequence::ideal(
                setup.geometry.t_ramsey,
                0.5 / setup.geometry.t_ramsey,
            )),
        )
        .unwrap();
        assert!(dark < 1e-9 * bright, "dark {dark:e}, bright {bright:e}");
    }

    #[test]
    fn ideal_kernel_agrees_with_short_rabi_pulses() {
        let (t3, t4) = swave_tables();
        let setup = setup_with(&t3, &t4, 6000);
        let run = prepare_run(&setup, 0).unwrap();
        let t_free = setup.geometry.t_ramsey;
        for nu in [0.0, 1.7, -3.9] {
            let ideal = detect(
                &setup,
                &run,
                &setup.detection,
                Some(&RamseySequence::ideal(t_free, nu)),
            )
            .unwrap();
            let tau_p = 1e-6;
            let rabi = detect(
                &setup,
                &run,
                &setup.detection,
                Some(&RamseySequence {
                    pulse: PulseModel::FiniteRabi {
                        omega: std::f64::consts::FRAC_PI_2 / tau_p,
                        tau_p,
                    },
                    ..RamseySequence::ideal(t_free, nu)
                }),
            )
            .unwrap();
            let scale = setup.cloud2.atom_count * 1e-4;
            assert!(
                (ideal - rabi).abs() < 1e-3 * scale + 1e-6 * ideal.abs(),
                "nu = {nu}: ideal {ideal:e} vs rabi {rabi:e}"
            );
        }
    }

    #[test]
    fn phase_modes_agree_for_s_wave_channels() {
        let (t3, t4) = swave_tables();
        let mut per_atom = setup_with(&t3, &t4, 5000);
        per_atom.phase_mode = super::super::PhaseMode::PerAtom;
        let nominal = setup_with(&t3, &t4, 5000);
        let run_a = prepare_run(&per_atom, 0).unwrap();
        let run_b = prepare_run(&nominal, 0).unwrap();
        let seq = RamseySequence::ideal(per_atom.geometry.t_ramsey, 2.3);
        let a = detect(&per_atom, &run_a, &per_atom.detection, Some(&seq)).unwrap();
        let b = detect(&nominal, &run_b, &nominal.detection, Some(&seq)).unwrap();
        assert!(
            (a - b).abs() <= 1e-9 * a.abs().max(1.0),
            "per-atom {a:e} vs nominal {b:e}"
        );
    }
}


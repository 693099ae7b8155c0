//! Drawing the two clouds at the collision instant.
//!
//! Positions and velocities are correlated by free flight: an atom
//! drawn with thermal velocity offset dv and initial position r0 sits
//! at r0 + dv * t_travel when the cloud centers meet. Sampling in
//! these coordinates reproduces the ballistic rms growth
//! sigma(t)^2 = sigma_0^2 + (k_B T / m) t^2 exactly, including the
//! position-velocity correlation that later turns the scattered shell
//! into a sharp velocity sphere.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{
    stream_rng, AtomRecord, CloudSpec, ColliderSetup, Ensemble, LaunchSlot, STREAM_CLOUD1,
    STREAM_CLOUD2, STREAM_REMNANT,
};
use crate::error::Result;

/// Draw both clouds in the center-of-mass frame at the collision
/// instant. `rep` selects an independent repetition of the experiment
/// under the same seed (fresh atoms, same physics).
///
/// Cloud 1 records are not probe-addressable (F = 4) and exist for
/// diagnostics and the impurity background; Cloud 2 records are the
/// interferometer's atoms.
pub fn sample_clouds(setup: &ColliderSetup, rep: u32) -> Result<(Ensemble, Ensemble)> {
    setup.validate()?;
    let ens1 = sample_cloud(
        &setup.cloud1,
        setup.geometry.v_z1,
        setup.geometry.t_collide,
        setup.samples_per_cloud,
        setup.seed,
        STREAM_CLOUD1,
        rep,
        1.0,
    );
    let ens2 = sample_cloud(
        &setup.cloud2,
        setup.geometry.v_z2,
        setup.travel_time2(),
        setup.samples_per_cloud,
        setup.seed,
        STREAM_CLOUD2,
        rep,
        1.0,
    );
    Ok((ens1, ens2))
}

/// The sliver of Cloud 1 that imperfect state preparation leaves in
/// F = 3. It survives the clearing push, so it is what background runs
/// (and the wings of velocity scans) detect.
pub(crate) fn remnant_cloud(setup: &ColliderSetup, rep: u32) -> Ensemble {
    if setup.impurity_fraction == 0.0 {
        return Ensemble::default();
    }
    // imperfect optical pumping dumps atoms across the F = 3 manifold;
    // the m = 0 clock level gets a negligible share, so the remnant is
    // modeled in a stretched sublevel the interrogation never drives
    let mut spec = setup.cloud1;
    spec.state = super::CloudState::Pure { f: 3, m: 2 };
    sample_cloud(
        &spec,
        setup.geometry.v_z1,
        setup.geometry.t_collide,
        setup.samples_per_cloud,
        setup.seed,
        STREAM_REMNANT,
        rep,
        setup.impurity_fraction,
    )
}

#[allow(clippy::too_many_arguments)]
fn sample_cloud(
    spec: &CloudSpec,
    center_vz: f64,
    travel_time: f64,
    samples: usize,
    seed: u64,
    purpose: u64,
    rep: u32,
    weight_scale: f64,
) -> Ensemble {
    let weight = weight_scale * spec.atom_count / samples as f64;
    let v_rms = spec.thermal_rms();
    let amps = spec.initial_amps();
    let atoms: Vec<AtomRecord> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, purpose, rep as u64, i as u64);
            let mut normal = || -> f64 { rng.sample(StandardNormal) };
            let r0 = [
                spec.sigma_pos * normal(),
                spec.sigma_pos * normal(),
                spec.sigma_pos * normal(),
            ];
            let dv = [v_rms * normal(), v_rms * normal(), v_rms * normal()];
            AtomRecord {
                position: [
                    r0[0] + dv[0] * travel_time,
                    r0[1] + dv[1] * travel_time,
                    r0[2] + dv[2] * travel_time,
                ],
                velocity: [dv[0], dv[1], center_vz + dv[2]],
                weight,
                scattered: false,
                scatter_theta: 0.0,
                scatter_phi: 0.0,
                epoch: 0.0,
                visibility: 1.0,
                amps,
            }
        })
        .collect();
    Ensemble { atoms, total_weight: weight * samples as f64 }
}

/// Center-of-mass-frame center velocity of a cloud, by slot.
pub(crate) fn center_velocity(setup: &ColliderSetup, slot: LaunchSlot) -> [f64; 3] {
    match slot {
        LaunchSlot::Cloud1 => [0.0, 0.0, setup.geometry.v_z1],
        LaunchSlot::Cloud2 => [0.0, 0.0, setup.geometry.v_z2],
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::{setup_with, swave_tables};
    use super::super::CloudState;
    use super::*;

    #[test]
    fn thermal_rms_matches_the_temperature() {
        let (t3, t4) = swave_tables();
        let setup = setup_with(&t3, &t4, 30_000);
        let (_, ens2) = sample_clouds(&setup, 0).unwrap();
        let n = ens2.atoms.len() as f64;
        let expect = 3.9547197567e-3;
        for axis in 0..3 {
            let center = if axis == 2 { setup.geometry.v_z2 } else { 0.0 };
            let ms: f64 = ens2
                .atoms
                .iter()
                .map(|a| (a.velocity[axis] - center).powi(2))
                .sum::<f64>()
                / n;
            let rms = ms.sqrt();
            // sd of an rms estimate from n Gaussian draws is rms/sqrt(2n)
            let tol = 3.0 * expect / (2.0 * n).sqrt();
            assert!((rms - expect).abs() < tol, "axis {axis}: rms = {rms:.6e}");
        }
    }

    #[test]
    fn zero_temperature_freezes_the_velocities() {
        let (t3, t4) = swave_tables();
        let mut setup = setup_with(&t3, &t4, 500);
        setup.cloud2.temperature = 0.0;
        let (_, ens2) = sample_clouds(&setup, 0).unwrap();
        for a in &ens2.atoms {
            assert_eq!(a.velocity, [0.0, 0.0, setup.geometry.v_z2]);
        }
    }

    #[test]
    fn expansion_correlates_position_with_velocity() {
        let (t3, t4) = swave_tables();
        let setup = setup_with(&t3, &t4, 40_000);
        let (ens1, _) = sample_clouds(&setup, 0).unwrap();
        let t = setup.geometry.t_collide;
        let spec = setup.cloud1;
        let n = ens1.atoms.len() as f64;
        let cov: f64 = ens1
            .atoms
            .iter()
            .map(|a| a.position[0] * (a.velocity[0] - 0.0))
            .sum::<f64>()
            / n;
        let var: f64 = ens1.atoms.iter().map(|a| a.position[0].powi(2)).sum::<f64>() / n;
        let v2 = spec.thermal_rms().powi(2);
        assert!((cov - v2 * t).abs() < 5.0 * v2 * t / (n / 4.0).sqrt(), "cov = {cov:.3e}");
        let expect_var = spec.sigma_at(t).powi(2);
        assert!((var / expect_var - 1.0).abs() < 0.05, "var ratio {}", var / expect_var);
    }

    #[test]
    fn weights_carry_the_physical_atom_number() {
        let (t3, t4) = swave_tables();
        let setup = setup_with(&t3, &t4, 1234);
        let (ens1, ens2) = sample_clouds(&setup, 0).unwrap();
        assert!((ens1.total_weight / setup.cloud1.atom_count - 1.0).abs() < 1e-12);
        assert!((ens2.total_weight / setup.cloud2.atom_count - 1.0).abs() < 1e-12);
        let summed: f64 = ens2.atoms.iter().map(|a| a.weight).sum();
        assert!((summed / ens2.total_weight - 1.0).abs() < 1e-9);
    }

    #[test]
    fn same_seed_is_bit_identical_across_thread_counts() {
        let (t3, t4) = swave_tables();
        let setup = setup_with(&t3, &t4, 5000);
        let pool1 = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let pool4 = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = pool1.install(|| sample_clouds(&setup, 0).unwrap());
        let b = pool4.install(|| sample_clouds(&setup, 0).unwrap());
        assert_eq!(a.1.atoms.len(), b.1.atoms.len());
        for (x, y) in a.1.atoms.iter().zip(b.1.atoms.iter()) {
            assert_eq!(x.position, y.position);
            assert_eq!(x.velocity, y.velocity);
        }
        // and different reps give genuinely different draws
        let c = sample_clouds(&setup, 1).unwrap();
        assert_ne!(a.1.atoms[0].position, c.1.atoms[0].position);
    }

    #[test]
    fn sample_budget_overflow_is_a_config_error() {
        let (t3, t4) = swave_tables();
        let mut setup = setup_with(&t3, &t4, 100);
        setup.max_samples = 99;
        let err = sample_clouds(&setup, 0).unwrap_err();
        assert_eq!(err.exit_code(), 2, "budget overflow must be a configuration error");
    }

    #[test]
    fn cloud1_atoms_are_not_probe_addressable() {
        let (t3, t4) = swave_tables();
        let setup = setup_with(&t3, &t4, 64);
        let (ens1, ens2) = sample_clouds(&setup, 0).unwrap();
        for a in &ens1.atoms {
            assert_eq!(a.amps.p3(), 0.0);
        }
        for a in &ens2.atoms {
            assert!((a.amps.p3() - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn remnant_is_cloud1_shaped_and_impurity_weighted() {
        let (t3, t4) = swave_tables();
        let setup = setup_with(&t3, &t4, 2000);
        let rem = remnant_cloud(&setup, 0);
        assert!(
            (rem.total_weight / (setup.impurity_fraction * setup.cloud1.atom_count) - 1.0).abs()
                < 1e-12
        );
        // F = 3, so the probe sees them
        for a in rem.atoms.iter().take(10) {
            assert_eq!(a.amps.p3(), 1.0);
        }
        let mean_vz: f64 =
            rem.atoms.iter().map(|a| a.velocity[2]).sum::<f64>() / rem.atoms.len() as f64;
        assert!((mean_vz - setup.geometry.v_z1).abs() < 5e-4, "mean vz = {mean_vz}");
        // draws are independent of the bulk cloud's stream
        let (ens1, _) = sample_clouds(&setup, 0).unwrap();
        assert_ne!(ens1.atoms[0].position, rem.atoms[0].position);
        let mut c = setup.cloud1;
        c.state = CloudState::Pure { f: 3, m: 2 };
        assert_eq!(rem.atoms[0].amps.p3(), c.initial_amps().p3());
    }
}

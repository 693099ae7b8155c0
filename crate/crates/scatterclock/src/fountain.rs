//! Juggling-fountain ballistics.
//!
//! Two cesium clouds are launched up the same vertical axis a few
//! milliseconds apart. Cloud 1 goes first and slightly faster, so both
//! clouds are past apogee when Cloud 1 falls back onto Cloud 2, and the
//! collision happens while the clock coherence is evolving between the
//! two Ramsey pulses. Under uniform gravity the relative velocity of
//! the cloud centers is constant, which makes the whole geometry closed
//! form: for equal launch speeds it is exactly g times the launch
//! separation.
//!
//! All times are measured from the launch of Cloud 1. The Ramsey
//! interval T is the time Cloud 2 spends above the clock cavity, with
//! the pulses centered on the two cavity crossings.

use crate::constants::{collision_energy, cs_pair_reduced_mass, HBAR, K_B};
use crate::error::{Error, Result};

/// Launch parameters for one fountain cycle.
///
/// `z_detect` is the height of the detection zone above the launch
/// point. The published description of the apparatus does not state the
/// cavity or detection heights; the defaults here put the Ramsey time
/// and the scattered-shell spread in the published ranges and are
/// flagged as assumptions in the configuration docs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaunchPlan {
    /// Launch speed of Cloud 1, m/s upward.
    pub v_launch1: f64,
    /// Launch speed of Cloud 2, m/s upward.
    pub v_launch2: f64,
    /// Cloud 2 leaves this long after Cloud 1, s.
    pub dt_launch: f64,
    /// Clock cavity height above the launch point, m.
    pub z_cavity: f64,
    /// Detection zone height above the launch point, m.
    pub z_detect: f64,
    /// Local gravitational acceleration, m/s^2.
    pub g: f64,
    /// Ramsey pulse duration, s. Pulses are centered on the cavity
    /// crossings, so this does not move T; it is carried for the finite
    /// pulse model.
    pub pulse_duration: f64,
    /// Plausible launch-speed range for this apparatus, m/s. Launches
    /// outside it are rejected as configuration mistakes.
    pub v_sanity_band: (f64, f64),
}

pub const DEFAULT_Z_CAVITY: f64 = 0.30;
pub const DEFAULT_Z_DETECT: f64 = 0.225;
pub const DEFAULT_PULSE_DURATION: f64 = 5e-3;
pub const DEFAULT_V_SANITY_BAND: (f64, f64) = (2.0, 4.0);

impl LaunchPlan {
    /// Both clouds launched at the same speed. The relative speed is
    /// then exactly `g * dt_launch` and the collision falls midway
    /// between the two apogees.
    pub fn equal_launches(v_launch: f64, dt_launch: f64, g: f64) -> LaunchPlan {
        LaunchPlan {
            v_launch1: v_launch,
            v_launch2: v_launch,
            dt_launch,
            z_cavity: DEFAULT_Z_CAVITY,
            z_detect: DEFAULT_Z_DETECT,
            g,
            pulse_duration: DEFAULT_PULSE_DURATION,
            v_sanity_band: DEFAULT_V_SANITY_BAND,
        }
    }

    /// Solve for the launch separation and Cloud 1 speed that make the
    /// clouds collide at relative speed `v_r`, a fraction
    /// `collide_fraction` of the way through Cloud 2's flight above the
    /// cavity. A fraction of 0.5 centers the collision in the Ramsey
    /// window, which keeps the whole cloud-overlap interval (tens of
    /// milliseconds at millimetre cloud sizes) between the two pulses.
    ///
    /// The collision time is t_c = dt + A with A fixed by the fraction,
    /// and the constant relative speed obeys v_r t_c = v2 dt + g dt^2/2,
    /// which is a quadratic in dt.
    pub fn for_collision_speed(
        v_launch2: f64,
        z_cavity: f64,
        g: f64,
        v_r: f64,
        collide_fraction: f64,
    ) -> Result<LaunchPlan> {
        if !(v_r > 0.0) || !(g > 0.0) || !(z_cavity > 0.0) {
            return Err(Error::parameter(
                "for_collision_speed needs v_r, g, z_cavity all > 0",
            ));
        }
        if !(0.0 < collide_fraction && collide_fraction <= 1.0) {
            return Err(Error::parameter(format!(
                "collide_fraction must be in (0, 1], got {collide_fraction}"
            )));
        }
        let disc = v_launch2 * v_launch2 - 2.0 * g * z_cavity;
        if disc <= 0.0 {
            return Err(Error::geometry(format!(
                "launch at {v_launch2} m/s does not clear the cavity at {z_cavity} m"
            )));
        }
        let s = disc.sqrt();
        // Cloud 2's upward cavity crossing (relative to its own launch)
        // plus the requested fraction of its time above the cavity.
        let a = (v_launch2 - s) / g + collide_fraction * 2.0 * s / g;
        let b = v_launch2 - v_r;
        let dt = (-b + (b * b + 2.0 * g * v_r * a).sqrt()) / g;
        let v_launch1 = v_launch2 + g * dt - v_r;
        Ok(LaunchPlan {
            v_launch1,
            v_launch2,
            dt_launch: dt,
            z_cavity,
            z_detect: DEFAULT_Z_DETECT,
            g,
            pulse_duration: DEFAULT_PULSE_DURATION,
            v_sanity_band: DEFAULT_V_SANITY_BAND,
        })
    }

    /// Solve for the Cloud 2 launch speed that gives the requested time
    /// above the cavity (the Ramsey interval), then plan the collision
    /// as in [`LaunchPlan::for_collision_speed`]. Inverts
    /// T = 2 sqrt(v^2 - 2 g z_cavity) / g.
    pub fn for_interrogation_time(
        t_ramsey: f64,
        z_cavity: f64,
        g: f64,
        v_r: f64,
        collide_fraction: f64,
    ) -> Result<LaunchPlan> {
        if !(t_ramsey > 0.0) || !t_ramsey.is_finite() {
            return Err(Error::parameter(format!(
                "interrogation time must be positive and finite, got {t_ramsey} s"
            )));
        }
        if !(g > 0.0) || !(z_cavity > 0.0) {
            return Err(Error::parameter("for_interrogation_time needs g, z_cavity > 0"));
        }
        let v_launch2 = (0.5 * g * t_ramsey).hypot((2.0 * g * z_cavity).sqrt());
        LaunchPlan::for_collision_speed(v_launch2, z_cavity, g, v_r, collide_fraction)
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.v_sanity_band;
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::parameter(format!(
                "launch sanity band ({lo}, {hi}) is not an ordered positive range"
            )));
        }
        for (name, v) in [("v_launch1", self.v_launch1), ("v_launch2", self.v_launch2)] {
            if !v.is_finite() || v < lo || v > hi {
                return Err(Error::parameter(format!(
                    "{name} = {v} m/s outside the sanity band [{lo}, {hi}] m/s"
                )));
            }
        }
        if !(self.dt_launch > 0.0) {
            return Err(Error::parameter("dt_launch must be > 0"));
        }
        if !(self.z_cavity > 0.0) {
            return Err(Error::parameter("z_cavity must be > 0"));
        }
        if !(self.z_detect >= 0.0 && self.z_detect < self.z_cavity) {
            return Err(Error::parameter(
                "z_detect must lie in [0, z_cavity): detection happens below the cavity",
            ));
        }
        if !(self.g > 0.0) {
            return Err(Error::parameter("g must be > 0"));
        }
        if !(self.pulse_duration >= 0.0) {
            return Err(Error::parameter("pulse_duration must be >= 0"));
        }
        Ok(())
    }

    /// Height of Cloud 1's center at time t (from Cloud 1 launch).
    pub fn z1(&self, t: f64) -> f64 {
        self.v_launch1 * t - 0.5 * self.g * t * t
    }

    /// Height of Cloud 2's center at time t (from Cloud 1 launch).
    pub fn z2(&self, t: f64) -> f64 {
        let tau = t - self.dt_launch;
        self.v_launch2 * tau - 0.5 * self.g * tau * tau
    }
}

/// Everything the rest of the pipeline needs to know about one
/// collision: kinematics, Ramsey timing, and detection timing. Times
/// are measured from the launch of Cloud 1.
#[derive(Debug, Clone, Copy)]
pub struct CollisionGeometry {
    pub plan: LaunchPlan,
    /// Relative speed of the cloud centers, m/s. Constant in flight.
    pub v_r: f64,
    /// Collision energy E = m v_r^2 / 4, J.
    pub energy: f64,
    /// The same energy as a temperature, K.
    pub energy_over_kb: f64,
    /// Vertical velocity of Cloud 1 in the center-of-mass frame, m/s.
    /// Cloud 1 falls onto Cloud 2, so this is -v_r/2.
    pub v_z1: f64,
    /// Vertical velocity of Cloud 2 in the center-of-mass frame, m/s.
    pub v_z2: f64,
    /// Time of peak overlap, s.
    pub t_collide: f64,
    /// Height of the collision, m.
    pub z_collide: f64,
    /// Ramsey free-precession time: Cloud 2's flight time above the
    /// cavity, pulses centered on the crossings, s.
    pub t_ramsey: f64,
    /// Time of Cloud 2's upward cavity crossing (first Ramsey pulse), s.
    pub t_pulse1: f64,
    /// Time from peak overlap until the collision products, following
    /// the pair's center of mass, fall to the detection zone, s.
    pub t_detect_delay: f64,
    /// Diameter of the scattered shell at detection: atoms leave the
    /// collision at v_r/2 in the center-of-mass frame, m.
    pub spread_diameter: f64,
    /// Set when the clouds meet before one of them has reached apogee.
    /// The juggling sequence wants the collision after both apogees.
    pub before_apogee: bool,
}

impl CollisionGeometry {
    /// Relative wavenumber k = mu v_r / hbar of the colliding pair, 1/m.
    pub fn relative_wavenumber(&self) -> f64 {
        cs_pair_reduced_mass() * self.v_r / HBAR
    }
}

/// Work out when and where the two clouds meet, and the Ramsey and
/// detection timing that follow from the plan.
pub fn collision_geometry(plan: &LaunchPlan) -> Result<CollisionGeometry> {
    plan.validate()?;
    let g = plan.g;
    let dt = plan.dt_launch;

    // z1 - z2 is linear in t: the relative acceleration vanishes, so
    // the approach speed v_r = v2 + g dt - v1 is a constant of flight.
    let v_r = plan.v_launch2 + g * dt - plan.v_launch1;
    if v_r <= 0.0 {
        return Err(Error::geometry(format!(
            "cloud 1 launched too fast to be caught: v1 = {} m/s >= v2 + g dt = {} m/s",
            plan.v_launch1,
            plan.v_launch2 + g * dt
        )));
    }
    let t_collide = (plan.v_launch2 * dt + 0.5 * g * dt * dt) / v_r;
    let z_collide = plan.z1(t_collide);
    if z_collide < plan.z_cavity {
        return Err(Error::geometry(format!(
            "clouds meet at z = {z_collide:.4} m, below the cavity at {:.4} m; \
             the collision must happen between the Ramsey pulses",
            plan.z_cavity
        )));
    }

    let disc = plan.v_launch2 * plan.v_launch2 - 2.0 * g * plan.z_cavity;
    if disc < 0.0 {
        return Err(Error::geometry(format!(
            "cloud 2 at {} m/s does not reach the cavity at {} m",
            plan.v_launch2, plan.z_cavity
        )));
    }
    let s = disc.sqrt();
    let t_ramsey = 2.0 * s / g;
    let t_pulse1 = dt + (plan.v_launch2 - s) / g;

    let apogee1 = plan.v_launch1 / g;
    let apogee2 = dt + plan.v_launch2 / g;
    let before_apogee = t_collide < apogee1 || t_collide < apogee2;

    // The scattered shell is centered on the pair's center of mass,
    // which keeps falling ballistically after the collision. Follow it
    // down to the detection zone.
    let v_com = 0.5 * (plan.v_launch1 + plan.v_launch2 + g * dt) - g * t_collide;
    let drop = z_collide - plan.z_detect;
    // z_detect < z_cavity <= z_collide, so the downward crossing exists.
    let tau_detect = (v_com + (v_com * v_com + 2.0 * g * drop).sqrt()) / g;
    let t_detect_delay = tau_detect;
    let spread_diameter = v_r * t_detect_delay;

    let energy = collision_energy(v_r);
    Ok(CollisionGeometry {
        plan: *plan,
        v_r,
        energy,
        energy_over_kb: energy / K_B,
        v_z1: -0.5 * v_r,
        v_z2: 0.5 * v_r,
        t_collide,
        z_collide,
        t_ramsey,
        t_pulse1,
        t_detect_delay,
        spread_diameter,
        before_apogee,
    })
}

/// Flight time above the cavity for a single launch: T = 2 sqrt(v^2 -
/// 2 g z) / g. Zero when the apogee just grazes the cavity.
pub fn interrogation_time_for_launch(v_launch: f64, z_cavity: f64, g: f64) -> Result<f64> {
    if !(v_launch > 0.0) || !(z_cavity > 0.0) || !(g > 0.0) {
        return Err(Error::parameter(
            "interrogation time needs v_launch, z_cavity, g all > 0",
        ));
    }
    let disc = v_launch * v_launch - 2.0 * g * z_cavity;
    if disc < 0.0 {
        return Err(Error::geometry(format!(
            "launch at {v_launch} m/s never reaches the cavity at {z_cavity} m"
        )));
    }
    Ok(2.0 * disc.sqrt() / g)
}

/// Launch speed that produces Ramsey time `t_ramsey` over a cavity at
/// `z_cavity`: the inverse of `interrogation_time_for_launch`.
pub fn launch_velocity_for_interrogation(t_ramsey: f64, z_cavity: f64, g: f64) -> Result<f64> {
    if !(t_ramsey >= 0.0) || !(z_cavity > 0.0) || !(g > 0.0) {
        return Err(Error::parameter(
            "launch velocity needs t_ramsey >= 0 and z_cavity, g > 0",
        ));
    }
    let half_gt = 0.5 * g * t_ramsey;
    Ok((half_gt * half_gt + 2.0 * g * z_cavity).sqrt())
}

/// A constant Ramsey phase Phi reads out as a frequency offset
/// Phi / (2 pi T) on the fringe pattern.
pub fn equivalent_frequency_shift(phi: f64, t_ramsey: f64) -> Result<f64> {
    if !(t_ramsey > 0.0) {
        return Err(Error::parameter(format!(
            "frequency equivalent needs T > 0, got {t_ramsey}"
        )));
    }
    Ok(phi / (2.0 * std::f64::consts::PI * t_ramsey))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{k_from_energy, k_from_relative_speed, G_DEFAULT};

    #[test]
    fn equal_launches_give_v_r_equal_g_dt() {
        for &z_cavity in &[0.15, 0.30, 0.40] {
            let mut plan = LaunchPlan::equal_launches(3.0, 0.010, 9.80);
            plan.z_cavity = z_cavity;
            plan.z_detect = 0.5 * z_cavity;
            let geo = collision_geometry(&plan).unwrap();
            assert!((geo.v_r - 0.0980).abs() < 1e-15, "v_r = {}", geo.v_r);
            // equal launches collide midway between the apogees
            assert!((geo.t_collide - (3.0 / 9.80 + 0.005)).abs() < 1e-12);
            assert!(geo.before_apogee, "midway collision precedes cloud 2's apogee");
        }
    }

    #[test]
    fn ten_cm_per_s_collision_is_forty_microkelvin() {
        let plan = LaunchPlan::for_collision_speed(2.4895, 0.30, G_DEFAULT, 0.100, 0.95).unwrap();
        let geo = collision_geometry(&plan).unwrap();
        assert!((geo.v_r - 0.100).abs() < 1e-12);
        let micro_k = geo.energy_over_kb * 1e6;
        assert!((micro_k - 39.96).abs() < 0.05, "E/k_B = {micro_k:.3} uK");
    }

    #[test]
    fn com_frame_components_split_the_relative_speed() {
        let plan = LaunchPlan::for_collision_speed(2.4895, 0.30, G_DEFAULT, 0.0992, 0.95).unwrap();
        let geo = collision_geometry(&plan).unwrap();
        assert!((geo.v_z1 - (-0.0496)).abs() < 1e-12);
        assert!((geo.v_z2 - 0.0496).abs() < 1e-12);
        assert_eq!(geo.v_z1, -geo.v_z2);
    }

    #[test]
    fn juggling_plan_collides_after_both_apogees_just_above_cavity() {
        let plan = LaunchPlan::for_collision_speed(2.4895, 0.30, G_DEFAULT, 0.0992, 0.95).unwrap();
        assert!(
            plan.v_launch1 > plan.v_launch2,
            "cloud 1 must be launched slightly faster"
        );
        assert!(plan.dt_launch > 0.005 && plan.dt_launch < 0.020, "dt = {}", plan.dt_launch);
        let geo = collision_geometry(&plan).unwrap();
        assert!(!geo.before_apogee);
        assert!(geo.z_collide >= plan.z_cavity);
        // requested fraction of the way through the Ramsey window
        let frac = (geo.t_collide - geo.t_pulse1) / geo.t_ramsey;
        assert!((frac - 0.95).abs() < 1e-9, "collision at fraction {frac}");
    }

    #[test]
    fn centered_collision_keeps_launch_separation_near_ten_ms() {
        let plan = LaunchPlan::for_collision_speed(2.4895, 0.30, G_DEFAULT, 0.0992, 0.5).unwrap();
        assert!(
            plan.dt_launch > 0.008 && plan.dt_launch < 0.013,
            "dt = {}",
            plan.dt_launch
        );
        let geo = collision_geometry(&plan).unwrap();
        assert!(geo.z_collide > plan.z_cavity);
        let frac = (geo.t_collide - geo.t_pulse1) / geo.t_ramsey;
        assert!((frac - 0.5).abs() < 1e-9, "collision at fraction {frac}");
        // with the collision centered, a cloud-overlap window of +-45 ms
        // still fits between the two Ramsey pulses
        assert!(geo.t_collide - geo.t_pulse1 > 0.045);
        assert!(geo.t_pulse1 + geo.t_ramsey - geo.t_collide > 0.045);
    }

    #[test]
    fn scattered_shell_spreads_to_published_size() {
        // direct form of the spread rule
        assert!((0.100 * 0.13 - 0.013f64).abs() < 1e-15);
        // and through the full geometry with default heights
        let plan = LaunchPlan::for_collision_speed(2.4895, 0.30, G_DEFAULT, 0.0992, 0.5).unwrap();
        let geo = collision_geometry(&plan).unwrap();
        assert!(
            geo.spread_diameter > 0.012 && geo.spread_diameter < 0.014,
            "spread = {:.4} m",
            geo.spread_diameter
        );
        assert_eq!(geo.spread_diameter, 2.0 * (geo.v_r / 2.0) * geo.t_detect_delay);
    }

    #[test]
    fn collision_energy_recovers_scattering_wavenumber() {
        let plan = LaunchPlan::for_collision_speed(2.4895, 0.30, G_DEFAULT, 0.0992, 0.95).unwrap();
        let geo = collision_geometry(&plan).unwrap();
        let k_direct = k_from_relative_speed(geo.v_r);
        let k_from_e = k_from_energy(geo.energy, cs_pair_reduced_mass());
        assert!((k_from_e - k_direct).abs() / k_direct < 1e-12);
        assert!((geo.relative_wavenumber() - k_direct).abs() / k_direct < 1e-12);
    }

    #[test]
    fn interrogation_time_matches_hand_values() {
        // apogee exactly at the cavity: 3^2 = 2 * 9 * 0.5 holds exactly
        // in floating point too
        assert_eq!(interrogation_time_for_launch(3.0, 0.5, 9.0).unwrap(), 0.0);
        assert!(interrogation_time_for_launch(2.999, 0.5, 9.0).is_err());
        // hand-evaluated ballistic time, inside the published 0.115-0.450 s range
        let t = interrogation_time_for_launch(3.4, 0.5, 9.80).unwrap();
        assert!((t - 0.2707).abs() < 5e-4, "T = {t:.4}");
        assert!(t > 0.115 && t < 0.450);
    }

    #[test]
    fn interrogation_time_is_linear_in_excess_speed() {
        let (z, g) = (0.30, 9.80);
        let t1 = interrogation_time_for_launch(2.6, z, g).unwrap();
        // pick the launch whose speed excess above the cavity doubles
        let s1 = (2.6f64 * 2.6 - 2.0 * g * z).sqrt();
        let v2 = ((2.0 * s1) * (2.0 * s1) + 2.0 * g * z).sqrt();
        let t2 = interrogation_time_for_launch(v2, z, g).unwrap();
        assert!((t2 - 2.0 * t1).abs() < 1e-12);
    }

    #[test]
    fn launch_plan_for_interrogation_time_round_trips() {
        for &t_target in &[0.115, 0.233, 0.450] {
            let plan =
                LaunchPlan::for_interrogation_time(t_target, 0.30, G_DEFAULT, 0.0992, 0.5).unwrap();
            let t_back =
                interrogation_time_for_launch(plan.v_launch2, plan.z_cavity, plan.g).unwrap();
            assert!((t_back - t_target).abs() < 1e-12, "T = {t_back}");
            let geo = collision_geometry(&plan).unwrap();
            assert!((geo.t_ramsey - t_target).abs() < 1e-12);
            let frac = (geo.t_collide - geo.t_pulse1) / geo.t_ramsey;
            assert!((frac - 0.5).abs() < 1e-9);
        }
        // the shortest published interval lands on the usual launch speed
        let plan =
            LaunchPlan::for_interrogation_time(0.115, 0.30, G_DEFAULT, 0.0992, 0.5).unwrap();
        assert!((plan.v_launch2 - 2.4895).abs() < 1e-4, "v2 = {:.5}", plan.v_launch2);
        assert!(LaunchPlan::for_interrogation_time(-0.1, 0.30, G_DEFAULT, 0.0992, 0.5).is_err());
    }

    #[test]
    fn interrogation_time_increases_with_launch_speed() {
        let (z, g) = (0.30, 9.80);
        let mut prev = 0.0;
        for i in 0..200 {
            let v = 2.45 + 1.5 * i as f64 / 200.0;
            let t = interrogation_time_for_launch(v, z, g).unwrap();
            assert!(t > prev, "T not increasing at v = {v}");
            prev = t;
        }
    }

    #[test]
    fn launch_velocity_inverts_interrogation_time() {
        for &t in &[0.115, 0.2, 0.45] {
            let v = launch_velocity_for_interrogation(t, 0.30, 9.80).unwrap();
            let t_back = interrogation_time_for_launch(v, 0.30, 9.80).unwrap();
            assert!((t_back - t).abs() < 1e-12);
        }
    }

    #[test]
    fn phase_reads_as_minus_two_hundred_millihertz() {
        let f = equivalent_frequency_shift(-0.141, 0.115).unwrap();
        assert!((f - (-0.1951)).abs() < 5e-4, "shift = {f:.4} Hz");
        assert_eq!(equivalent_frequency_shift(0.0, 0.115).unwrap(), 0.0);
        let f_long = equivalent_frequency_shift(-0.141, 0.450).unwrap();
        assert!((f_long - (-0.0499)).abs() < 5e-4, "shift = {f_long:.4} Hz");
        assert!(equivalent_frequency_shift(-0.141, 0.0).is_err());
    }

    #[test]
    fn runaway_cloud_one_never_collides() {
        let mut plan = LaunchPlan::equal_launches(3.0, 0.010, 9.80);
        plan.v_launch1 = 3.2; // exceeds v2 + g dt = 3.098
        let err = collision_geometry(&plan).unwrap_err();
        assert!(matches!(err, Error::Geometry(_)), "{err}");
    }

    #[test]
    fn collision_below_cavity_is_rejected() {
        // huge separation: cloud 1 is nearly back down when cloud 2 leaves
        let mut plan = LaunchPlan::equal_launches(2.5, 0.010, 9.80);
        plan.dt_launch = 0.45;
        let err = collision_geometry(&plan).unwrap_err();
        assert!(matches!(err, Error::Geometry(_)), "{err}");
    }

    #[test]
    fn sanity_band_rejects_wild_launches() {
        let plan = LaunchPlan::equal_launches(5.0, 0.010, 9.80);
        assert!(matches!(collision_geometry(&plan), Err(Error::Parameter(_))));
        let mut plan = LaunchPlan::equal_launches(3.0, 0.010, 9.80);
        plan.v_sanity_band = (2.0, 6.0);
        plan.v_launch1 = 5.0;
        // wider band admits it, geometry then decides
        assert!(matches!(collision_geometry(&plan), Err(Error::Geometry(_))));
    }
}

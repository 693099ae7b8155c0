//! Physical constants used throughout the crate.
//!
//! Everything is SI. The cesium mass and the CODATA constants are fixed
//! here so every module agrees on them; local gravity varies between
//! laboratories and is therefore a configuration default, not a constant.

/// Mass of a cesium-133 atom, kg.
pub const M_CS: f64 = 2.2069468e-25;

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054571817e-34;

/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380649e-23;

/// Cesium clock transition frequency, Hz. Used only for reporting
/// fractional frequency shifts; the dynamics are computed in the
/// rotating frame and never evaluate the carrier.
pub const NU_CS: f64 = 9.192631770e9;

/// Default local gravitational acceleration, m/s^2. Overridable in
/// configuration.
pub const G_DEFAULT: f64 = 9.80;

/// Reduced mass of a colliding Cs-Cs pair, kg.
pub fn cs_pair_reduced_mass() -> f64 {
    M_CS / 2.0
}

/// Relative wavenumber of a Cs-Cs pair at relative speed `v_r` (m/s),
/// in 1/m: k = mu v_r / hbar.
pub fn k_from_relative_speed(v_r: f64) -> f64 {
    cs_pair_reduced_mass() * v_r / HBAR
}

/// Collision energy of an equal-mass pair at relative speed `v_r`,
/// in joules: E = m v_r^2 / 4 (equivalently hbar^2 k^2 / 2 mu).
pub fn collision_energy(v_r: f64) -> f64 {
    M_CS * v_r * v_r / 4.0
}

/// Invert E = hbar^2 k^2 / (2 mu) for k, 1/m.
pub fn k_from_energy(energy: f64, reduced_mass: f64) -> f64 {
    (2.0 * reduced_mass * energy).sqrt() / HBAR
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collision_energy_at_ten_cm_per_s_is_forty_microkelvin() {
        let e = collision_energy(0.10);
        let t = e / K_B;
        // 3 significant figures
        assert!((t - 40.0e-6).abs() < 0.05e-6, "E/k_B = {:.4} uK", t * 1e6);
    }

    #[test]
    fn energy_wavenumber_round_trip() {
        let mu = cs_pair_reduced_mass();
        for &v in &[0.05, 0.0992, 0.2, 1.0] {
            let k = k_from_relative_speed(v);
            let e = collision_energy(v);
            let k_back = k_from_energy(e, mu);
            assert!((k_back - k).abs() / k < 1e-12);
        }
    }
}

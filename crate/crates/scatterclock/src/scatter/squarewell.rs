//! Closed-form references for the attractive square well.
//!
//! These are the textbook results obtained by matching sin(Kr) inside the
//! well to sin(kr + delta) outside. They are independent of the numerical
//! radial integrator and serve as its oracle in tests; the scattering
//! length formula is also handy for designing model potentials with a
//! prescribed a.

use crate::constants::HBAR;
use crate::error::{Error, Result};
use crate::scatter::potential::{Potential, PotentialKind};

fn square_well_params(p: &Potential) -> Result<(f64, f64, f64)> {
    match p.kind {
        PotentialKind::SquareWell { depth, radius } => Ok((depth, radius, p.reduced_mass)),
        _ => Err(Error::parameter("analytic square-well result requested for a non-square-well potential")),
    }
}

/// Interior wavenumber at zero collision energy, K0 = sqrt(2 mu V0) / hbar.
pub fn zero_energy_interior_wavenumber(p: &Potential) -> Result<f64> {
    let (depth, _, mu) = square_well_params(p)?;
    Ok((2.0 * mu * depth).sqrt() / HBAR)
}

/// s-wave phase shift, principal branch:
/// delta0 = -kR + atan( (k/K) tan(KR) ),  K = sqrt(k^2 + 2 mu V0 / hbar^2).
///
/// The principal arctangent leaves delta0 determined only modulo pi (the
/// scattering amplitude is invariant under that shift); comparisons against
/// the numerical solver must be made on the mod-pi circle.
pub fn s_wave_phase(p: &Potential, k: f64) -> Result<f64> {
    let (depth, radius, mu) = square_well_params(p)?;
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::parameter(format!("k must be > 0 and finite, got {k:e}")));
    }
    let kk = (k * k + 2.0 * mu * depth / (HBAR * HBAR)).sqrt();
    Ok(-k * radius + (k / kk * (kk * radius).tan()).atan())
}

/// Scattering length a = R (1 - tan(K0 R) / (K0 R)).
///
/// Diverges when K0 R is an odd multiple of pi/2 (a zero-energy bound
/// state); near those points the well is resonant and `a` loses meaning
/// as a perturbative parameter, but the formula itself is still returned.
pub fn scattering_length(p: &Potential) -> Result<f64> {
    let (depth, radius, _) = square_well_params(p)?;
    if depth == 0.0 {
        return Ok(0.0);
    }
    let k0 = zero_energy_interior_wavenumber(p)?;
    let x = k0 * radius;
    Ok(radius * (1.0 - x.tan() / x))
}

/// Well depth giving a prescribed K0 R, useful for constructing test
/// potentials: V0 = (hbar * x / R)^2 / (2 mu).
pub fn depth_for_interior_phase(x: f64, radius: f64, reduced_mass: f64) -> f64 {
    let k0 = x / radius;
    (HBAR * k0).powi(2) / (2.0 * reduced_mass)
}

/// Signed distance from `a` to `b` on the circle of circumference pi,
/// in (-pi/2, pi/2]. Phase shifts are physically defined modulo pi, so
/// this is the right metric for solver-versus-analytic comparisons.
pub fn mod_pi_distance(a: f64, b: f64) -> f64 {
    let mut d = (a - b) % std::f64::consts::PI;
    if d > std::f64::consts::FRAC_PI_2 {
        d -= std::f64::consts::PI;
    } else if d <= -std::f64::consts::FRAC_PI_2 {
        d += std::f64::consts::PI;
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::cs_pair_reduced_mass;
    use std::f64::consts::{FRAC_PI_4, PI};

    #[test]
    fn quarter_pi_well_scattering_length() {
        // K0 R = pi/4 gives a = R (1 - tan(pi/4)/(pi/4)) = R (1 - 4/pi)
        let mu = cs_pair_reduced_mass();
        let r = 5.0e-9;
        let v0 = depth_for_interior_phase(FRAC_PI_4, r, mu);
        let p = Potential::square_well(v0, r, mu).unwrap();
        let a = scattering_length(&p).unwrap();
        let expect = r * (1.0 - 4.0 / PI);
        assert!((a - expect).abs() < 1e-12 * r.abs());
        assert!(a < 0.0);

        // and the low-k phase follows delta0 = -k a
        let k = 1e-4 / r;
        let d0 = s_wave_phase(&p, k).unwrap();
        assert!((d0 - (-k * a)).abs() < (k * a).abs() * 1e-6);
    }

    #[test]
    fn zero_depth_gives_zero_phase() {
        let mu = cs_pair_reduced_mass();
        let p = Potential::square_well(0.0, 3e-9, mu).unwrap();
        assert_eq!(scattering_length(&p).unwrap(), 0.0);
        let d = s_wave_phase(&p, 1e8).unwrap();
        assert!(d.abs() < 1e-14);
    }

    #[test]
    fn mod_pi_metric() {
        assert!(mod_pi_distance(0.3, 0.3 + PI).abs() < 1e-15);
        assert!(mod_pi_distance(0.3, 0.3 - 3.0 * PI).abs() < 1e-12);
        assert!((mod_pi_distance(0.4, 0.1) - 0.3).abs() < 1e-15);
    }
}

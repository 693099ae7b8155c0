//! Zero-energy scattering length by Richardson extrapolation.
//!
//! The s-wave phase shift of a short-range potential obeys
//! delta_0(k) = -a k + O(k^3), so -delta_0(k)/k extrapolated in k^2 gives
//! the scattering length together with a defensible uncertainty from the
//! last tableau correction. Near a zero-energy resonance delta_0 tends to
//! a nonzero constant instead, -delta_0/k doubles with every halving of
//! k, and the extrapolation is aborted.

use crate::error::{Error, Result};
use crate::scatter::numerov::{solve_phase_shift_with, SolverSettings};
use crate::scatter::potential::Potential;
use std::f64::consts::FRAC_PI_2;

#[derive(Debug, Clone, Copy)]
pub struct ScatteringLength {
    /// Extrapolated scattering length, m.
    pub value: f64,
    /// Estimated extrapolation uncertainty, m.
    pub uncertainty: f64,
}

/// Number of k-halvings feeding the extrapolation tableau.
const LEVELS: usize = 6;

pub fn scattering_length(potential: &Potential) -> Result<ScatteringLength> {
    scattering_length_with(potential, &SolverSettings::default())
}

pub fn scattering_length_with(
    potential: &Potential,
    settings: &SolverSettings,
) -> Result<ScatteringLength> {
    potential.validate()?;

    // -delta_0/k with delta_0 reduced to the branch nearest zero; the
    // solver determines the phase modulo pi and the scattering-length
    // branch is the one that vanishes with k.
    let g_of_k = |k: f64| -> Result<f64> {
        let d = solve_phase_shift_with(potential, k, 0, settings)?;
        let d_red = d - std::f64::consts::PI * (d / std::f64::consts::PI).round();
        Ok(-d_red / k)
    };

    // Start from the potential's own length scale, then shrink k if the
    // first estimate reveals a much longer scattering length. The phase
    // reduced to the branch nearest zero satisfies |delta_0| <= pi/2, so
    // -delta_0/k cannot exceed (pi/2)/k: a phase still pinned near pi/2
    // after a shrink round means the scattering length outruns every
    // probe wavelength, which is the threshold-resonance signature.
    let e_probe = 1e-30; // only sets the tail cutoff radius for the range estimate
    let range = potential.range(e_probe, settings.tail_rel_tol).max(potential.inner_start(settings.wall_factor));
    let mut k0 = 0.02 / range;
    let mut pinned_rounds = 0u32;
    for _ in 0..3 {
        let g0 = match g_of_k(k0) {
            Ok(g) => g,
            // Near a resonance the phase response steepens as 1/k and the
            // shrunken probe falls below the solver's noise floor; after a
            // pinned round that failure itself is the diagnosis.
            Err(e) => {
                if pinned_rounds > 0 {
                    return Err(Error::Resonance(format!(
                        "phase stays pinned near pi/2 as k shrinks; probe at k = {k0:.3e} 1/m failed ({e})"
                    )));
                }
                return Err(e);
            }
        };
        let a_est = g0.abs();
        if a_est * k0 > 1.0 {
            pinned_rounds += 1;
            if pinned_rounds >= 2 {
                return Err(Error::Resonance(format!(
                    "phase stays pinned near pi/2 as k shrinks (-delta0/k = {g0:.3e} m at k = {k0:.3e} 1/m)"
                )));
            }
        }
        if a_est * k0 < 0.02 {
            break;
        }
        k0 = 0.01 / a_est;
    }

    let mut g = [0.0; LEVELS];
    let mut k = k0;
    for j in 0..LEVELS {
        g[j] = g_of_k(k)?;
        // A phase shift pinned away from zero makes -delta/k double with
        // every halving: the well supports a state at threshold.
        if j >= 2 {
            let r1 = (g[j] / g[j - 1]).abs();
            let r2 = (g[j - 1] / g[j - 2]).abs();
            if r1 > 1.7 && r2 > 1.7 && g[j].abs() * k > FRAC_PI_2 * 0.1 {
                return Err(Error::Resonance(format!(
                    "-delta0/k grows as k -> 0 ({:.3e} m at k = {:.3e} 1/m)",
                    g[j], k
                )));
            }
        }
        k *= 0.5;
    }

    // Richardson tableau in h = k^2; halving k quarters h.
    let mut t = [[0.0f64; LEVELS]; LEVELS];
    for j in 0..LEVELS {
        t[j][0] = g[j];
    }
    for m in 1..LEVELS {
        let w = 4.0f64.powi(m as i32);
        for j in m..LEVELS {
            t[j][m] = (w * t[j][m - 1] - t[j - 1][m - 1]) / (w - 1.0);
        }
    }
    let value = t[LEVELS - 1][LEVELS - 1];
    let uncertainty = (value - t[LEVELS - 1][LEVELS - 2])
        .abs()
        .max((value - t[LEVELS - 2][LEVELS - 2]).abs());

    if !value.is_finite() {
        return Err(Error::Resonance("extrapolation tableau diverged".into()));
    }
    Ok(ScatteringLength { value, uncertainty })
}

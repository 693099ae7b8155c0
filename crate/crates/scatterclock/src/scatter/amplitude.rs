//! Scattering amplitudes, cross sections, and the two-channel coherence
//! factor built from tabulated phase shifts.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::scatter::specfun::legendre;
use crate::scatter::table::PhaseShiftTable;

/// Elastic scattering amplitude
/// f(k, theta) = (1/k) sum_l (2l+1) e^{i delta_l} sin(delta_l) P_l(cos theta),
/// in meters. k must lie inside the table's grid; theta in radians.
pub fn scattering_amplitude(table: &PhaseShiftTable, k: f64, theta: f64) -> Result<Complex64> {
    let deltas = table.deltas_at(k)?;
    Ok(amplitude_from_deltas(&deltas, k, theta.cos()))
}

/// Amplitude evaluated directly at cos(theta); exact angular arguments
/// such as cos(90 deg) = 0 can then be passed without trigonometric
/// round-off.
pub fn amplitude_from_deltas(deltas: &[f64], k: f64, cos_theta: f64) -> Complex64 {
    let l_max = (deltas.len() - 1) as u32;
    let p = legendre(l_max, cos_theta);
    let mut f = Complex64::new(0.0, 0.0);
    for (l, &d) in deltas.iter().enumerate() {
        let (sin_d, cos_d) = d.sin_cos();
        let weight = (2 * l + 1) as f64 * sin_d * p[l];
        f += Complex64::new(cos_d * weight, sin_d * weight);
    }
    f / k
}

/// Partial and total elastic cross sections at one k, with the
/// differential cross section available as a closure over theta.
#[derive(Debug, Clone)]
pub struct CrossSections {
    pub k: f64,
    /// sigma_l = (4 pi / k^2) (2l+1) sin^2(delta_l), m^2.
    pub per_l: Vec<f64>,
    /// Sum of per_l, m^2.
    pub total: f64,
    deltas: Vec<f64>,
}

impl CrossSections {
    /// d sigma / d Omega = |f(theta)|^2, m^2/sr.
    pub fn differential(&self, theta: f64) -> f64 {
        amplitude_from_deltas(&self.deltas, self.k, theta.cos()).norm_sqr()
    }

    pub fn differential_at_cos(&self, cos_theta: f64) -> f64 {
        amplitude_from_deltas(&self.deltas, self.k, cos_theta).norm_sqr()
    }

    /// Forward amplitude, for optical-theorem style checks.
    pub fn forward_amplitude(&self) -> Complex64 {
        amplitude_from_deltas(&self.deltas, self.k, 1.0)
    }

    /// Unitarity ceiling for partial wave l, (4 pi / k^2)(2l+1).
    pub fn unitarity_bound(&self, l: u32) -> f64 {
        4.0 * PI / (self.k * self.k) * (2 * l + 1) as f64
    }
}

pub fn cross_sections(table: &PhaseShiftTable, k: f64) -> Result<CrossSections> {
    let deltas = table.deltas_at(k)?;
    let pref = 4.0 * PI / (k * k);
    let per_l: Vec<f64> = deltas
        .iter()
        .enumerate()
        .map(|(l, &d)| pref * (2 * l + 1) as f64 * d.sin().powi(2))
        .collect();
    let total = per_l.iter().sum();
    Ok(CrossSections { k, per_l, total, deltas })
}

/// Two-channel coherence factor c = f_3(theta) conj(f_4(theta)), m^2.
/// Its argument is the scattering phase difference imprinted on the
/// clock coherence; for pure s-wave tables arg c = delta_3 - delta_4.
pub fn coherence_factor(
    table3: &PhaseShiftTable,
    table4: &PhaseShiftTable,
    k: f64,
    theta: f64,
) -> Result<Complex64> {
    coherence_factor_at_cos(table3, table4, k, theta.cos())
}

pub fn coherence_factor_at_cos(
    table3: &PhaseShiftTable,
    table4: &PhaseShiftTable,
    k: f64,
    cos_theta: f64,
) -> Result<Complex64> {
    if table3.l_max() != table4.l_max() {
        return Err(Error::parameter(format!(
            "channel tables disagree on l_max: {} vs {}",
            table3.l_max(),
            table4.l_max()
        )));
    }
    let d3 = table3.deltas_at(k)?;
    let d4 = table4.deltas_at(k)?;
    let f3 = amplitude_from_deltas(&d3, k, cos_theta);
    let f4 = amplitude_from_deltas(&d4, k, cos_theta);
    Ok(f3 * f4.conj())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn s_table(d0: f64) -> PhaseShiftTable {
        PhaseShiftTable::constant(&[d0], 1e6, 1e9, 12).unwrap()
    }

    fn sp_table(d0: f64, d1: f64) -> PhaseShiftTable {
        PhaseShiftTable::constant(&[d0, d1], 1e6, 1e9, 12).unwrap()
    }

    #[test]
    fn pure_s_wave_amplitude() {
        let t = s_table(0.2);
        let k = 1.0e8;
        let f = scattering_amplitude(&t, k, 1.234).unwrap();
        // isotropic: same at any angle
        let f2 = scattering_amplitude(&t, k, 2.9).unwrap();
        assert!((f - f2).norm() < 1e-18);
        assert!((f.arg() - 0.2).abs() < 1e-12);
        assert!((f.norm() - 0.2f64.sin() / k).abs() < 1e-18);
    }

    #[test]
    fn optical_theorem_two_routes() {
        let t = sp_table(1.2, 0.3);
        let k = 2.0e8;
        let cs = cross_sections(&t, k).unwrap();
        let sigma_from_forward = 4.0 * PI / k * cs.forward_amplitude().im;
        assert!(
            ((cs.total - sigma_from_forward) / cs.total).abs() < 1e-9,
            "sum {:e} vs optical {:e}",
            cs.total,
            sigma_from_forward
        );
    }

    #[test]
    fn unitarity_bound_holds() {
        let t = sp_table(FRAC_PI_2, 1.0);
        let k = 1.0e8;
        let cs = cross_sections(&t, k).unwrap();
        for (l, &s) in cs.per_l.iter().enumerate() {
            assert!(s <= cs.unitarity_bound(l as u32) * (1.0 + 1e-12));
        }
        // s-wave at pi/2 saturates the bound
        assert!((cs.per_l[0] - 4.0 * PI / (k * k)).abs() < 1e-12 * cs.per_l[0]);
    }

    #[test]
    fn zero_phases_scatter_nothing() {
        let t = s_table(0.0);
        let k = 1.0e8;
        let cs = cross_sections(&t, k).unwrap();
        assert_eq!(cs.total, 0.0);
        let f = scattering_amplitude(&t, k, 0.7).unwrap();
        assert_eq!(f.norm_sqr(), 0.0);
    }

    #[test]
    fn coherence_phase_is_delta_difference() {
        let t3 = s_table(0.200);
        let t4 = s_table(0.341);
        let k = 1.04e8;
        let c = coherence_factor(&t3, &t4, k, FRAC_PI_2).unwrap();
        assert!((c.arg() - (-0.141)).abs() < 1e-12);
        // magnitude is |f3||f4|
        let expect = 0.200f64.sin() * 0.341f64.sin() / (k * k);
        assert!((c.norm() - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn identical_channels_have_zero_phase() {
        let t = sp_table(0.9, 0.2);
        let c = coherence_factor(&t, &t, 5e7, 1.1).unwrap();
        assert!(c.arg().abs() < 1e-15);
        assert!(c.im.abs() < 1e-15 * c.re.abs());
    }

    #[test]
    fn p_wave_drops_out_at_ninety_degrees() {
        let t3 = sp_table(0.200, 0.17);
        let t4 = sp_table(0.341, 0.09);
        let k = 1.04e8;
        // exact 90 degrees: pass cos(theta) = 0 directly
        let c = coherence_factor_at_cos(&t3, &t4, k, 0.0).unwrap();
        let s3 = s_table(0.200);
        let s4 = s_table(0.341);
        let c_s = coherence_factor_at_cos(&s3, &s4, k, 0.0).unwrap();
        assert_eq!(c.arg(), c_s.arg());
        // slightly off 90 degrees the p-waves do contribute
        let c_off = coherence_factor_at_cos(&t3, &t4, k, 0.05).unwrap();
        assert!((c_off.arg() - c_s.arg()).abs() > 1e-4);
    }

    #[test]
    fn l_max_mismatch_is_rejected() {
        let a = s_table(0.1);
        let b = sp_table(0.1, 0.0);
        assert!(coherence_factor(&a, &b, 1e8, 1.0).is_err());
    }
}

//! Turning cloud overlap into scattered branches.
//!
//! Each Cloud 2 record is split in two: an unscattered branch that
//! keeps the original trajectory with weight w(1 - p), and a scattered
//! branch with weight w p, where p is the single-pass scattering
//! probability sigma_eff * Lambda and Lambda the Cloud 1 fluence the
//! atom sweeps through. Splitting instead of Bernoulli thinning keeps
//! the expected counts exactly linear in the Cloud 1 density and
//! conserves total weight to the last bit worth caring about.
//!
//! The scattered branch gets a direction drawn from the differential
//! cross section, half the relative speed about the pair's center of
//! mass, and (for superposition atoms) the coherence factor folded into
//! its clock amplitudes: the phase shifts the fringe, the magnitude
//! relative to the total scattered flux becomes the branch's fringe
//! visibility. The scattering instant is drawn from the Gaussian
//! overlap profile along the atom's path, so late cuts see scattered
//! atoms leave from the right place.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::f64::consts::TAU;

use super::{
    sample::center_velocity, stream_rng, AtomRecord, CloudSpec, CloudState, ColliderSetup,
    Ensemble, LaunchSlot, STREAM_EVENTS,
};
use crate::clock::insert_scattering_phase;
use crate::constants::{HBAR, M_CS};
use crate::error::{Error, Result};
use crate::scatter::amplitude::amplitude_from_deltas;
use crate::scatter::PhaseShiftTable;

/// Scattering probability above which the single-pass split is no
/// longer trustworthy and the run carries a warning.
pub const SINGLE_PASS_LIMIT: f64 = 0.1;

/// Bookkeeping from one pass of `scatter_events`.
#[derive(Debug, Clone, Default)]
pub struct ScatterSummary {
    /// Physical atoms expected to scatter, sum of w p.
    pub expected_scattered_weight: f64,
    /// Expected scattered weight over total input weight.
    pub scattered_fraction: f64,
    /// Weighted mean single-pass probability.
    pub mean_probability: f64,
    pub max_probability: f64,
    /// Records whose pair wavenumber fell outside the tables and was
    /// evaluated at the nearest table edge instead.
    pub clamped_k_records: usize,
    pub warnings: Vec<String>,
}

/// Split every Cloud 2 record into its unscattered and scattered
/// branches. The input ensemble is left untouched (it is the
/// early-clearing reference); the output holds both branches of every
/// atom, in input order.
pub fn scatter_events(
    setup: &ColliderSetup,
    cloud2: &Ensemble,
    rep: u32,
) -> Result<(Ensemble, ScatterSummary)> {
    let k_nom = setup.geometry.relative_wavenumber();
    let channel = match setup.cloud2.state {
        CloudState::ClockSuperposition => None,
        CloudState::Pure { f: 3, .. } => Some(3u8),
        CloudState::Pure { f, .. } => Some(f),
    };
    let samplers = SamplerBank::build(setup, channel, k_nom)?;
    let v_partner_mean = center_velocity(setup, LaunchSlot::Cloud1);
    let partner_rms = if setup.thermal_averaging {
        setup.cloud1.thermal_rms()
    } else {
        0.0
    };
    let sigma_overlap = setup.cloud1.sigma_at(setup.geometry.t_collide);
    let t_collide = setup.geometry.t_collide;

    struct Split {
        unscattered: AtomRecord,
        scattered: Option<AtomRecord>,
        p: f64,
        w: f64,
        clamped: bool,
    }

    let splits: Vec<Split> = cloud2
        .atoms
        .par_iter()
        .enumerate()
        .map(|(i, atom)| -> Result<Split> {
            let mut rng = stream_rng(setup.seed, STREAM_EVENTS, rep as u64, i as u64);
            let mut normal = || -> f64 { rng.sample(StandardNormal) };
            let v_partner = if setup.thermal_averaging {
                [
                    v_partner_mean[0] + partner_rms * normal(),
                    v_partner_mean[1] + partner_rms * normal(),
                    v_partner_mean[2] + partner_rms * normal(),
                ]
            } else {
                v_partner_mean
            };
            let u = [
                atom.velocity[0] - v_partner[0],
                atom.velocity[1] - v_partner[1],
                atom.velocity[2] - v_partner[2],
            ];
            let speed = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
            let mut unscattered = *atom;
            if speed == 0.0 {
                unscattered.weight = atom.weight;
                return Ok(Split { unscattered, scattered: None, p: 0.0, w: atom.weight, clamped: false });
            }
            let k_pair = 0.5 * M_CS * speed / HBAR;
            let (k_eval, clamped) = samplers.clamp_k(k_pair);
            let channels = ChannelAmps::at(setup, channel, k_eval)?;
            let sigma_eff = channels.effective_cross_section();
            if sigma_eff <= 0.0 {
                unscattered.weight = atom.weight;
                return Ok(Split { unscattered, scattered: None, p: 0.0, w: atom.weight, clamped });
            }
            let fluence = pass_fluence(&setup.cloud1, t_collide, atom.position, u);
            let p = (sigma_eff * fluence).min(1.0);
            unscattered.weight = atom.weight * (1.0 - p);
            if p <= 0.0 {
                return Ok(Split { unscattered, scattered: None, p: 0.0, w: atom.weight, clamped });
            }

            // when along the path the atom scatters: Gaussian around the
            // closest approach to the Cloud 1 center, width sigma / |u|
            let s_closest =
                -(atom.position[0] * u[0] + atom.position[1] * u[1] + atom.position[2] * u[2])
                    / (speed * speed);
            let s_scatter = s_closest + sigma_overlap / speed * normal();

            let cos_theta = samplers.sample_cos_theta(k_eval, rng.gen::<f64>());
            let phi = TAU * rng.gen::<f64>();
            let direction = deflect(u, speed, cos_theta, phi);
            let velocity = [
                0.5 * (atom.velocity[0] + v_partner[0]) + 0.5 * speed * direction[0],
                0.5 * (atom.velocity[1] + v_partner[1]) + 0.5 * speed * direction[1],
                0.5 * (atom.velocity[2] + v_partner[2]) + 0.5 * speed * direction[2],
            ];
            let (amps, visibility) = channels.branch_state(atom, cos_theta);
            let scattered = AtomRecord {
                position: [
                    atom.position[0] + atom.velocity[0] * s_scatter,
                    atom.position[1] + atom.velocity[1] * s_scatter,
                    atom.position[2] + atom.velocity[2] * s_scatter,
                ],
                velocity,
                weight: atom.weight * p,
                scattered: true,
                scatter_theta: cos_theta.acos(),
                scatter_phi: phi,
                epoch: s_scatter,
                visibility,
                amps,
            };
            Ok(Split { unscattered, scattered: Some(scattered), p, w: atom.weight, clamped })
        })
        .collect::<Result<_>>()?;

    let mut atoms = Vec::with_capacity(2 * splits.len());
    let mut summary = ScatterSummary::default();
    let mut weight_in = 0.0;
    let mut weighted_p = 0.0;
    for split in splits {
        weight_in += split.w;
        weighted_p += split.w * split.p;
        summary.max_probability = summary.max_probability.max(split.p);
        summary.clamped_k_records += split.clamped as usize;
        atoms.push(split.unscattered);
        if let Some(s) = split.scattered {
            atoms.push(s);
        }
    }
    summary.expected_scattered_weight = weighted_p;
    if weight_in > 0.0 {
        summary.scattered_fraction = weighted_p / weight_in;
        summary.mean_probability = weighted_p / weight_in;
    }
    if summary.max_probability > SINGLE_PASS_LIMIT {
        summary.warnings.push(format!(
            "peak single-pass scattering probability {:.3} exceeds {SINGLE_PASS_LIMIT}; \
             multiple scattering is not modeled and the split is only first order in density",
            summary.max_probability
        ));
    }
    if summary.clamped_k_records > 0 {
        summary.warnings.push(format!(
            "{} of {} pair wavenumbers fell outside the phase-shift tables and were \
             evaluated at the nearest edge",
            summary.clamped_k_records,
            cloud2.atoms.len()
        ));
    }
    Ok((Ensemble::from_atoms(atoms), summary))
}

/// Cloud 1 atoms per unit area swept by a test atom at `r` (relative to
/// the Cloud 1 center at the collision instant) moving with relative
/// velocity `u`, both clouds expanding ballistically: |u| times the
/// time integral of the local density along the straight path.
pub(crate) fn pass_fluence(cloud: &CloudSpec, t_collide: f64, r: [f64; 3], u: [f64; 3]) -> f64 {
    let speed2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
    if speed2 == 0.0 || cloud.peak_density == 0.0 {
        return 0.0;
    }
    let speed = speed2.sqrt();
    let s_closest = -(r[0] * u[0] + r[1] * u[1] + r[2] * u[2]) / speed2;
    let width = cloud.sigma_at(t_collide) / speed;
    // the cloud only exists after its launch; never integrate past 90%
    // of the way back to it
    let lo = (s_closest - 8.0 * width).max(-0.9 * t_collide);
    let hi = s_closest + 8.0 * width;
    if hi <= lo {
        return 0.0;
    }
    let density = |s: f64| -> f64 {
        let dx = r[0] + u[0] * s;
        let dy = r[1] + u[1] * s;
        let dz = r[2] + u[2] * s;
        cloud.density_at(dx * dx + dy * dy + dz * dz, t_collide + s)
    };
    // eight seed panels so the overlap bump cannot hide between probe
    // points, then adaptive refinement inside each
    let mut integral = 0.0;
    for j in 0..8 {
        let a = lo + (hi - lo) * j as f64 / 8.0;
        let b = lo + (hi - lo) * (j + 1) as f64 / 8.0;
        integral += adaptive_simpson(&density, a, b, 1e-10);
    }
    speed * integral
}

fn simpson(f: &impl Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    let (fa, fb) = (f(a), f(b));
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    adaptive_step(f, a, fa, m, fm, b, fb, whole, rel_tol, 24)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    fa: f64,
    m: f64,
    fm: f64,
    b: f64,
    fb: f64,
    whole: f64,
    rel_tol: f64,
    depth: u32,
) -> f64 {
    let (left, lm, flm) = simpson(f, a, fa, m, fm);
    let (right, rm, frm) = simpson(f, m, fm, b, fb);
    let halves = left + right;
    let err = halves - whole;
    if depth == 0 || err.abs() <= 15.0 * rel_tol * halves.abs() {
        return halves + err / 15.0;
    }
    adaptive_step(f, a, fa, lm, flm, m, fm, left, rel_tol, depth - 1)
        + adaptive_step(f, m, fm, rm, frm, b, fb, right, rel_tol, depth - 1)
}

/// Unit vector at polar angle acos(`cos_theta`), azimuth `phi`, about
/// the axis `u` (with magnitude `speed` already computed).
fn deflect(u: [f64; 3], speed: f64, cos_theta: f64, phi: f64) -> [f64; 3] {
    let axis = [u[0] / speed, u[1] / speed, u[2] / speed];
    // any transverse pair will do, as long as the choice is smooth
    // enough to be deterministic
    let helper = if axis[2].abs() < 0.9 { [0.0, 0.0, 1.0] } else { [1.0, 0.0, 0.0] };
    let mut e1 = [
        helper[1] * axis[2] - helper[2] * axis[1],
        helper[2] * axis[0] - helper[0] * axis[2],
        helper[0] * axis[1] - helper[1] * axis[0],
    ];
    let norm = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
    e1 = [e1[0] / norm, e1[1] / norm, e1[2] / norm];
    let e2 = [
        axis[1] * e1[2] - axis[2] * e1[1],
        axis[2] * e1[0] - axis[0] * e1[2],
        axis[0] * e1[1] - axis[1] * e1[0],
    ];
    let sin_theta = (1.0 - cos_theta * cos_theta).max(0.0).sqrt();
    let (sin_phi, cos_phi) = phi.sin_cos();
    let (t1, t2) = (sin_theta * cos_phi, sin_theta * sin_phi);
    [
        t1 * e1[0] + t2 * e2[0] + cos_theta * axis[0],
        t1 * e1[1] + t2 * e2[1] + cos_theta * axis[1],
        t1 * e1[2] + t2 * e2[2] + cos_theta * axis[2],
    ]
}

/// Channel amplitudes at one pair wavenumber, enough to build the
/// scattered branch: phase shifts for the one or two channels involved.
struct ChannelAmps {
    k: f64,
    deltas3: Option<Vec<f64>>,
    deltas4: Option<Vec<f64>>,
    sigma_eff: f64,
}

impl ChannelAmps {
    fn at(setup: &ColliderSetup, channel: Option<u8>, k: f64) -> Result<ChannelAmps> {
        let totals = |table: &PhaseShiftTable| -> Result<(Vec<f64>, f64)> {
            let deltas = table.deltas_at(k)?;
            let pref = 4.0 * std::f64::consts::PI / (k * k);
            let total = deltas
                .iter()
                .enumerate()
                .map(|(l, &d)| pref * (2 * l + 1) as f64 * d.sin().powi(2))
                .sum();
            Ok((deltas, total))
        };
        match channel {
            None => {
                let (d3, s3) = totals(setup.table3)?;
                let (d4, s4) = totals(setup.table4)?;
                Ok(ChannelAmps {
                    k,
                    deltas3: Some(d3),
                    deltas4: Some(d4),
                    sigma_eff: 0.5 * (s3 + s4),
                })
            }
            Some(3) => {
                let (d3, s3) = totals(setup.table3)?;
                Ok(ChannelAmps { k, deltas3: Some(d3), deltas4: None, sigma_eff: s3 })
            }
            Some(_) => {
                let (d4, s4) = totals(setup.table4)?;
                Ok(ChannelAmps { k, deltas3: None, deltas4: Some(d4), sigma_eff: s4 })
            }
        }
    }

    fn effective_cross_section(&self) -> f64 {
        self.sigma_eff
    }

    /// Clock amplitudes and fringe visibility of the scattered branch.
    /// Pure-channel atoms keep their state and scatter at full
    /// visibility; superposition atoms pick up the coherence phase, and
    /// the coherent fraction of the scattered flux at this angle sets
    /// the visibility.
    fn branch_state(
        &self,
        atom: &AtomRecord,
        cos_theta: f64,
    ) -> (crate::clock::ClockStateAmplitudes, f64) {
        match (&self.deltas3, &self.deltas4) {
            (Some(d3), Some(d4)) => {
                let f3 = amplitude_from_deltas(d3, self.k, cos_theta);
                let f4 = amplitude_from_deltas(d4, self.k, cos_theta);
                let c = f3 * f4.conj();
                let denom = f3.norm_sqr() + f4.norm_sqr();
                let visibility = if denom > 0.0 { 2.0 * c.norm() / denom } else { 0.0 };
                (insert_scattering_phase(&atom.amps, c).amps, visibility)
            }
            _ => (atom.amps, 1.0),
        }
    }
}

/// Inverse-CDF samplers for the scattering angle, one per node of a
/// small wavenumber grid spanning the thermal spread of pair speeds.
/// Sampling picks the nearest node; cross sections and coherence
/// factors still use the exact pair wavenumber.
struct SamplerBank {
    k_lo: f64,
    k_hi: f64,
    table_lo: f64,
    table_hi: f64,
    nodes: Vec<AngleSampler>,
}

const ANGLE_GRID: usize = 1025;

impl SamplerBank {
    fn build(setup: &ColliderSetup, channel: Option<u8>, k_nom: f64) -> Result<SamplerBank> {
        let table_lo = setup.table3.k_min().max(setup.table4.k_min());
        let table_hi = setup.table3.k_max().min(setup.table4.k_max());
        let rel_spread = {
            let s1 = setup.cloud1.thermal_rms();
            let s2 = setup.cloud2.thermal_rms();
            (s1 * s1 + s2 * s2).sqrt() / setup.geometry.v_r.abs()
        };
        let half_span = (6.0 * rel_spread).min(0.9);
        let k_lo = (k_nom * (1.0 - half_span)).max(table_lo);
        let k_hi = (k_nom * (1.0 + half_span)).min(table_hi);
        let n_nodes = if half_span == 0.0 || k_hi <= k_lo { 1 } else { 65 };
        let mut nodes = Vec::with_capacity(n_nodes);
        for j in 0..n_nodes {
            let k = if n_nodes == 1 {
                k_nom.clamp(table_lo, table_hi)
            } else {
                k_lo + (k_hi - k_lo) * j as f64 / (n_nodes - 1) as f64
            };
            let weight = |cos_theta: f64| -> Result<f64> {
                Ok(match channel {
                    None => {
                        let f3 =
                            amplitude_from_deltas(&setup.table3.deltas_at(k)?, k, cos_theta);
                        let f4 =
                            amplitude_from_deltas(&setup.table4.deltas_at(k)?, k, cos_theta);
                        0.5 * (f3.norm_sqr() + f4.norm_sqr())
                    }
                    Some(3) => {
                        amplitude_from_deltas(&setup.table3.deltas_at(k)?, k, cos_theta).norm_sqr()
                    }
                    Some(_) => {
                        amplitude_from_deltas(&setup.table4.deltas_at(k)?, k, cos_theta).norm_sqr()
                    }
                })
            };
            nodes.push(AngleSampler::build(&weight)?);
        }
        Ok(SamplerBank { k_lo, k_hi, table_lo, table_hi, nodes })
    }

    fn clamp_k(&self, k: f64) -> (f64, bool) {
        if k < self.table_lo {
            (self.table_lo, true)
        } else if k > self.table_hi {
            (self.table_hi, true)
        } else {
            (k, false)
        }
    }

    fn sample_cos_theta(&self, k: f64, uniform: f64) -> f64 {
        let node = if self.nodes.len() == 1 || self.k_hi <= self.k_lo {
            0
        } else {
            let t = (k - self.k_lo) / (self.k_hi - self.k_lo) * (self.nodes.len() - 1) as f64;
            (t.round() as isize).clamp(0, self.nodes.len() as isize - 1) as usize
        };
        self.nodes[node].sample(uniform)
    }
}

/// Piecewise-linear inverse CDF over cos(theta) built from a
/// differential weight sampled on a uniform grid.
struct AngleSampler {
    cdf: Vec<f64>,
}

impl AngleSampler {
    fn build(weight: &impl Fn(f64) -> Result<f64>) -> Result<AngleSampler> {
        let h = 2.0 / (ANGLE_GRID - 1) as f64;
        let mut values = Vec::with_capacity(ANGLE_GRID);
        for i in 0..ANGLE_GRID {
            let x = -1.0 + h * i as f64;
            let w = weight(x)?;
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::parameter(format!(
                    "differential cross section must be finite and non-negative, got {w:e} \
                     at cos theta = {x}"
                )));
            }
            values.push(w);
        }
        let mut cdf = Vec::with_capacity(ANGLE_GRID);
        cdf.push(0.0);
        let mut acc = 0.0;
        for pair in values.windows(2) {
            acc += 0.5 * (pair[0] + pair[1]) * h;
            cdf.push(acc);
        }
        if acc > 0.0 {
            for c in cdf.iter_mut() {
                *c /= acc;
            }
        }
        Ok(AngleSampler { cdf })
    }

    /// Map a uniform draw in [0, 1) to cos(theta). A zero-mass sampler
    /// (dark channel) falls back to isotropic, which is harmless: the
    /// scattering probability is zero in that case anyway.
    fn sample(&self, uniform: f64) -> f64 {
        let total = *self.cdf.last().expect("nonempty");
        if total == 0.0 {
            return -1.0 + 2.0 * uniform;
        }
        let idx = match self.cdf.binary_search_by(|c| c.total_cmp(&uniform)) {
            Ok(i) => i.max(1),
            Err(i) => i.clamp(1, self.cdf.len() - 1),
        };
        let (c0, c1) = (self.cdf[idx - 1], self.cdf[idx]);
        let h = 2.0 / (ANGLE_GRID - 1) as f64;
        let x0 = -1.0 + h * (idx - 1) as f64;
        if c1 > c0 {
            x0 + h * (uniform - c0) / (c1 - c0)
        } else {
            x0
        }
    }
}

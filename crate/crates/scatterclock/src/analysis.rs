//! Fringe fitting and measurement campaigns.
//!
//! The collider produces fringe scans, counts against Ramsey detuning.
//! This module turns them into numbers: a weighted fit of the fringe
//! model pins the collision phase, campaigns sweep the free time or the
//! target density to separate a real scattering phase from instrumental
//! look-alikes, and the pooled phase uncertainty converts into a
//! scattering-length sensitivity.
//!
//! The fitted model for every scan is
//!
//! ```text
//! counts(detuning) = offset + amp * (1 - cos(2 pi detuning t_free + phi)) / 2
//! ```
//!
//! which is exact for ideal Ramsey pulses: the scattered-class fringe is
//! a single sinusoid whatever mixture of per-atom phases and
//! visibilities went in, because they sum to one complex amplitude.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::clock::RamseySequence;
use crate::collider::{synthesize_fringes, ColliderSetup, FringeSet};
use crate::error::{Error, Result};
use crate::fountain::{collision_geometry, LaunchPlan};

/// Wrap an angle to the half-open interval (-pi, pi].
pub fn wrap_phase(phi: f64) -> f64 {
    let w = phi.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// A measured or synthesized fringe: counts against detuning at a fixed
/// Ramsey free time.
#[derive(Debug, Clone)]
pub struct FringeData {
    /// Ramsey free time the scan was taken at, s.
    pub t_free: f64,
    /// Which detection series the points came from, e.g. "difference".
    pub label: String,
    /// One point per detuning: (detuning in Hz, counts, count sigma).
    pub points: Vec<(f64, f64, f64)>,
}

impl FringeData {
    pub fn new(t_free: f64, label: impl Into<String>, points: Vec<(f64, f64, f64)>) -> Result<Self> {
        let data = FringeData { t_free, label: label.into(), points };
        data.validate()?;
        Ok(data)
    }

    /// The four-way-difference fringe of a synthesized set.
    pub fn from_difference(set: &FringeSet) -> Result<Self> {
        let points = set
            .detuning_hz
            .iter()
            .zip(set.difference())
            .map(|(&nu, (d, sigma))| (nu, d, sigma))
            .collect();
        FringeData::new(set.t_free, "difference", points)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_free > 0.0) || !self.t_free.is_finite() {
            return Err(Error::parameter(format!(
                "fringe free time must be positive and finite, got {} s",
                self.t_free
            )));
        }
        for &(nu, y, sigma) in &self.points {
            if !nu.is_finite() || !y.is_finite() || !sigma.is_finite() {
                return Err(Error::parameter(format!(
                    "fringe point ({nu}, {y}, {sigma}) is not finite"
                )));
            }
            if !(sigma > 0.0) {
                return Err(Error::parameter(format!(
                    "fringe point at {nu} Hz has sigma {sigma}; every point needs a positive uncertainty"
                )));
            }
        }
        Ok(())
    }

    /// Detuning span of the scan, Hz.
    pub fn span(&self) -> f64 {
        let lo = self.points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let hi = self.points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    }

    /// The points inside the central fringe, |detuning| < 1 / (2 t_free).
    pub fn central_fringe(&self) -> FringeData {
        let half = 0.5 / self.t_free;
        FringeData {
            t_free: self.t_free,
            label: self.label.clone(),
            points: self.points.iter().copied().filter(|p| p.0.abs() < half).collect(),
        }
    }
}

/// Result of a weighted fringe fit. The phase sits in (-pi, pi] and the
/// contrast is canonicalized to amp >= 0; covariance rows and columns
/// are ordered (offset, amp, phi).
#[derive(Debug, Clone)]
pub struct FitResult {
    pub t_free: f64,
    pub phi: f64,
    pub phi_err: f64,
    pub amp: f64,
    pub amp_err: f64,
    pub offset: f64,
    pub offset_err: f64,
    pub covariance: [[f64; 3]; 3],
    pub chi2: f64,
    pub dof: usize,
    pub converged: bool,
    pub warnings: Vec<String>,
}

impl FitResult {
    pub fn chi2_per_dof(&self) -> f64 {
        self.chi2 / self.dof.max(1) as f64
    }

    /// True when the contrast is consistent with zero at two sigma.
    pub fn low_contrast(&self) -> bool {
        self.amp < 2.0 * self.amp_err
    }

    /// The fitted model evaluated at one detuning, Hz in, counts out.
    pub fn model(&self, detuning_hz: f64) -> f64 {
        let theta = 2.0 * PI * detuning_hz * self.t_free + self.phi;
        self.offset + 0.5 * self.amp * (1.0 - theta.cos())
    }
}

/// Fit the fringe model to a full scan. The scan must hold at least
/// eight points and span at least one fringe period, 1 / t_free.
pub fn fit_fringe(data: &FringeData) -> Result<FitResult> {
    data.validate()?;
    require_points(data, 8)?;
    let need = 1.0 / data.t_free;
    if data.span() < need * (1.0 - 1e-9) {
        return Err(Error::parameter(format!(
            "fringe scan spans {:.6} Hz but the fit needs a full period, {:.6} Hz; \
             widen the scan or fit the central fringe",
            data.span(),
            need
        )));
    }
    fit_points(data)
}

/// Fit only the central fringe, |detuning| < 1 / (2 t_free). Useful when
/// the outer fringes are distorted, e.g. by the pulse envelope or a
/// sloped background. Needs eight points covering at least half the
/// central window.
pub fn fit_central_fringe(data: &FringeData) -> Result<FitResult> {
    data.validate()?;
    let central = data.central_fringe();
    require_points(&central, 8)?;
    let need = 0.5 / data.t_free;
    if central.span() < need * (1.0 - 1e-9) {
        return Err(Error::parameter(format!(
            "central fringe window holds only {:.6} Hz of data; the fit needs {:.6} Hz",
            central.span(),
            need
        )));
    }
    fit_points(&central)
}

fn require_points(data: &FringeData, n: usize) -> Result<()> {
    if data.points.len() < n {
        return Err(Error::parameter(format!(
            "fringe fit needs at least {n} points, got {}",
            data.points.len()
        )));
    }
    Ok(())
}

struct Candidate {
    p: [f64; 3],
    chi2: f64,
    cov: [[f64; 3]; 3],
    converged: bool,
    grad_scaled: f64,
}

fn fit_points(data: &FringeData) -> Result<FitResult> {
    let n = data.points.len();
    let thetas: Vec<f64> = data.points.iter().map(|p| 2.0 * PI * p.0 * data.t_free).collect();
    let ys: Vec<f64> = data.points.iter().map(|p| p.1).collect();
    let sigmas: Vec<f64> = data.points.iter().map(|p| p.2).collect();

    let starts = [0.0, FRAC_PI_2, PI, -FRAC_PI_2];
    let mut candidates: Vec<Candidate> = Vec::new();
    for phi0 in starts {
        if let Some(c) = refine(&thetas, &ys, &sigmas, phi0) {
            candidates.push(c);
        }
    }

    let best = candidates
        .iter()
        .filter(|c| c.converged)
        .min_by(|a, b| a.chi2.total_cmp(&b.chi2));
    let Some(c) = best else {
        return match candidates.iter().min_by(|a, b| a.chi2.total_cmp(&b.chi2)) {
            Some(c) => Err(Error::Fit(format!(
                "fringe fit did not converge from any start phase; best chi-square {:.6e} \
                 with scaled gradient {:.3e} over {n} points",
                c.chi2, c.grad_scaled
            ))),
            None => Err(Error::Fit(
                "fringe fit normal equations are singular at every start phase; \
                 the scan does not constrain a phase"
                    .into(),
            )),
        };
    };

    let phi_err = c.cov[2][2].sqrt();
    let amp_err = c.cov[1][1].sqrt();
    let offset_err = c.cov[0][0].sqrt();
    let mut warnings = Vec::new();
    if c.p[1] < 2.0 * amp_err {
        warnings.push(format!(
            "low contrast: amp = {:.4e} +- {:.4e} is consistent with zero at two sigma",
            c.p[1], amp_err
        ));
    }
    Ok(FitResult {
        t_free: data.t_free,
        phi: c.p[2],
        phi_err,
        amp: c.p[1],
        amp_err,
        offset: c.p[0],
        offset_err,
        covariance: c.cov,
        chi2: c.chi2,
        dof: n - 3,
        converged: c.converged,
        warnings,
    })
}

fn model_of(theta: f64, p: &[f64; 3]) -> f64 {
    p[0] + 0.5 * p[1] * (1.0 - (theta + p[2]).cos())
}

fn chi2_of(thetas: &[f64], ys: &[f64], sigmas: &[f64], p: &[f64; 3]) -> f64 {
    let mut total = 0.0;
    for i in 0..thetas.len() {
        let r = (ys[i] - model_of(thetas[i], p)) / sigmas[i];
        total += r * r;
    }
    total
}

fn normal_system(
    thetas: &[f64],
    ys: &[f64],
    sigmas: &[f64],
    p: &[f64; 3],
) -> ([[f64; 3]; 3], [f64; 3]) {
    let mut h = [[0.0; 3]; 3];
    let mut g = [0.0; 3];
    for i in 0..thetas.len() {
        let (s, c) = (thetas[i] + p[2]).sin_cos();
        let r = (ys[i] - (p[0] + 0.5 * p[1] * (1.0 - c))) / sigmas[i];
        let j = [1.0 / sigmas[i], 0.5 * (1.0 - c) / sigmas[i], 0.5 * p[1] * s / sigmas[i]];
        for a in 0..3 {
            g[a] += j[a] * r;
            for b in a..3 {
                h[a][b] += j[a] * j[b];
            }
        }
    }
    for a in 1..3 {
        for b in 0..a {
            h[a][b] = h[b][a];
        }
    }
    (h, g)
}

fn invert3(m: &[[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let c00 = m[1][1] * m[2][2] - m[1][2] * m[2][1];
    let c01 = m[1][2] * m[2][0] - m[1][0] * m[2][2];
    let c02 = m[1][0] * m[2][1] - m[1][1] * m[2][0];
    let det = m[0][0] * c00 + m[0][1] * c01 + m[0][2] * c02;
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    let adj = [
        [
            c00,
            m[0][2] * m[2][1] - m[0][1] * m[2][2],
            m[0][1] * m[1][2] - m[0][2] * m[1][1],
        ],
        [
            c01,
            m[0][0] * m[2][2] - m[0][2] * m[2][0],
            m[0][2] * m[1][0] - m[0][0] * m[1][2],
        ],
        [
            c02,
            m[0][1] * m[2][0] - m[0][0] * m[2][1],
            m[0][0] * m[1][1] - m[0][1] * m[1][0],
        ],
    ];
    let mut out = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            out[a][b] = adj[a][b] / det;
            if !out[a][b].is_finite() {
                return None;
            }
        }
    }
    Some(out)
}

/// One Gauss-Newton descent with Levenberg damping from a fixed start
/// phase. The linear parameters are seeded by a weighted least-squares
/// solve at that phase, then all three parameters move together.
/// Convergence demands both a small scaled gradient and a small scaled
/// Newton step, each measured in units of the parameter standard errors.
fn refine(thetas: &[f64], ys: &[f64], sigmas: &[f64], phi0: f64) -> Option<Candidate> {
    let n = thetas.len();
    let (mut s, mut sx, mut sxx, mut sy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        let w = 1.0 / (sigmas[i] * sigmas[i]);
        let x = 0.5 * (1.0 - (thetas[i] + phi0).cos());
        s += w;
        sx += w * x;
        sxx += w * x * x;
        sy += w * ys[i];
        sxy += w * x * ys[i];
    }
    let det = s * sxx - sx * sx;
    if !(det > 1e-12 * s * sxx) {
        return None;
    }
    let mut p = [(sxx * sy - sx * sxy) / det, (s * sxy - sx * sy) / det, phi0];
    let mut chi2 = chi2_of(thetas, ys, sigmas, &p);
    if !chi2.is_finite() {
        return None;
    }

    const TOL: f64 = 1e-9;
    let mut lambda: f64 = 0.0;
    let mut converged = false;
    let mut grad_scaled = f64::INFINITY;
    'outer: for _ in 0..200 {
        let (h, g) = normal_system(thetas, ys, sigmas, &p);
        let Some(cov) = invert3(&h) else { break };
        let mut dp0 = [0.0; 3];
        for a in 0..3 {
            for b in 0..3 {
                dp0[a] += cov[a][b] * g[b];
            }
        }
        let mut gs = 0.0;
        let mut ss = 0.0;
        for a in 0..3 {
            gs += g[a] * g[a] * cov[a][a].max(0.0);
            ss += dp0[a] * dp0[a] / cov[a][a].max(1e-300);
        }
        grad_scaled = gs.sqrt();
        if grad_scaled <= TOL && ss.sqrt() <= TOL {
            converged = true;
            break;
        }
        loop {
            let mut hd = h;
            for a in 0..3 {
                hd[a][a] *= 1.0 + lambda;
            }
            let step = invert3(&hd).map(|hinv| {
                let mut dp = [0.0; 3];
                for a in 0..3 {
                    for b in 0..3 {
                        dp[a] += hinv[a][b] * g[b];
                    }
                }
                dp
            });
            if let Some(dp) = step {
                let cand = [p[0] + dp[0], p[1] + dp[1], p[2] + dp[2]];
                let c2 = chi2_of(thetas, ys, sigmas, &cand);
                if c2.is_finite() && c2 <= chi2 {
                    p = cand;
                    chi2 = c2;
                    lambda = if lambda < 1e-9 { 0.0 } else { lambda * 0.25 };
                    break;
                }
            }
            lambda = if lambda == 0.0 { 1e-6 } else { lambda * 8.0 };
            if lambda > 1e12 {
                break 'outer;
            }
        }
    }

    // canonical branch: positive contrast, phase in (-pi, pi]
    if p[1] < 0.0 {
        p[0] += p[1];
        p[1] = -p[1];
        p[2] += PI;
    }
    p[2] = wrap_phase(p[2]);
    let (h, _) = normal_system(thetas, ys, sigmas, &p);
    let cov = invert3(&h)?;
    if cov[0][0] < 0.0 || cov[1][1] < 0.0 || cov[2][2] < 0.0 {
        return None;
    }
    Some(Candidate { p, chi2, cov, converged, grad_scaled })
}

/// What a campaign injects into each synthesized point on top of the
/// collision physics itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Injection {
    /// Plain synthesis: the points carry whatever phase the collision
    /// imprints.
    None,
    /// A constant detuning offset in hertz applied to the synthesizer
    /// while the grid keeps its nominal labels. This is the signature of
    /// an uncompensated frequency shift: the fitted phase grows linearly
    /// with the free time, slope 2 pi times the offset.
    FrequencyShift(f64),
}

/// Detuning grid and averaging used for each campaign point.
#[derive(Debug, Clone, Copy)]
pub struct FringeProtocol {
    /// Half-width of the scan in fringe periods; the grid runs from
    /// -cycles/t_free to +cycles/t_free.
    pub cycles: f64,
    /// Number of grid points.
    pub points: usize,
    /// Draw Poisson counts instead of expectations.
    pub noise: bool,
    /// Repetitions averaged per grid point when noise is on.
    pub reps: u32,
}

impl Default for FringeProtocol {
    fn default() -> Self {
        FringeProtocol { cycles: 2.0, points: 48, noise: true, reps: 8 }
    }
}

impl FringeProtocol {
    fn validate(&self) -> Result<()> {
        if !(self.cycles >= 0.5) || !self.cycles.is_finite() {
            return Err(Error::parameter(format!(
                "fringe protocol must scan at least half a period each side, got {} cycles",
                self.cycles
            )));
        }
        if self.points < 8 {
            return Err(Error::parameter(format!(
                "fringe protocol needs at least 8 grid points, got {}",
                self.points
            )));
        }
        Ok(())
    }

    /// Symmetric detuning grid covering `cycles` fringe periods each
    /// side of resonance at the given free time.
    pub fn grid(&self, t_free: f64) -> Vec<f64> {
        let half = self.cycles / t_free;
        (0..self.points)
            .map(|i| -half + 2.0 * half * i as f64 / (self.points - 1) as f64)
            .collect()
    }
}

/// Through-origin weighted fit of fringe contrast against the swept
/// value, amp = slope * value.
#[derive(Debug, Clone, Copy)]
pub struct AmplitudeScaling {
    pub slope: f64,
    pub slope_err: f64,
    /// Uncentered weighted R-squared of the through-origin line.
    pub r_squared: f64,
}

/// A fitted parameter sweep with its pooled statistics. The phase trend
/// is summarized twice, as an inverse-variance pooled phase (the
/// constant model) and as a weighted straight line; the flat and linear
/// chi-squares differ by one degree of freedom, so their gap is the
/// model-comparison statistic.
#[derive(Debug, Clone)]
pub struct CampaignResult {
    /// Swept quantity: "t_free_s" or "peak_density_per_m3".
    pub parameter: String,
    pub values: Vec<f64>,
    pub fits: Vec<FitResult>,
    /// The difference fringe each fit consumed, index-aligned with `values`.
    pub data: Vec<FringeData>,
    pub pooled_phi: f64,
    pub pooled_phi_err: f64,
    /// Weighted line phi = intercept + slope * value.
    pub slope: f64,
    pub slope_err: f64,
    pub intercept: f64,
    pub intercept_err: f64,
    pub chi2_flat: f64,
    pub chi2_linear: f64,
    /// Contrast-versus-value line, filled by the density campaign.
    pub amplitude: Option<AmplitudeScaling>,
    pub warnings: Vec<String>,
}

impl CampaignResult {
    /// Evidence for a phase trend: chi-square drop from flat to linear,
    /// one degree of freedom.
    pub fn delta_chi2(&self) -> f64 {
        (self.chi2_flat - self.chi2_linear).max(0.0)
    }
}

/// Sweep the Ramsey free time. Each point rebuilds the launch so the
/// clouds still meet at the same fraction of the interrogation window,
/// synthesizes a fringe set there, and fits the difference fringe. A
/// collision phase stays flat across the sweep; an injected frequency
/// shift grows linearly, which is how the two are told apart.
pub fn campaign_phase_vs_t(
    setup: &ColliderSetup<'_>,
    template: &RamseySequence,
    protocol: &FringeProtocol,
    t_values: &[f64],
    injection: Injection,
) -> Result<CampaignResult> {
    protocol.validate()?;
    if t_values.len() < 2 {
        return Err(Error::parameter(format!(
            "free-time campaign needs at least two points, got {}",
            t_values.len()
        )));
    }
    if let Injection::FrequencyShift(d) = injection {
        if !d.is_finite() {
            return Err(Error::parameter(format!("injected frequency shift {d} is not finite")));
        }
    }
    let base = &setup.geometry.plan;
    let fraction = (setup.geometry.t_collide - setup.geometry.t_pulse1) / setup.geometry.t_ramsey;

    let mut fits = Vec::with_capacity(t_values.len());
    let mut sets = Vec::with_capacity(t_values.len());
    let mut warnings = Vec::new();
    for &t in t_values {
        let mut plan = LaunchPlan::for_interrogation_time(
            t,
            base.z_cavity,
            base.g,
            setup.geometry.v_r,
            fraction,
        )?;
        plan.z_detect = base.z_detect;
        plan.pulse_duration = base.pulse_duration;
        plan.v_sanity_band = base.v_sanity_band;
        plan.validate()?;
        let mut sub = setup.clone();
        sub.geometry = collision_geometry(&plan)?;
        let seq = RamseySequence { t_free: sub.geometry.t_ramsey, ..*template };

        let grid = protocol.grid(t);
        let driven: Vec<f64> = match injection {
            Injection::None => grid.clone(),
            Injection::FrequencyShift(d) => grid.iter().map(|nu| nu + d).collect(),
        };
        let set = synthesize_fringes(&sub, &seq, &driven, protocol.noise, protocol.reps)?;
        let points = grid
            .iter()
            .zip(set.difference())
            .map(|(&nu, (d, sigma))| (nu, d, sigma))
            .collect();
        let data = FringeData::new(seq.t_free, "difference", points)?;
        let fit = fit_fringe(&data)?;
        if fit.low_contrast() {
            warnings.push(format!("low contrast at t_free = {t:.4} s"));
        }
        fits.push(fit);
        sets.push(data);
    }
    finish_campaign("t_free_s", t_values.to_vec(), fits, sets, None, warnings)
}

/// Sweep the target density. Cloud 1's peak density and atom number are
/// scaled together so the cloud stays self-consistent; everything else,
/// including the sampling seed, is held fixed. With the scattering
/// probability well below one the fringe contrast is then exactly
/// linear in the density while the phase stays put.
pub fn campaign_phase_vs_density(
    setup: &ColliderSetup<'_>,
    template: &RamseySequence,
    protocol: &FringeProtocol,
    densities: &[f64],
) -> Result<CampaignResult> {
    protocol.validate()?;
    if densities.len() < 2 {
        return Err(Error::parameter(format!(
            "density campaign needs at least two points, got {}",
            densities.len()
        )));
    }
    for &n in densities {
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::parameter(format!(
                "campaign density must be positive and finite, got {n} per m^3; \
                 a target with no atoms scatters nothing"
            )));
        }
    }
    let base_peak = setup.cloud1.peak_density;
    let grid = protocol.grid(template.t_free);

    let mut fits = Vec::with_capacity(densities.len());
    let mut sets = Vec::with_capacity(densities.len());
    let mut warnings = Vec::new();
    for &n in densities {
        let mut sub = setup.clone();
        sub.cloud1.peak_density = n;
        sub.cloud1.atom_count = setup.cloud1.atom_count * n / base_peak;
        let set = synthesize_fringes(&sub, template, &grid, protocol.noise, protocol.reps)?;
        let data = FringeData::from_difference(&set)?;
        let fit = fit_fringe(&data)?;
        if fit.low_contrast() {
            warnings.push(format!("low contrast at peak density {n:.4e} per m^3"));
        }
        fits.push(fit);
        sets.push(data);
    }
    let amplitude = amplitude_line(densities, &fits);
    finish_campaign("peak_density_per_m3", densities.to_vec(), fits, sets, Some(amplitude), warnings)
}

fn amplitude_line(xs: &[f64], fits: &[FitResult]) -> AmplitudeScaling {
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&x, f) in xs.iter().zip(fits) {
        let w = 1.0 / (f.amp_err * f.amp_err).max(1e-300);
        sxx += w * x * x;
        sxy += w * x * f.amp;
        syy += w * f.amp * f.amp;
    }
    let slope = sxy / sxx;
    let mut rss = 0.0;
    for (&x, f) in xs.iter().zip(fits) {
        let w = 1.0 / (f.amp_err * f.amp_err).max(1e-300);
        let r = f.amp - slope * x;
        rss += w * r * r;
    }
    let r_squared = if syy > 0.0 { 1.0 - rss / syy } else { 0.0 };
    AmplitudeScaling { slope, slope_err: (1.0 / sxx).sqrt(), r_squared }
}

fn finish_campaign(
    parameter: &str,
    values: Vec<f64>,
    fits: Vec<FitResult>,
    data: Vec<FringeData>,
    amplitude: Option<AmplitudeScaling>,
    warnings: Vec<String>,
) -> Result<CampaignResult> {
    // phases live on a circle; points are expected to agree to well
    // under a turn, so each is moved to the branch nearest its
    // predecessor before any pooling
    let mut phis = Vec::with_capacity(fits.len());
    let mut prev = fits[0].phi;
    for f in &fits {
        let phi = prev + wrap_phase(f.phi - prev);
        phis.push(phi);
        prev = phi;
    }

    let (mut s, mut sx, mut sxx, mut sy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&x, (phi, f)) in values.iter().zip(phis.iter().zip(&fits)) {
        let w = 1.0 / (f.phi_err * f.phi_err).max(1e-300);
        s += w;
        sx += w * x;
        sxx += w * x * x;
        sy += w * phi;
        sxy += w * x * phi;
    }
    let pooled_phi = sy / s;
    let pooled_phi_err = (1.0 / s).sqrt();
    let det = s * sxx - sx * sx;
    if !(det > 0.0) {
        return Err(Error::Fit(
            "campaign points do not separate a slope; the swept values are degenerate".into(),
        ));
    }
    let slope = (s * sxy - sx * sy) / det;
    let intercept = (sxx * sy - sx * sxy) / det;
    let (mut chi2_flat, mut chi2_linear) = (0.0, 0.0);
    for (&x, (phi, f)) in values.iter().zip(phis.iter().zip(&fits)) {
        let w = 1.0 / (f.phi_err * f.phi_err).max(1e-300);
        let rf = phi - pooled_phi;
        let rl = phi - intercept - slope * x;
        chi2_flat += w * rf * rf;
        chi2_linear += w * rl * rl;
    }
    Ok(CampaignResult {
        parameter: parameter.into(),
        values,
        fits,
        data,
        pooled_phi: wrap_phase(pooled_phi),
        pooled_phi_err,
        slope,
        slope_err: (s / det).sqrt(),
        intercept,
        intercept_err: (sxx / det).sqrt(),
        chi2_flat,
        chi2_linear,
        amplitude,
        warnings,
    })
}

/// Convert a phase uncertainty into a scattering-length one, in meters.
/// At these energies each channel's phase shift is -k a, so a phase
/// resolved to sigma_phi pins a difference of scattering lengths to
/// sigma_phi / k.
pub fn sensitivity_to_scattering_length(sigma_phi: f64, k: f64) -> Result<f64> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::parameter(format!(
            "scattering-length sensitivity needs a positive wavenumber, got {k} per m"
        )));
    }
    if !(sigma_phi >= 0.0) || !sigma_phi.is_finite() {
        return Err(Error::parameter(format!(
            "phase uncertainty must be nonnegative and finite, got {sigma_phi} rad"
        )));
    }
    Ok(sigma_phi / k)
}

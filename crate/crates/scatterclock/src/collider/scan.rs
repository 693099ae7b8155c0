//! Full simulated measurements: velocity-class scans and Ramsey fringe
//! sets, with the clearing classes and Poisson counting noise of the
//! real sequence.
//!
//! Every observable is differential. A velocity scan subtracts the
//! early-clearing run (no collisions) and the matching background runs
//! from the late-clearing run, which removes the unscattered pedestal
//! and whatever survives the clearing push. A fringe set carries the
//! same four classes per detuning so the analysis can do the same
//! subtraction point by point.

use rand_distr::{Distribution, Poisson};

use super::detect::{detect, detect_fringe};
use super::events::{scatter_events, ScatterSummary};
use super::sample::{remnant_cloud, sample_clouds};
use super::{stream_rng, Clearing, ColliderSetup, Ensemble, STREAM_NOISE};
use crate::clock::RamseySequence;
use crate::error::{Error, Result};

/// One sampled collision: the prepared cloud before any scattering,
/// the same atoms after branch splitting, and the impurity that
/// survives the clearing push.
#[derive(Debug, Clone)]
pub struct PreparedRun {
    /// Cloud 2 as prepared, the early-clearing reference.
    pub unscattered: Ensemble,
    /// Both branches of every Cloud 2 atom after the collision.
    pub collided: Ensemble,
    /// Clearing-surviving Cloud 1 impurity.
    pub remnant: Ensemble,
    pub summary: ScatterSummary,
}

/// Sample, collide, and keep all three record classes of repetition
/// `rep`. Setup warnings are folded into the summary.
pub fn prepare_run(setup: &ColliderSetup, rep: u32) -> Result<PreparedRun> {
    let warnings = setup.validate()?;
    let (_, cloud2) = sample_clouds(setup, rep)?;
    let (collided, mut summary) = scatter_events(setup, &cloud2, rep)?;
    let remnant = remnant_cloud(setup, rep);
    summary.warnings.splice(0..0, warnings);
    Ok(PreparedRun { unscattered: cloud2, collided, remnant, summary })
}

/// A probe-velocity scan of all four clearing classes.
#[derive(Debug, Clone)]
pub struct VelocityScan {
    pub probe_vz: Vec<f64>,
    /// Late clearing: collisions happened.
    pub collisions: Vec<f64>,
    /// Early clearing: collisions suppressed.
    pub no_collisions: Vec<f64>,
    /// Background shots paired with each clearing class.
    pub bg_collisions: Vec<f64>,
    pub bg_no_collisions: Vec<f64>,
    /// (collisions - bg) - (no_collisions - bg), the scattered signal.
    pub difference: Vec<f64>,
    pub summary: ScatterSummary,
}

/// Scan the probe across `grid` (m/s, strictly ascending) and record
/// expected counts per class, Poisson-fuzzed when `noise` is set.
pub fn velocity_scan(setup: &ColliderSetup, grid: &[f64], noise: bool) -> Result<VelocityScan> {
    check_grid(grid, "probe velocity")?;
    let run = prepare_run(setup, 0)?;
    let n = grid.len();
    let mut scan = VelocityScan {
        probe_vz: grid.to_vec(),
        collisions: Vec::with_capacity(n),
        no_collisions: Vec::with_capacity(n),
        bg_collisions: Vec::with_capacity(n),
        bg_no_collisions: Vec::with_capacity(n),
        difference: Vec::with_capacity(n),
        summary: run.summary.clone(),
    };
    for (i, &v) in grid.iter().enumerate() {
        let mut det = setup.detection;
        det.probe_vz = v;
        det.clearing = Clearing::Late;
        let late = detect(setup, &run, &det, None)?;
        det.clearing = Clearing::Early;
        let early = detect(setup, &run, &det, None)?;
        det.clearing = Clearing::BackgroundOnly;
        let bg = detect(setup, &run, &det, None)?;
        let base = 4 * i as u64;
        let (late, early, bg_late, bg_early) = if noise {
            (
                poisson_draw(late, setup.seed, base),
                poisson_draw(early, setup.seed, base + 1),
                poisson_draw(bg, setup.seed, base + 2),
                poisson_draw(bg, setup.seed, base + 3),
            )
        } else {
            (late, early, bg, bg)
        };
        scan.collisions.push(late);
        scan.no_collisions.push(early);
        scan.bg_collisions.push(bg_late);
        scan.bg_no_collisions.push(bg_early);
        scan.difference.push((late - bg_late) - (early - bg_early));
    }
    Ok(scan)
}

/// Fringe measurements of the four clearing classes over a detuning
/// grid: per class, expected or Poisson-fuzzed counts averaged over
/// `reps` repetitions, with the statistical sigma of that average.
#[derive(Debug, Clone)]
pub struct FringeSet {
    pub t_free: f64,
    pub probe_vz: f64,
    pub detuning_hz: Vec<f64>,
    /// Late clearing, per detuning: (counts, sigma).
    pub scattered: Vec<(f64, f64)>,
    /// Early clearing.
    pub unscattered: Vec<(f64, f64)>,
    pub bg_late: Vec<(f64, f64)>,
    pub bg_early: Vec<(f64, f64)>,
    pub summary: ScatterSummary,
}

impl FringeSet {
    /// The four-way difference (scattered - bg_late) - (unscattered -
    /// bg_early) per detuning, with its propagated sigma.
    pub fn difference(&self) -> Vec<(f64, f64)> {
        self.scattered
            .iter()
            .zip(&self.unscattered)
            .zip(self.bg_late.iter().zip(&self.bg_early))
            .map(|((s, u), (bl, be))| {
                let d = (s.0 - bl.0) - (u.0 - be.0);
                let sigma =
                    (s.1 * s.1 + u.1 * u.1 + bl.1 * bl.1 + be.1 * be.1).sqrt();
                (d, sigma)
            })
            .collect()
    }
}

/// Synthesize fringe data: `reps` independent repetitions per class
/// and detuning, each with fresh atoms, Poisson-fuzzed when `noise` is
/// set. The template's pulse model, free time, and phase offset are
/// honored; its detuning is replaced by the grid.
pub fn synthesize_fringes(
    setup: &ColliderSetup,
    template: &RamseySequence,
    grid: &[f64],
    noise: bool,
    reps: u32,
) -> Result<FringeSet> {
    check_grid(grid, "detuning")?;
    if reps == 0 || reps > 255 {
        return Err(Error::config(format!(
            "repetitions must lie in 1..=255, got {reps}"
        )));
    }
    let n = grid.len();
    // class order: scattered, unscattered, bg_late, bg_early
    let mut sums = vec![vec![0.0f64; n]; 4];
    let mut summary = ScatterSummary::default();
    for rep in 0..reps {
        let run = prepare_run(setup, rep)?;
        if rep == 0 {
            summary = run.summary.clone();
        }
        let mut det = setup.detection;
        det.clearing = Clearing::Late;
        let late = detect_fringe(setup, &run, &det, template, grid)?;
        det.clearing = Clearing::Early;
        let early = detect_fringe(setup, &run, &det, template, grid)?;
        det.clearing = Clearing::BackgroundOnly;
        let bg = detect_fringe(setup, &run, &det, template, grid)?;
        for j in 0..n {
            let expected = [late[j], early[j], bg[j], bg[j]];
            for (class, sum) in sums.iter_mut().enumerate() {
                let index = (class * n + j) as u64;
                sum[j] += if noise {
                    poisson_draw_rep(expected[class], setup.seed, rep, index)
                } else {
                    expected[class]
                };
            }
        }
    }
    let reduce = |sum: &[f64]| -> Vec<(f64, f64)> {
        sum.iter()
            .map(|&s| {
                let mean = s / reps as f64;
                let sigma = if noise { s.sqrt().max(1.0) / reps as f64 } else { 1.0 };
                (mean, sigma)
            })
            .collect()
    };
    Ok(FringeSet {
        t_free: template.t_free,
        probe_vz: setup.detection.probe_vz,
        detuning_hz: grid.to_vec(),
        scattered: reduce(&sums[0]),
        unscattered: reduce(&sums[1]),
        bg_late: reduce(&sums[2]),
        bg_early: reduce(&sums[3]),
        summary,
    })
}

fn check_grid(grid: &[f64], what: &str) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::parameter(format!("{what} grid is empty")));
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::parameter(format!("{what} grid contains non-finite values")));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::parameter(format!("{what} grid must be strictly ascending")));
    }
    Ok(())
}

fn poisson_draw(lambda: f64, seed: u64, index: u64) -> f64 {
    poisson_draw_rep(lambda, seed, 0, index)
}

fn poisson_draw_rep(lambda: f64, seed: u64, rep: u32, index: u64) -> f64 {
    if lambda <= 0.0 {
        return 0.0;
    }
    let mut rng = stream_rng(seed, STREAM_NOISE, rep as u64, index);
    Poisson::new(lambda).expect("positive finite mean").sample(&mut rng)
}

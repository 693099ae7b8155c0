//! Tabulated phase shifts delta_l(k) with linear interpolation in k.

use crate::error::{Error, Result};
use crate::scatter::numerov::{solve_phase_shift_with, SolverSettings};
use crate::scatter::potential::Potential;
use crate::scatter::squarewell::mod_pi_distance;

/// Adjacent tabulated phase shifts must differ by less than this for
/// linear interpolation to stay accurate; grid construction refines (or
/// rejects) anything coarser.
pub const MAX_ADJACENT_STEP: f64 = 0.01;

/// Phase shifts on a strictly increasing k grid, one row per partial
/// wave l = 0..=l_max. Rows hold a continuous branch along k; values are
/// therefore not individually reduced to (-pi, pi], only anchored there
/// at the first grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseShiftTable {
    k_grid: Vec<f64>,
    delta: Vec<Vec<f64>>,
}

impl PhaseShiftTable {
    /// Build from explicit values. `delta[l][i]` pairs with `k_grid[i]`.
    pub fn from_deltas(k_grid: Vec<f64>, delta: Vec<Vec<f64>>) -> Result<Self> {
        if k_grid.is_empty() {
            return Err(Error::parameter("phase shift table needs at least one k point"));
        }
        if delta.is_empty() {
            return Err(Error::parameter("phase shift table needs at least the l = 0 row"));
        }
        for (i, &k) in k_grid.iter().enumerate() {
            if !(k > 0.0) || !k.is_finite() {
                return Err(Error::parameter(format!("k_grid[{i}] = {k:e} must be > 0 and finite")));
            }
            if i > 0 && !(k > k_grid[i - 1]) {
                return Err(Error::parameter(format!(
                    "k_grid must be strictly increasing, violated at index {i}"
                )));
            }
        }
        for (l, row) in delta.iter().enumerate() {
            if row.len() != k_grid.len() {
                return Err(Error::parameter(format!(
                    "delta row l = {l} has {} entries for {} k points",
                    row.len(),
                    k_grid.len()
                )));
            }
            for (i, &d) in row.iter().enumerate() {
                if !d.is_finite() {
                    return Err(Error::parameter(format!("delta[{l}][{i}] is not finite")));
                }
                if i > 0 {
                    let step = (d - row[i - 1]).abs();
                    if step >= MAX_ADJACENT_STEP {
                        return Err(Error::parameter(format!(
                            "delta[{l}] jumps by {step:.3} rad between k = {:e} and {:e}; \
                             grid too coarse for linear interpolation (limit {MAX_ADJACENT_STEP})",
                            k_grid[i - 1],
                            k_grid[i]
                        )));
                    }
                }
            }
        }
        Ok(PhaseShiftTable { k_grid, delta })
    }

    /// Constant phase shifts per partial wave over [k_min, k_max],
    /// the natural way to inject a prescribed set of deltas.
    pub fn constant(deltas_by_l: &[f64], k_min: f64, k_max: f64, n_points: usize) -> Result<Self> {
        if deltas_by_l.is_empty() {
            return Err(Error::parameter("need at least the l = 0 phase shift"));
        }
        if !(k_min > 0.0) || !(k_max > k_min) || n_points < 2 {
            return Err(Error::parameter(format!(
                "bad constant-table grid: k_min = {k_min:e}, k_max = {k_max:e}, n = {n_points}"
            )));
        }
        let k_grid = log_grid(k_min, k_max, n_points);
        let delta = deltas_by_l.iter().map(|&d| vec![d; n_points]).collect();
        PhaseShiftTable::from_deltas(k_grid, delta)
    }

    /// Solve a potential on a log-spaced grid over [k_min, k_max],
    /// inserting midpoints until adjacent phase shifts differ by less
    /// than the interpolation limit, and unwrapping each row into a
    /// continuous branch.
    pub fn solve(
        potential: &Potential,
        k_min: f64,
        k_max: f64,
        n_points: usize,
        l_max: u32,
    ) -> Result<Self> {
        Self::solve_with(potential, k_min, k_max, n_points, l_max, &SolverSettings::default())
    }

    pub fn solve_with(
        potential: &Potential,
        k_min: f64,
        k_max: f64,
        n_points: usize,
        l_max: u32,
        settings: &SolverSettings,
    ) -> Result<Self> {
        if !(k_min > 0.0) || !(k_max > k_min) || n_points < 2 {
            return Err(Error::parameter(format!(
                "bad solve grid: k_min = {k_min:e}, k_max = {k_max:e}, n = {n_points}"
            )));
        }
        let solve_all = |k: f64| -> Result<Vec<f64>> {
            (0..=l_max)
                .map(|l| solve_phase_shift_with(potential, k, l, settings))
                .collect()
        };

        let base = log_grid(k_min, k_max, n_points);
        let mut points: Vec<(f64, Vec<f64>)> = Vec::with_capacity(n_points);
        for &k in &base {
            points.push((k, solve_all(k)?));
        }

        // Midpoint refinement in log k until every partial wave steps by
        // less than the interpolation limit between neighbors. Distances
        // are taken on the mod-pi circle because each solve carries an
        // arbitrary pi branch.
        let mut refined: Vec<(f64, Vec<f64>)> = Vec::with_capacity(points.len());
        let mut iter = points.into_iter();
        let mut lo = iter.next().expect("nonempty");
        for hi in iter {
            refined.push(lo.clone());
            refine_interval(&lo, &hi, 0, &solve_all, &mut refined)?;
            lo = hi;
        }
        refined.push(lo);

        // Unwrap each l row into a continuous branch anchored at the
        // first grid point.
        let k_grid: Vec<f64> = refined.iter().map(|(k, _)| *k).collect();
        let mut delta = vec![Vec::with_capacity(k_grid.len()); (l_max + 1) as usize];
        for (l, row) in delta.iter_mut().enumerate() {
            let mut prev = refined[0].1[l];
            row.push(prev);
            for point in &refined[1..] {
                let next = prev + mod_pi_distance(point.1[l], prev);
                row.push(next);
                prev = next;
            }
        }
        PhaseShiftTable::from_deltas(k_grid, delta)
    }

    pub fn l_max(&self) -> u32 {
        (self.delta.len() - 1) as u32
    }

    pub fn k_min(&self) -> f64 {
        self.k_grid[0]
    }

    pub fn k_max(&self) -> f64 {
        *self.k_grid.last().expect("nonempty")
    }

    pub fn k_grid(&self) -> &[f64] {
        &self.k_grid
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.delta
    }

    fn check_range(&self, k: f64) -> Result<()> {
        if !k.is_finite() || k < self.k_min() || k > self.k_max() {
            return Err(Error::OutOfRange { k, k_min: self.k_min(), k_max: self.k_max() });
        }
        Ok(())
    }

    /// Linearly interpolated delta_l(k). k must lie inside the grid.
    pub fn delta_at(&self, l: u32, k: f64) -> Result<f64> {
        if l > self.l_max() {
            return Err(Error::parameter(format!(
                "l = {l} exceeds table l_max = {}",
                self.l_max()
            )));
        }
        self.check_range(k)?;
        let row = &self.delta[l as usize];
        if self.k_grid.len() == 1 {
            return Ok(row[0]);
        }
        let idx = match self.k_grid.binary_search_by(|probe| probe.total_cmp(&k)) {
            Ok(i) => return Ok(row[i]),
            Err(i) => i.clamp(1, self.k_grid.len() - 1),
        };
        let (k0, k1) = (self.k_grid[idx - 1], self.k_grid[idx]);
        let t = (k - k0) / (k1 - k0);
        Ok(row[idx - 1] + t * (row[idx] - row[idx - 1]))
    }

    /// All partial-wave phase shifts at one k.
    pub fn deltas_at(&self, k: f64) -> Result<Vec<f64>> {
        (0..=self.l_max()).map(|l| self.delta_at(l, k)).collect()
    }

    /// Render the table as CSV: header `k_per_m,l,delta_rad`, rows
    /// sorted by (l, k), 17 significant digits so a written table
    /// reloads bit-for-bit.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("k_per_m,l,delta_rad\n");
        for (l, row) in self.delta.iter().enumerate() {
            for (k, d) in self.k_grid.iter().zip(row) {
                out.push_str(&format!("{k:.16e},{l},{d:.16e}\n"));
            }
        }
        out
    }

    /// Parse a table written by [`PhaseShiftTable::to_csv_string`].
    /// Blank lines and lines starting with `#` are skipped; partial
    /// waves must be contiguous from l = 0 and share one k grid.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: String| Error::format("phase-shift CSV", format!("line {line}: {msg}"));
        let mut rows: Vec<(f64, u32, f64)> = Vec::new();
        let mut saw_header = false;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if !saw_header {
                if trimmed != "k_per_m,l,delta_rad" {
                    return Err(bad(line, format!("expected header k_per_m,l,delta_rad, got {trimmed:?}")));
                }
                saw_header = true;
                continue;
            }
            let mut fields = trimmed.split(',');
            let (Some(ks), Some(ls), Some(ds), None) =
                (fields.next(), fields.next(), fields.next(), fields.next())
            else {
                return Err(bad(line, "expected exactly three comma-separated fields".into()));
            };
            let k: f64 = ks.trim().parse().map_err(|e| bad(line, format!("k_per_m {ks:?}: {e}")))?;
            let l: u32 = ls.trim().parse().map_err(|e| bad(line, format!("l {ls:?}: {e}")))?;
            let d: f64 = ds.trim().parse().map_err(|e| bad(line, format!("delta_rad {ds:?}: {e}")))?;
            rows.push((k, l, d));
        }
        if !saw_header {
            return Err(Error::format("phase-shift CSV", "no header line found"));
        }
        if rows.is_empty() {
            return Err(Error::format("phase-shift CSV", "no data rows"));
        }
        let l_max = rows.iter().map(|r| r.1).max().expect("nonempty");
        let mut per_l: Vec<Vec<(f64, f64)>> = vec![Vec::new(); (l_max + 1) as usize];
        for &(k, l, d) in &rows {
            per_l[l as usize].push((k, d));
        }
        for row in &mut per_l {
            row.sort_by(|a, b| a.0.total_cmp(&b.0));
        }
        let k_grid: Vec<f64> = per_l[0].iter().map(|p| p.0).collect();
        let mut delta = Vec::with_capacity(per_l.len());
        for (l, row) in per_l.into_iter().enumerate() {
            if row.len() != k_grid.len() || row.iter().zip(&k_grid).any(|(p, &k)| p.0 != k) {
                return Err(Error::format(
                    "phase-shift CSV",
                    format!("partial wave l = {l} does not cover the same k grid as l = 0"),
                ));
            }
            delta.push(row.into_iter().map(|p| p.1).collect());
        }
        PhaseShiftTable::from_deltas(k_grid, delta)
    }
}

fn log_grid(k_min: f64, k_max: f64, n: usize) -> Vec<f64> {
    let (ln0, ln1) = (k_min.ln(), k_max.ln());
    (0..n)
        .map(|i| {
            if i == n - 1 {
                k_max
            } else {
                (ln0 + (ln1 - ln0) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

const MAX_REFINE_DEPTH: u32 = 36;

fn refine_interval(
    lo: &(f64, Vec<f64>),
    hi: &(f64, Vec<f64>),
    depth: u32,
    solve_all: &dyn Fn(f64) -> Result<Vec<f64>>,
    out: &mut Vec<(f64, Vec<f64>)>,
) -> Result<()> {
    let needs_split = lo
        .1
        .iter()
        .zip(&hi.1)
        .any(|(&a, &b)| mod_pi_distance(b, a).abs() >= MAX_ADJACENT_STEP);
    if !needs_split {
        return Ok(());
    }
    if depth >= MAX_REFINE_DEPTH {
        let l_bad = lo
            .1
            .iter()
            .zip(&hi.1)
            .position(|(&a, &b)| mod_pi_distance(b, a).abs() >= MAX_ADJACENT_STEP)
            .unwrap_or(0);
        return Err(Error::Solver {
            k: lo.0,
            l: l_bad as u32,
            msg: format!(
                "phase shift varies too rapidly near k = {:e} (refinement depth {MAX_REFINE_DEPTH} exhausted)",
                lo.0
            ),
        });
    }
    let k_mid = (lo.0 * hi.0).sqrt();
    let mid = (k_mid, solve_all(k_mid)?);
    refine_interval(lo, &mid, depth + 1, solve_all, out)?;
    out.push(mid.clone());
    refine_interval(&mid, hi, depth + 1, solve_all, out)?;
    Ok(())
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Interaction model for a single collision channel.
///
/// Depths and strengths are positive numbers; the square well is
/// attractive, V(r) = -depth for r < radius, and the Lennard-Jones form
/// is V(r) = c12/r^12 - c6/r^6.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum PotentialKind {
    SquareWell {
        /// Well depth V0 >= 0, J.
        depth: f64,
        /// Well radius R > 0, m.
        radius: f64,
    },
    LennardJones {
        /// Repulsive coefficient C12 > 0, J m^12.
        c12: f64,
        /// Attractive coefficient C6 > 0, J m^6.
        c6: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Potential {
    pub kind: PotentialKind,
    /// Reduced mass of the colliding pair, kg.
    pub reduced_mass: f64,
}

impl Potential {
    pub fn square_well(depth: f64, radius: f64, reduced_mass: f64) -> Result<Self> {
        let p = Potential { kind: PotentialKind::SquareWell { depth, radius }, reduced_mass };
        p.validate()?;
        Ok(p)
    }

    pub fn lennard_jones(c12: f64, c6: f64, reduced_mass: f64) -> Result<Self> {
        let p = Potential { kind: PotentialKind::LennardJones { c12, c6 }, reduced_mass };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.reduced_mass > 0.0) || !self.reduced_mass.is_finite() {
            return Err(Error::parameter(format!(
                "reduced_mass must be positive and finite, got {:e}",
                self.reduced_mass
            )));
        }
        match self.kind {
            PotentialKind::SquareWell { depth, radius } => {
                if !(depth >= 0.0) || !depth.is_finite() {
                    return Err(Error::parameter(format!(
                        "square well depth must be >= 0 and finite, got {depth:e}"
                    )));
                }
                if !(radius > 0.0) || !radius.is_finite() {
                    return Err(Error::parameter(format!(
                        "square well radius must be > 0 and finite, got {radius:e}"
                    )));
                }
            }
            PotentialKind::LennardJones { c12, c6 } => {
                if !(c12 > 0.0) || !c12.is_finite() {
                    return Err(Error::parameter(format!(
                        "Lennard-Jones c12 must be > 0 and finite, got {c12:e}"
                    )));
                }
                if !(c6 > 0.0) || !c6.is_finite() {
                    return Err(Error::parameter(format!(
                        "Lennard-Jones c6 must be > 0 and finite, got {c6:e}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// V(r), J.
    pub fn v(&self, r: f64) -> f64 {
        match self.kind {
            PotentialKind::SquareWell { depth, radius } => {
                if r < radius {
                    -depth
                } else {
                    0.0
                }
            }
            PotentialKind::LennardJones { c12, c6 } => {
                let r6 = r.powi(6);
                c12 / (r6 * r6) - c6 / r6
            }
        }
    }

    /// Outer radius beyond which the potential is negligible compared to
    /// energy `e`: exact for the square well, |V| <= rel_tol * e for the
    /// Lennard-Jones tail.
    pub fn range(&self, e: f64, rel_tol: f64) -> f64 {
        match self.kind {
            PotentialKind::SquareWell { radius, .. } => radius,
            PotentialKind::LennardJones { c6, .. } => {
                // tail is -c6/r^6
                let r_tail = (c6 / (rel_tol * e)).powf(1.0 / 6.0);
                r_tail.max(self.lj_geometry().map(|g| 2.0 * g.r_minimum).unwrap_or(0.0))
            }
        }
    }

    /// Position and depth of the Lennard-Jones minimum, plus the inner
    /// starting radius on the repulsive wall where V equals
    /// `wall_factor` times the well depth. None for other kinds.
    pub fn lj_geometry(&self) -> Option<LjGeometry> {
        match self.kind {
            PotentialKind::LennardJones { c12, c6 } => {
                let r_minimum = (2.0 * c12 / c6).powf(1.0 / 6.0);
                let depth = c6 * c6 / (4.0 * c12);
                Some(LjGeometry { r_minimum, depth })
            }
            _ => None,
        }
    }

    /// Inner integration start for the radial equation.
    ///
    /// The square well is regular at the origin, so integration starts
    /// at r = 0. The Lennard-Jones wall is climbed to where
    /// V = wall_factor * depth; the wavefunction there is deep in the
    /// forbidden region and is taken as zero.
    pub fn inner_start(&self, wall_factor: f64) -> f64 {
        match self.kind {
            PotentialKind::SquareWell { .. } => 0.0,
            PotentialKind::LennardJones { c12, c6 } => {
                // Solve c12/r^12 - c6/r^6 = wall_factor * depth for the wall root.
                // With x = 1/r^6: c12 x^2 - c6 x - wall_factor*depth = 0.
                let depth = c6 * c6 / (4.0 * c12);
                let disc = c6 * c6 + 4.0 * c12 * wall_factor * depth;
                let x = (c6 + disc.sqrt()) / (2.0 * c12);
                x.powf(-1.0 / 6.0)
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LjGeometry {
    /// Radius of the potential minimum, m.
    pub r_minimum: f64,
    /// Well depth |V(r_minimum)|, J.
    pub depth: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::cs_pair_reduced_mass;

    #[test]
    fn rejects_bad_parameters() {
        let mu = cs_pair_reduced_mass();
        assert!(Potential::square_well(-1e-28, 5e-9, mu).is_err());
        assert!(Potential::square_well(1e-28, 0.0, mu).is_err());
        assert!(Potential::square_well(1e-28, 5e-9, 0.0).is_err());
        assert!(Potential::square_well(f64::NAN, 5e-9, mu).is_err());
        assert!(Potential::lennard_jones(0.0, 1e-77, mu).is_err());
        assert!(Potential::lennard_jones(1e-129, -1e-77, mu).is_err());
    }

    #[test]
    fn lennard_jones_geometry() {
        let mu = cs_pair_reduced_mass();
        let c6 = 2.0e-77;
        let c12 = 7.4e-129;
        let p = Potential::lennard_jones(c12, c6, mu).unwrap();
        let g = p.lj_geometry().unwrap();
        // dV/dr = 0 at the minimum
        let eps = g.r_minimum * 1e-7;
        let d = (p.v(g.r_minimum + eps) - p.v(g.r_minimum - eps)) / (2.0 * eps);
        assert!(d.abs() < g.depth / g.r_minimum * 1e-5);
        assert!((p.v(g.r_minimum) + g.depth).abs() < g.depth * 1e-12);
        // the wall start sits where V = 100 * depth
        let r0 = p.inner_start(100.0);
        assert!((p.v(r0) - 100.0 * g.depth).abs() < 100.0 * g.depth * 1e-9);
        assert!(r0 < g.r_minimum);
    }
}

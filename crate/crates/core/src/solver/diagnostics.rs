use serde::Serialize;

use super::cost::CostMatrix;
use super::objective::{Plan, PotentialPair};
use crate::entropy::{DiscreteMeasure, EntropyFunction};
use crate::error::{Error, Result};

/// Checks on the balanced transport problem between the linearized marginals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OtOptimalityReport {
    pub mass0: f64,
    pub mass1: f64,
    /// `|rho~0| - |rho~1|`, zero at an exact optimum.
    pub mass_difference: f64,
    /// `max |C[i,j] - z0[i] - z1[j]|` over plan entries of at least `min_mass`.
    pub slackness: Option<f64>,
}

/// Linearized marginals `rho~_i = F_i*'(-z_i) rho_i` with an optimality report.
///
/// When `plan` is given, complementary slackness is scored on entries that
/// carry at least `min_mass`.
pub fn linearized_marginals(
    zp: &PotentialPair,
    rho0: &DiscreteMeasure,
    rho1: &DiscreteMeasure,
    f0: EntropyFunction,
    f1: EntropyFunction,
    plan: Option<(&Plan, &CostMatrix, f64)>,
) -> Result<(DiscreteMeasure, DiscreteMeasure, OtOptimalityReport)> {
    if zp.z0.len() != rho0.len() || zp.z1.len() != rho1.len() {
        return Err(Error::invalid("potential lengths do not match the supports"));
    }
    let lin = |z: &[f64], rho: &DiscreteMeasure, f: EntropyFunction| -> Result<DiscreteMeasure> {
        let m = z
            .iter()
            .zip(&rho.masses)
            .map(|(&z, &m)| if m > 0.0 { f.conjugate_derivative(-z) * m } else { 0.0 })
            .collect();
        rho.with_masses(m)
    };
    let t0 = lin(&zp.z0, rho0, f0)?;
    let t1 = lin(&zp.z1, rho1, f1)?;
    let slackness = match plan {
        None => None,
        Some((p, c, min_mass)) => {
            if p.gamma.dim() != (rho0.len(), rho1.len()) || c.shape() != p.gamma.dim() {
                return Err(Error::invalid("plan or cost shape does not match the supports"));
            }
            let mut worst: f64 = 0.0;
            for ((i, j), &g) in p.gamma.indexed_iter() {
                if g >= min_mass {
                    worst = worst.max((c.get(i, j) - zp.z0[i] - zp.z1[j]).abs());
                }
            }
            Some(worst)
        }
    };
    let (mass0, mass1) = (t0.mass(), t1.mass());
    Ok((t0, t1, OtOptimalityReport { mass0, mass1, mass_difference: mass0 - mass1, slackness }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{Point, Space};

    #[test]
    fn zero_potentials_keep_the_marginals() {
        let s = Space::circle();
        let r = DiscreteMeasure::new(s, vec![Point::angle(0.0), Point::angle(1.0)], vec![0.4, 1.1]).unwrap();
        let zp = PotentialPair { z0: vec![0.0; 2], z1: vec![0.0; 2] };
        let kl = EntropyFunction::Kl;
        let (t0, t1, rep) = linearized_marginals(&zp, &r, &r, kl, kl, None).unwrap();
        assert_eq!(t0, r);
        assert_eq!(t1, r);
        assert_eq!(rep.mass_difference, 0.0);
        assert_eq!(rep.slackness, None);
    }
}

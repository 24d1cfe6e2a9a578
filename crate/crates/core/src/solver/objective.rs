use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::cost::CostMatrix;
use crate::entropy::{DiscreteMeasure, EntropyFunction};
use crate::error::{Error, Result};

/// Default slack allowed in `z0[i] + z1[j] <= C[i,j]`.
pub const FEAS_TOL: f64 = 1e-9;

/// Dual potentials on the two supports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialPair {
    pub z0: Vec<f64>,
    pub z1: Vec<f64>,
}

/// Transport plan `gamma[i, j]` between atoms of the two supports.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub gamma: Array2<f64>,
}

impl Plan {
    pub fn zeros(m0: usize, m1: usize) -> Self {
        Plan { gamma: Array2::zeros((m0, m1)) }
    }

    pub fn marginal0(&self) -> Vec<f64> {
        self.gamma.rows().into_iter().map(|r| r.sum()).collect()
    }

    pub fn marginal1(&self) -> Vec<f64> {
        self.gamma.columns().into_iter().map(|c| c.sum()).collect()
    }

    pub fn mass(&self) -> f64 {
        self.gamma.sum()
    }

    /// Entries above `threshold` as `(i, j, mass)`.
    pub fn nonzeros(&self, threshold: f64) -> Vec<(usize, usize, f64)> {
        self.gamma.indexed_iter().filter(|(_, &g)| g > threshold).map(|((i, j), &g)| (i, j, g)).collect()
    }
}

/// `a + b` where `+inf + -inf` counts as `-inf` (the pair never binds).
fn pair_sum(a: f64, b: f64) -> f64 {
    let s = a + b;
    if s.is_nan() {
        f64::NEG_INFINITY
    } else {
        s
    }
}

/// `max (z0[i] + z1[j] - C[i,j])` over finite cost entries; `-inf` if none.
pub fn max_violation(zp: &PotentialPair, c: &CostMatrix) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for ((i, j), &cij) in c.values.indexed_iter() {
        if cij.is_finite() {
            worst = worst.max(pair_sum(zp.z0[i], zp.z1[j]) - cij);
        }
    }
    worst
}

fn check_shapes(zp: &PotentialPair, rho0: &DiscreteMeasure, rho1: &DiscreteMeasure) -> Result<()> {
    if zp.z0.len() != rho0.len() || zp.z1.len() != rho1.len() {
        return Err(Error::invalid("potential lengths do not match the supports"));
    }
    Ok(())
}

/// Dual objective `-sum F0*(-z0) rho0 - sum F1*(-z1) rho1`.
///
/// Atoms without mass do not contribute. The pair must satisfy
/// `z0 + z1 <= C + feas_tol`.
pub fn dual_objective(
    zp: &PotentialPair,
    rho0: &DiscreteMeasure,
    rho1: &DiscreteMeasure,
    f0: EntropyFunction,
    f1: EntropyFunction,
    c: &CostMatrix,
    feas_tol: f64,
) -> Result<f64> {
    check_shapes(zp, rho0, rho1)?;
    if c.shape() != (rho0.len(), rho1.len()) {
        return Err(Error::invalid("cost matrix shape does not match the supports"));
    }
    let v = max_violation(zp, c);
    if v > feas_tol {
        return Err(Error::Feasibility { max_violation: v });
    }
    Ok(dual_value_unchecked(&zp.z0, &zp.z1, &rho0.masses, &rho1.masses, f0, f1))
}

pub(crate) fn dual_value_unchecked(
    z0: &[f64],
    z1: &[f64],
    m0: &[f64],
    m1: &[f64],
    f0: EntropyFunction,
    f1: EntropyFunction,
) -> f64 {
    let side = |z: &[f64], m: &[f64], f: EntropyFunction| -> f64 {
        z.iter().zip(m).filter(|(_, &m)| m > 0.0).map(|(&z, &m)| -f.conjugate(-z) * m).sum()
    };
    side(z0, m0, f0) + side(z1, m1, f1)
}

/// Primal objective `D_F0(gamma_0 | rho0) + D_F1(gamma_1 | rho1) + <C, gamma>`.
///
/// Mass on infinite-cost entries makes the value infinite.
pub fn primal_objective(
    plan: &Plan,
    rho0: &DiscreteMeasure,
    rho1: &DiscreteMeasure,
    f0: EntropyFunction,
    f1: EntropyFunction,
    c: &CostMatrix,
) -> Result<f64> {
    if plan.gamma.dim() != (rho0.len(), rho1.len()) || c.shape() != plan.gamma.dim() {
        return Err(Error::invalid("plan, cost and supports have mismatched shapes"));
    }
    Ok(primal_value_unchecked(&plan.gamma, &rho0.masses, &rho1.masses, f0, f1, c))
}

pub(crate) fn primal_value_unchecked(
    gamma: &Array2<f64>,
    m0: &[f64],
    m1: &[f64],
    f0: EntropyFunction,
    f1: EntropyFunction,
    c: &CostMatrix,
) -> f64 {
    let g0: Vec<f64> = gamma.rows().into_iter().map(|r| r.sum()).collect();
    let g1: Vec<f64> = gamma.columns().into_iter().map(|r| r.sum()).collect();
    let mut transport = 0.0;
    for (&g, &cij) in gamma.iter().zip(c.values.iter()) {
        if g > 0.0 {
            transport += g * cij;
        }
    }
    f0.divergence_aligned(&g0, m0) + f1.divergence_aligned(&g1, m1) + transport
}

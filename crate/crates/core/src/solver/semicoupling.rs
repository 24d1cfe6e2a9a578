//! Semi-couplings and the lifted cone cost.

use std::f64::consts::FRAC_PI_2;

use ndarray::Array2;

use crate::cone::sigma;
use crate::entropy::DiscreteMeasure;
use crate::error::{Error, Result};
use crate::manifold::{distance_unchecked, Point, Space};

pub const SEMICOUPLING_MAX_ATOMS: usize = 3;

/// `(gamma0, gamma1)` with row sums of `gamma0` equal to `rho0` and column
/// sums of `gamma1` equal to `rho1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SemiCoupling {
    pub gamma0: Array2<f64>,
    pub gamma1: Array2<f64>,
}

/// `sum_ij sigma(gamma0[i,j], gamma1[i,j], d(x_i, y_j))`.
pub fn semicoupling_value(sc: &SemiCoupling, space: &Space, supp0: &[Point], supp1: &[Point]) -> Result<f64> {
    let shape = (supp0.len(), supp1.len());
    if sc.gamma0.dim() != shape || sc.gamma1.dim() != shape {
        return Err(Error::invalid("semi-coupling shape does not match the supports"));
    }
    let len = space.coord_len();
    if supp0.iter().chain(supp1).any(|p| p.len() != len) {
        return Err(Error::invalid("support point does not match the space dimension"));
    }
    let mut total = 0.0;
    for ((i, j), &g0) in sc.gamma0.indexed_iter() {
        total += sigma(g0, sc.gamma1[[i, j]], distance_unchecked(space, &supp0[i], &supp1[j]));
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemiCouplingResult {
    pub coupling: SemiCoupling,
    pub value: f64,
    /// Sup-norm change of the last sweep.
    pub stationarity: f64,
    pub sweeps: usize,
}

/// Minimizes the lifted cone cost over semi-couplings of tiny measures.
///
/// Since `sum gamma0 + sum gamma1` is fixed, this maximizes
/// `sum w_ij sqrt(gamma0 gamma1)` with `w = cos(min(d, pi/2))`. Each block has
/// a closed-form maximizer by Cauchy-Schwarz: row `i` of `gamma0` is
/// proportional to `w^2 gamma1` on that row, and symmetrically for columns.
pub fn solve_semicoupling_small(rho0: &DiscreteMeasure, rho1: &DiscreteMeasure) -> Result<SemiCouplingResult> {
    let (m0, m1) = (rho0.len(), rho1.len());
    if m0 > SEMICOUPLING_MAX_ATOMS || m1 > SEMICOUPLING_MAX_ATOMS {
        return Err(Error::SizeExceeded(format!(
            "semi-coupling solver takes at most {SEMICOUPLING_MAX_ATOMS} atoms per side, got {m0} x {m1}"
        )));
    }
    if rho0.space != rho1.space {
        return Err(Error::invalid("measures live on different spaces"));
    }
    let space = rho0.space;
    if m0 == 0 || m1 == 0 {
        let sc = SemiCoupling { gamma0: Array2::zeros((m0, m1)), gamma1: Array2::zeros((m0, m1)) };
        return Ok(SemiCouplingResult { coupling: sc, value: rho0.mass() + rho1.mass(), stationarity: 0.0, sweeps: 0 });
    }
    let w2 = Array2::from_shape_fn((m0, m1), |(i, j)| {
        let w = distance_unchecked(&space, &rho0.points[i], &rho1.points[j]).min(FRAC_PI_2).cos().max(0.0);
        w * w
    });
    let mut g0 = Array2::from_shape_fn((m0, m1), |(i, _)| rho0.masses[i] / m1 as f64);
    let mut g1 = Array2::from_shape_fn((m0, m1), |(_, j)| rho1.masses[j] / m0 as f64);
    let mut stationarity = f64::INFINITY;
    let mut sweeps = 0;
    while sweeps < 1_000_000 {
        sweeps += 1;
        let mut change: f64 = 0.0;
        for i in 0..m0 {
            let s: f64 = (0..m1).map(|j| w2[[i, j]] * g1[[i, j]]).sum();
            if s > 0.0 {
                for j in 0..m1 {
                    let new = rho0.masses[i] * w2[[i, j]] * g1[[i, j]] / s;
                    change = change.max((new - g0[[i, j]]).abs());
                    g0[[i, j]] = new;
                }
            }
        }
        for j in 0..m1 {
            let s: f64 = (0..m0).map(|i| w2[[i, j]] * g0[[i, j]]).sum();
            if s > 0.0 {
                for i in 0..m0 {
                    let new = rho1.masses[j] * w2[[i, j]] * g0[[i, j]] / s;
                    change = change.max((new - g1[[i, j]]).abs());
                    g1[[i, j]] = new;
                }
            }
        }
        stationarity = change;
        if change < 1e-15 {
            break;
        }
    }
    let coupling = SemiCoupling { gamma0: g0, gamma1: g1 };
    let value = semicoupling_value(&coupling, &space, &rho0.points, &rho1.points)?;
    Ok(SemiCouplingResult { coupling, value, stationarity, sweeps })
}

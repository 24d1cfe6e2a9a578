//! Monge couples `(phi, lambda)` built from a dual potential on a 1D grid,
//! and the Monge-Ampere equation they solve.
//!
//! For `c = -log cos^2 d` the c-exponential is
//! `c-exp_x(v) = exp_x(atan(|v|/2) v/|v|)`, so on a 1D grid
//! `phi(x) = x - atan(z'(x)/2)` and `lambda = e^-z sqrt(1 + z'^2/4)`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::cone::cone_distance_sq_from_base;
use crate::entropy::DiscreteMeasure;
use crate::error::{Error, Result};
use crate::manifold::{
    distance_unchecked, exp_map, grid_gradient, grid_second_derivative, Grid, GridDensity, Point, Space,
};

/// Snap threshold for mass splitting, so exact grid shifts stay exact.
const SNAP: f64 = 1e-9;

/// Transport map and mass factor sampled at the nodes of a 1D grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportCouple {
    pub grid: Grid,
    /// Image coordinate of every node (an angle on the circle).
    pub phi: Vec<f64>,
    /// Mass factor, strictly positive.
    pub lam: Vec<f64>,
}

impl TransportCouple {
    pub fn new(grid: Grid, phi: Vec<f64>, lam: Vec<f64>) -> Result<Self> {
        grid.validate()?;
        if phi.len() != grid.n || lam.len() != grid.n {
            return Err(Error::invalid("couple arrays do not match the grid size"));
        }
        if phi.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("couple map has non-finite entries"));
        }
        if lam.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(Error::invalid("couple mass factor must be finite and positive"));
        }
        Ok(TransportCouple { grid, phi, lam })
    }

    pub fn identity(grid: Grid) -> Self {
        TransportCouple { grid, phi: grid.nodes(), lam: vec![1.0; grid.n] }
    }

    pub fn space(&self) -> Space {
        self.grid.space
    }

    pub fn phi_point(&self, i: usize) -> Point {
        if self.grid.is_periodic() {
            Point::angle(self.phi[i])
        } else {
            Point(vec![self.phi[i]])
        }
    }

    /// Base distance `d(x_i, phi(x_i))` at every node.
    pub fn displacements(&self) -> Vec<f64> {
        let space = self.space();
        (0..self.grid.n).map(|i| distance_unchecked(&space, &[self.grid.node(i)], &[self.phi[i]])).collect()
    }
}

/// `exp_x(atan(|p|/2) p/|p|)`; the identity at `p = 0`.
pub fn c_exp(space: &Space, x: &[f64], p: &[f64]) -> Result<Point> {
    let n = space.tangent_norm(p);
    if !n.is_finite() {
        return Err(Error::invalid("c_exp needs a finite tangent vector"));
    }
    if n == 0.0 {
        return Ok(Point(x.to_vec()));
    }
    let step = (0.5 * n).atan() / n;
    let v: Vec<f64> = p.iter().map(|c| c * step).collect();
    exp_map(space, x, &v)
}

/// Monge couple of a potential `z` sampled on the grid of `rho0`.
pub fn monge_couple_from_potential(z: &[f64], rho0: &GridDensity) -> Result<TransportCouple> {
    let grid = rho0.grid;
    if z.len() != grid.n {
        return Err(Error::invalid("potential length does not match the grid"));
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("potential must be finite on the grid"));
    }
    let dz = grid_gradient(&grid, z)?;
    let mut phi = Vec::with_capacity(grid.n);
    let mut lam = Vec::with_capacity(grid.n);
    for i in 0..grid.n {
        let x = grid.node(i) - (0.5 * dz[i]).atan();
        phi.push(if grid.is_periodic() { crate::manifold::wrap_angle(x) } else { x });
        lam.push((-z[i]).exp() * (1.0 + 0.25 * dz[i] * dz[i]).sqrt());
    }
    TransportCouple::new(grid, phi, lam)
}

/// Image of `lambda^2 rho0` under `phi`, as particles and rebinned on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Pushforward {
    pub particles: DiscreteMeasure,
    pub density: GridDensity,
}

/// How transported mass is put back on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rebin {
    /// The cell `[x_i - h/2, x_i + h/2]` is mapped to the interval between the
    /// images of its endpoints and its mass spread uniformly there, then
    /// collected by overlap with the target cells. Converges with the grid for smooth maps.
    #[default]
    Cells,
    /// Every particle is split linearly between the two enclosing nodes.
    /// Conservative, but aliases at order `|phi' - 1|` independently of `h`.
    Linear,
}

/// `phi_*(lambda^2 rho0)`, node `i` carrying mass `lambda_i^2 rho0_i h`,
/// rebinned with [`Rebin::Cells`]. Total mass is preserved exactly.
pub fn pushforward(tc: &TransportCouple, rho0: &GridDensity) -> Result<Pushforward> {
    pushforward_with(tc, rho0, Rebin::Cells)
}

pub fn pushforward_with(tc: &TransportCouple, rho0: &GridDensity, rebin: Rebin) -> Result<Pushforward> {
    if tc.grid != rho0.grid {
        return Err(Error::invalid("couple and density live on different grids"));
    }
    let grid = tc.grid;
    let h = grid.spacing;
    // Work with densities in units of cells so the factor h cancels exactly.
    let weights: Vec<f64> = (0..grid.n).map(|i| tc.lam[i] * tc.lam[i] * rho0.values[i]).collect();
    let binned = match rebin {
        Rebin::Linear => split_linear(tc, &weights),
        Rebin::Cells => remap_cells(tc, &weights),
    };
    let points: Vec<Point> = (0..grid.n).map(|i| tc.phi_point(i)).collect();
    let particles = DiscreteMeasure::new(grid.space, points, weights.iter().map(|w| w * h).collect())?;
    let density = GridDensity::new(grid, binned)?;
    Ok(Pushforward { particles, density })
}

fn snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() < SNAP {
        r
    } else {
        x
    }
}

fn split_linear(tc: &TransportCouple, weights: &[f64]) -> Vec<f64> {
    let grid = tc.grid;
    let mut binned = vec![0.0; grid.n];
    for (i, &m) in weights.iter().enumerate() {
        let (k, k1, w) = grid.locate(tc.phi[i]);
        let w = if w < SNAP {
            0.0
        } else if w > 1.0 - SNAP {
            1.0
        } else {
            w
        };
        binned[k] += (1.0 - w) * m;
        binned[k1] += w * m;
    }
    binned
}

/// Displacement of every node in cell units, wrapped to a half turn on the circle.
fn displacement_cells(tc: &TransportCouple) -> Vec<f64> {
    let grid = tc.grid;
    (0..grid.n)
        .map(|i| {
            let d = tc.phi[i] - grid.node(i);
            let d = if grid.is_periodic() { crate::manifold::wrap_signed(d) } else { d };
            d / grid.spacing
        })
        .collect()
}

/// Displacement difference `disp[b] - disp[a]`, wrapped on the circle.
fn jump(disp: &[f64], a: usize, b: usize, periodic: bool) -> f64 {
    let d = disp[b] - disp[a];
    if periodic {
        let n = disp.len() as f64;
        d - n * (d / n).round()
    } else {
        d
    }
}

fn remap_cells(tc: &TransportCouple, weights: &[f64]) -> Vec<f64> {
    let grid = tc.grid;
    let n = grid.n;
    let periodic = grid.is_periodic();
    let disp = displacement_cells(tc);
    let idx = |k: isize| -> Option<usize> {
        if periodic {
            Some(k.rem_euclid(n as isize) as usize)
        } else if (0..n as isize).contains(&k) {
            Some(k as usize)
        } else {
            None
        }
    };
    let raw = |a: isize, b: isize| -> Option<f64> { Some(jump(&disp, idx(a)?, idx(b)?, periodic)) };
    // Neighbours whose displacements differ by a full cell or more are treated
    // as separated by a discontinuity, and the cell then moves rigidly on that
    // side, unless the jump is fractional and matches an adjacent jump (a steep
    // smooth stretch). Rearrangements only produce whole-cell jumps.
    let smooth = |a: isize, b: isize| -> Option<f64> {
        let d = raw(a, b)?;
        if d.abs() < 1.0 - 1e-6 {
            return Some(d);
        }
        if (d - d.round()).abs() < 1e-6 {
            return None;
        }
        let agrees = |e: Option<f64>| e.is_some_and(|e| (e - d).abs() < 0.5);
        (agrees(raw(a - 1, a)) || agrees(raw(b, b + 1))).then_some(d)
    };
    // Displacement at the boundary between node k and k + 1, relative to disp[k].
    let boundary = |k: isize| -> Option<f64> {
        let d1 = smooth(k, k + 1)?;
        match (smooth(k - 1, k), smooth(k + 1, k + 2)) {
            (Some(d0), Some(d2)) => Some((d0 + 8.0 * d1 - d2) / 16.0),
            _ => Some(0.5 * d1),
        }
    };
    let mut binned = vec![0.0; n];
    // Node j owns the cell [j, j + 1) in shifted cell coordinates s = index + 1/2.
    for i in 0..n {
        let k = i as isize;
        let left = match (boundary(k - 1), smooth(k - 1, k)) {
            (Some(b), Some(d)) => b - d,
            _ => 0.0,
        };
        let right = boundary(k).unwrap_or(0.0);
        let lo = snap(i as f64 + disp[i] + left);
        let hi = snap(i as f64 + 1.0 + disp[i] + right);
        let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        if !periodic {
            a = a.clamp(0.0, n as f64);
            b = b.clamp(0.0, n as f64);
        }
        let m = weights[i];
        let len = b - a;
        if len <= 0.0 {
            let c = a.floor() as isize;
            let j = if periodic { c.rem_euclid(n as isize) } else { c.clamp(0, n as isize - 1) };
            binned[j as usize] += m;
            continue;
        }
        let mut c = a.floor();
        while c < b {
            let overlap = b.min(c + 1.0) - a.max(c);
            if overlap > 0.0 {
                let j = if periodic { (c as isize).rem_euclid(n as isize) } else { (c as isize).min(n as isize - 1) };
                binned[j as usize] += m * overlap / len;
            }
            c += 1.0;
        }
    }
    binned
}

/// Riemann sum of `d_C((phi, lambda), (x, 1))^2 rho0`.
pub fn monge_objective(tc: &TransportCouple, rho0: &GridDensity) -> Result<f64> {
    if tc.grid != rho0.grid {
        return Err(Error::invalid("couple and density live on different grids"));
    }
    let d = tc.displacements();
    Ok((0..tc.grid.n).map(|i| cone_distance_sq_from_base(tc.lam[i], 1.0, d[i]) * rho0.values[i]).sum::<f64>()
        * tc.grid.spacing)
}

/// Pointwise Monge-Ampere residual on the circle,
/// `-z'' + c_xx - |c_xy| e^{-2z} (1 + z'^2/4) f / g(phi)`,
/// with `c_xx = |c_xy| = 2 / cos^2 d` at `d = d(x, phi(x))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaResidual {
    pub residual: Vec<f64>,
    /// Nodes whose displacement is within 1e-6 of `pi/2` (residual not meaningful).
    pub near_cut: Vec<usize>,
}

impl MaResidual {
    pub fn max_abs(&self) -> f64 {
        self.residual
            .iter()
            .enumerate()
            .filter(|(i, _)| !self.near_cut.contains(i))
            .map(|(_, r)| r.abs())
            .fold(0.0, f64::max)
    }

    pub fn mean_abs(&self) -> f64 {
        let kept: Vec<f64> = self
            .residual
            .iter()
            .enumerate()
            .filter(|(i, _)| !self.near_cut.contains(i))
            .map(|(_, r)| r.abs())
            .collect();
        if kept.is_empty() {
            0.0
        } else {
            kept.iter().sum::<f64>() / kept.len() as f64
        }
    }
}

pub fn ma_residual(z: &[f64], f: &GridDensity, g: &GridDensity) -> Result<MaResidual> {
    let grid = f.grid;
    if !grid.is_periodic() {
        return Err(Error::invalid("the Monge-Ampere residual is implemented on the circle"));
    }
    if g.grid != grid || z.len() != grid.n {
        return Err(Error::invalid("potential and densities must share one grid"));
    }
    let dz = grid_gradient(&grid, z)?;
    let d2z = grid_second_derivative(&grid, z)?;
    let mut residual = Vec::with_capacity(grid.n);
    let mut near_cut = Vec::new();
    for i in 0..grid.n {
        let u = (0.5 * dz[i]).atan();
        let phi = grid.node(i) - u;
        let gphi = grid.interpolate(&g.values, phi);
        if gphi < 1e-12 {
            return Err(Error::Singularity { node: i });
        }
        if FRAC_PI_2 - u.abs() < 1e-6 {
            near_cut.push(i);
        }
        let cs = u.cos();
        let cxx = 2.0 / (cs * cs);
        let jac = (-2.0 * z[i]).exp() * (1.0 + 0.25 * dz[i] * dz[i]) * f.values[i] / gphi;
        residual.push(-d2z[i] + cxx - cxx * jac);
    }
    Ok(MaResidual { residual, near_cut })
}

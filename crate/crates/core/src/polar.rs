//! Generalized automorphisms `(phi, lambda)` of the cone over the circle,
//! their action `phi_*(lambda^2 rho)` on densities and the polar factorization
//! `(phi, lambda) = (phi_0, lambda_0) . (s, sqrt Jac s)` through the volume measure.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cone::cone_distance_sq_from_base;
use crate::entropy::{DiscreteMeasure, EntropyFunction};
use crate::error::{Error, Result};
use crate::manifold::{distance_unchecked, wrap_angle, wrap_signed, Grid, GridDensity};
use crate::monge::{monge_couple_from_potential, monge_objective, pushforward, TransportCouple};
use crate::solver::{cost_matrix, debias_potentials, solve_entropic, CostSpec, SolverOptions};

/// Map and mass factor sampled on a uniform grid. No injectivity is required.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedAutomorphism {
    pub grid: Grid,
    pub phi: Vec<f64>,
    pub lam: Vec<f64>,
}

impl GeneralizedAutomorphism {
    pub fn new(grid: Grid, phi: Vec<f64>, lam: Vec<f64>) -> Result<Self> {
        let tc = TransportCouple::new(grid, phi, lam)?;
        let phi = if grid.is_periodic() { tc.phi.into_iter().map(wrap_angle).collect() } else { tc.phi };
        Ok(GeneralizedAutomorphism { grid, phi, lam: tc.lam })
    }

    pub fn identity(grid: Grid) -> Self {
        GeneralizedAutomorphism { grid, phi: grid.nodes(), lam: vec![1.0; grid.n] }
    }

    /// `theta -> theta + c`, `lambda = 1`.
    pub fn rotation(grid: Grid, c: f64) -> Result<Self> {
        GeneralizedAutomorphism::new(grid, grid.nodes().iter().map(|x| x + c).collect(), vec![1.0; grid.n])
    }

    /// Node `i` sent to node `perm[i]` then rotated by `c`, `lambda = 1`.
    /// Volume preserving for any permutation.
    pub fn rearrangement(grid: Grid, perm: &[usize], c: f64) -> Result<Self> {
        if perm.len() != grid.n {
            return Err(Error::invalid("permutation length does not match the grid"));
        }
        let mut seen = vec![false; grid.n];
        for &k in perm {
            if k >= grid.n || std::mem::replace(&mut seen[k], true) {
                return Err(Error::invalid("not a permutation of the grid nodes"));
            }
        }
        GeneralizedAutomorphism::new(grid, perm.iter().map(|&k| grid.node(k) + c).collect(), vec![1.0; grid.n])
    }

    pub fn from_couple(tc: &TransportCouple) -> Self {
        GeneralizedAutomorphism { grid: tc.grid, phi: tc.phi.clone(), lam: tc.lam.clone() }
    }

    pub fn as_couple(&self) -> TransportCouple {
        TransportCouple { grid: self.grid, phi: self.phi.clone(), lam: self.lam.clone() }
    }

    /// Value of `phi` at an arbitrary point, by cubic interpolation of the
    /// displacement field.
    fn phi_at(&self, y: f64) -> f64 {
        let grid = self.grid;
        let periodic = grid.is_periodic();
        let disp = |k: usize| {
            let d = self.phi[k] - grid.node(k);
            if periodic {
                wrap_signed(d)
            } else {
                d
            }
        };
        match self.stencil(y) {
            Stencil::Node(k) => self.phi[k],
            Stencil::Cells(ks, t) => {
                let d0 = disp(ks[1]);
                // unwrap the stencil relative to the second node
                let rel = |k: usize| if periodic { wrap_signed(disp(k) - d0) } else { disp(k) - d0 };
                let v = [rel(ks[0]), 0.0, rel(ks[2]), rel(ks[3])];
                let x = y + d0 + cubic(v, t);
                if periodic {
                    wrap_angle(x)
                } else {
                    x
                }
            }
        }
    }

    fn lam_at(&self, y: f64) -> f64 {
        match self.stencil(y) {
            Stencil::Node(k) => self.lam[k],
            Stencil::Cells(ks, t) => {
                let l0 = self.lam[ks[1]];
                let v = [self.lam[ks[0]] - l0, 0.0, self.lam[ks[2]] - l0, self.lam[ks[3]] - l0];
                // cubic overshoot could leave the positive half line
                (l0 + cubic(v, t)).max(f64::MIN_POSITIVE)
            }
        }
    }

    fn stencil(&self, y: f64) -> Stencil {
        let grid = self.grid;
        let n = grid.n;
        let (k, k1, t) = grid.locate(y);
        if t < 1e-12 {
            return Stencil::Node(k);
        }
        if t > 1.0 - 1e-12 {
            return Stencil::Node(k1);
        }
        if grid.is_periodic() {
            Stencil::Cells([(k + n - 1) % n, k, k1, (k1 + 1) % n], t)
        } else if n < 4 {
            Stencil::Cells([k, k, k1, k1], t)
        } else {
            // shift the four-point stencil inside the interval
            let s = k.saturating_sub(1).min(n - 4);
            Stencil::Cells([s, s + 1, s + 2, s + 3], t + (k as f64 - (s + 1) as f64))
        }
    }
}

enum Stencil {
    Node(usize),
    /// Four consecutive nodes and the offset of `y` from the second one, in cells.
    Cells([usize; 4], f64),
}

/// Cubic through `(-1, v0), (0, v1), (1, v2), (2, v3)` evaluated at `t`,
/// for `v1 = 0` (so constants are reproduced exactly).
fn cubic(v: [f64; 4], t: f64) -> f64 {
    let [a, _, b, c] = v;
    // Lagrange basis with the middle node removed
    let la = -t * (t - 1.0) * (t - 2.0) / 6.0;
    let lb = (t + 1.0) * t * (t - 2.0) / -2.0;
    let lc = (t + 1.0) * t * (t - 1.0) / 6.0;
    a * la + b * lb + c * lc
}

/// Semigroup law `(phi1, lam1) . (phi2, lam2) = (phi1 o phi2, (lam1 o phi2) lam2)`.
pub fn compose(g1: &GeneralizedAutomorphism, g2: &GeneralizedAutomorphism) -> Result<GeneralizedAutomorphism> {
    if g1.grid != g2.grid {
        return Err(Error::invalid("automorphisms live on different grids"));
    }
    let phi = g2.phi.iter().map(|&y| g1.phi_at(y)).collect();
    let lam = g2.phi.iter().zip(&g2.lam).map(|(&y, l2)| g1.lam_at(y) * l2).collect();
    Ok(GeneralizedAutomorphism { grid: g1.grid, phi, lam })
}

/// `pi[(phi, lam), rho] = phi_*(lam^2 rho)`.
pub fn act(g: &GeneralizedAutomorphism, rho: &GridDensity) -> Result<GridDensity> {
    Ok(pushforward(&g.as_couple(), rho)?.density)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeCheck {
    pub preserving: bool,
    pub tv_error: f64,
}

/// Volume of the circle grid: density 1, total mass `2 pi`.
fn volume(grid: Grid) -> Result<GridDensity> {
    GridDensity::new(grid, vec![1.0; grid.n])
}

/// TV distance between `act(g, vol)` and `vol`.
pub fn is_volume_preserving(g: &GeneralizedAutomorphism, tol: f64) -> Result<VolumeCheck> {
    let vol = volume(g.grid)?;
    let tv_error = act(g, &vol)?.tv_distance(&vol)?;
    Ok(VolumeCheck { preserving: tv_error <= tol, tv_error })
}

/// `sum_i d_C((phi(x_i), lam(x_i)), (s(x_i), lam_s(x_i)))^2 h`.
pub fn projection_distance(g: &GeneralizedAutomorphism, s: &GeneralizedAutomorphism) -> Result<f64> {
    if g.grid != s.grid {
        return Err(Error::invalid("automorphisms live on different grids"));
    }
    let space = g.grid.space;
    Ok((0..g.grid.n)
        .map(|i| {
            let d = distance_unchecked(&space, &[g.phi[i]], &[s.phi[i]]);
            cone_distance_sq_from_base(g.lam[i], s.lam[i], d)
        })
        .sum::<f64>()
        * g.grid.spacing)
}

/// Random rotation composed with a random rearrangement made of transpositions
/// of nodes at most `reach` cells apart.
pub fn random_volume_preserving<R: Rng + ?Sized>(
    grid: Grid,
    reach: usize,
    rng: &mut R,
) -> Result<GeneralizedAutomorphism> {
    let n = grid.n;
    let mut perm: Vec<usize> = (0..n).collect();
    if reach >= n {
        perm.shuffle(rng);
    } else if reach > 0 {
        for _ in 0..n {
            let i = rng.gen_range(0..n);
            let j = (i + rng.gen_range(1..=reach)) % n;
            perm.swap(i, j);
        }
    }
    let c = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
    GeneralizedAutomorphism::rearrangement(grid, &perm, c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarOptions {
    pub solver: SolverOptions,
    /// Final regularization as a multiple of the grid spacing.
    pub eps_per_spacing: f64,
    /// Remove the entropic offset of the potentials before building couples.
    pub debias: bool,
    /// Defaults to `5/n + 1e-3`.
    pub tol_vol: Option<f64>,
    /// Defaults to `5/n + 1e-3`.
    pub tol_rec: Option<f64>,
}

impl Default for PolarOptions {
    fn default() -> Self {
        PolarOptions {
            solver: SolverOptions { max_iter: 100_000, tol: 1e-10, ..SolverOptions::default() },
            eps_per_spacing: 0.03,
            debias: true,
            tol_vol: None,
            tol_rec: None,
        }
    }
}

pub fn default_tolerance(n: usize) -> f64 {
    5.0 / n as f64 + 1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarDiagnostics {
    /// TV distance between `act(stabilizer, vol)` and `vol`.
    pub tv_vol: f64,
    /// TV distance between the actions on `vol` of the reconstruction and of `g`.
    pub tv_rec: f64,
    /// `projection_distance` between the reconstruction and `g`.
    pub field_rec: f64,
    pub tol_vol: f64,
    pub tol_rec: f64,
    pub volume_preserving: bool,
    pub reconstructed: bool,
    /// `projection_distance(g, stabilizer)`.
    pub projection_distance: f64,
    pub monge_objective: f64,
    /// Dual value of the discrete problem between `vol` and `rho1`.
    pub wfr2: f64,
    pub epsilon: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarFactorization {
    pub monge_part: TransportCouple,
    pub stabilizer_part: GeneralizedAutomorphism,
    pub z0: Vec<f64>,
    pub z1: Vec<f64>,
    pub diagnostics: PolarDiagnostics,
}

/// Factor `g` as the Monge couple of `WFR(vol, act(g, vol))` composed with a
/// volume-preserving automorphism. The stabilizer is `(phi_1, lam_1) . g`,
/// with `(phi_1, lam_1)` the couple of the second potential.
pub fn polar_factorize(g: &GeneralizedAutomorphism, opts: &PolarOptions) -> Result<PolarFactorization> {
    let grid = g.grid;
    if !grid.is_periodic() {
        return Err(Error::invalid("polar factorization is implemented on the circle"));
    }
    let n = grid.n;
    let vol = volume(grid)?;
    let rho1 = act(g, &vol)?;
    if let Some(k) = rho1.values.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::Admissibility(format!("act(g, vol) vanishes at node {k}")));
    }
    let points = grid.points();
    let m0 = DiscreteMeasure::new(grid.space, points.clone(), vol.node_masses())?;
    let m1 = DiscreteMeasure::new(grid.space, points, rho1.node_masses())?;
    let c = cost_matrix(&grid.space, &CostSpec::wfr(), &m0.points, &m1.points)?;
    let eps = opts.eps_per_spacing * grid.spacing;
    let solver = opts.solver.with_eps_final(eps);
    let kl = EntropyFunction::Kl;
    let sol = solve_entropic(&m0, &m1, &c, kl, kl, &solver)?;
    if !sol.converged {
        return Err(Error::Numerical(format!(
            "solver did not converge in {} iterations (residual {:e})",
            sol.iterations, sol.residual
        )));
    }
    let pot = if opts.debias {
        debias_potentials(&sol.entropic_potentials, &m0.masses, &m1.masses, sol.epsilon_final)
    } else {
        sol.entropic_potentials.clone()
    };
    let (z0, z1) = (pot.z0, pot.z1);
    let monge_part = monge_couple_from_potential(&z0, &vol)?;
    let inverse = GeneralizedAutomorphism::from_couple(&monge_couple_from_potential(&z1, &rho1)?);
    let stabilizer = compose(&inverse, g)?;
    let rec = compose(&GeneralizedAutomorphism::from_couple(&monge_part), &stabilizer)?;

    let tol_vol = opts.tol_vol.unwrap_or_else(|| default_tolerance(n));
    let tol_rec = opts.tol_rec.unwrap_or_else(|| default_tolerance(n));
    let tv_vol = is_volume_preserving(&stabilizer, tol_vol)?.tv_error;
    let tv_rec = act(&rec, &vol)?.tv_distance(&rho1)?;
    let diagnostics = PolarDiagnostics {
        tv_vol,
        tv_rec,
        field_rec: projection_distance(&rec, g)?,
        tol_vol,
        tol_rec,
        volume_preserving: tv_vol <= tol_vol,
        reconstructed: tv_rec <= tol_rec,
        projection_distance: projection_distance(g, &stabilizer)?,
        monge_objective: monge_objective(&monge_part, &vol)?,
        wfr2: sol.dual_value,
        epsilon: sol.epsilon_final,
        iterations: sol.iterations,
    };
    Ok(PolarFactorization { monge_part, stabilizer_part: stabilizer, z0, z1, diagnostics })
}

//! Model base spaces: Euclidean space, the circle, round spheres of radius `R`
//! and the hyperboloid model of hyperbolic space.
//!
//! Points are stored in global coordinates so that every formula is chart
//! free: ambient vectors of norm `R` for spheres, the upper sheet of
//! `<x,x>_Minkowski = -1` for hyperbolic space, and a single angle in
//! `[0, 2pi)` for the circle.
//!
//! The module also carries uniform 1D grids (periodic on the circle, closed
//! intervals in Euclidean space) with second-order difference operators.

use std::f64::consts::{PI, TAU};
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for the on-manifold checks of stored points.
pub const POINT_TOL: f64 = 1e-12;
/// Tolerance for the tangency check `<v, p> = 0` on spheres.
pub const TANGENT_TOL: f64 = 1e-10;

/// A base space `M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Space {
    Euclidean {
        dim: usize,
    },
    /// Unit circle parametrized by angle.
    Circle,
    Sphere {
        dim: usize,
        radius: f64,
    },
    Hyperbolic {
        dim: usize,
    },
}

/// A point of a [`Space`] in the space's global coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(pub Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    /// Circle point at angle `theta`, reduced to `[0, 2pi)`.
    pub fn angle(theta: f64) -> Self {
        Point(vec![wrap_angle(theta)])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }
}

impl Deref for Point {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(v)
    }
}

/// Reduce an angle to `[0, 2pi)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Reduce an angle difference to `(-pi, pi]`.
pub fn wrap_signed(delta: f64) -> f64 {
    let t = (delta + PI).rem_euclid(TAU) - PI;
    if t <= -PI {
        t + TAU
    } else {
        t
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn minkowski(a: &[f64], b: &[f64]) -> f64 {
    -a[0] * b[0] + dot(&a[1..], &b[1..])
}

impl Space {
    pub fn circle() -> Self {
        Space::Circle
    }

    pub fn sphere(dim: usize, radius: f64) -> Self {
        Space::Sphere { dim, radius }
    }

    pub fn euclidean(dim: usize) -> Self {
        Space::Euclidean { dim }
    }

    pub fn hyperbolic(dim: usize) -> Self {
        Space::Hyperbolic { dim }
    }

    /// Intrinsic dimension.
    pub fn dim(&self) -> usize {
        match *self {
            Space::Circle => 1,
            Space::Euclidean { dim } | Space::Sphere { dim, .. } | Space::Hyperbolic { dim } => dim,
        }
    }

    /// Number of stored coordinates per point (and per tangent vector).
    pub fn coord_len(&self) -> usize {
        match *self {
            Space::Circle => 1,
            Space::Euclidean { dim } => dim,
            Space::Sphere { dim, .. } | Space::Hyperbolic { dim } => dim + 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Space::Circle => Ok(()),
            Space::Sphere { dim, radius } => {
                if dim == 0 {
                    return Err(Error::invalid("sphere dimension must be >= 1"));
                }
                if !(radius > 0.0 && radius.is_finite()) {
                    return Err(Error::invalid(format!("sphere radius must be positive, got {radius}")));
                }
                Ok(())
            }
            Space::Euclidean { dim } | Space::Hyperbolic { dim } => {
                if dim == 0 {
                    Err(Error::invalid("dimension must be >= 1"))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Diameter of the space (`+inf` for unbounded spaces).
    pub fn diameter(&self) -> f64 {
        match *self {
            Space::Circle => PI,
            Space::Sphere { radius, .. } => PI * radius,
            Space::Euclidean { .. } | Space::Hyperbolic { .. } => f64::INFINITY,
        }
    }

    /// Injectivity radius of the exponential map.
    pub fn injectivity_radius(&self) -> f64 {
        self.diameter()
    }

    /// Checks that `p` lies on the space, with the tolerance `tol` relative to the
    /// natural scale of the coordinates.
    pub fn check_point_with(&self, p: &[f64], tol: f64) -> Result<()> {
        if p.len() != self.coord_len() {
            return Err(Error::invalid(format!(
                "point has {} coordinates, space expects {}",
                p.len(),
                self.coord_len()
            )));
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("point has non-finite coordinates"));
        }
        match *self {
            Space::Sphere { radius, .. } => {
                let r = norm(p);
                if (r - radius).abs() > tol * radius {
                    return Err(Error::invalid(format!("sphere point has norm {r}, expected {radius}")));
                }
            }
            Space::Hyperbolic { .. } => {
                let q = minkowski(p, p);
                if (q + 1.0).abs() > tol * p[0].abs().max(1.0).powi(2) || p[0] <= 0.0 {
                    return Err(Error::invalid("point is not on the upper hyperboloid"));
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn check_point(&self, p: &[f64]) -> Result<()> {
        self.check_point_with(p, POINT_TOL)
    }

    /// Projects arbitrary coordinates onto the space (normalization for spheres,
    /// angle reduction for the circle).
    pub fn project_point(&self, p: &[f64]) -> Point {
        match *self {
            Space::Circle => Point::angle(p[0]),
            Space::Sphere { radius, .. } => {
                let n = norm(p);
                Point(p.iter().map(|x| x * radius / n).collect())
            }
            Space::Hyperbolic { .. } => {
                let spatial = norm(&p[1..]);
                let mut out = p.to_vec();
                out[0] = (1.0 + spatial * spatial).sqrt();
                Point(out)
            }
            Space::Euclidean { .. } => Point(p.to_vec()),
        }
    }

    /// Orthogonal projection of `v` onto the tangent space at `p`.
    pub fn project_tangent(&self, p: &[f64], v: &[f64]) -> Vec<f64> {
        match *self {
            Space::Sphere { radius, .. } => {
                let c = dot(p, v) / (radius * radius);
                v.iter().zip(p).map(|(vi, pi)| vi - c * pi).collect()
            }
            Space::Hyperbolic { .. } => {
                let c = minkowski(p, v);
                v.iter().zip(p).map(|(vi, pi)| vi + c * pi).collect()
            }
            _ => v.to_vec(),
        }
    }

    /// Riemannian norm of a tangent vector.
    pub fn tangent_norm(&self, v: &[f64]) -> f64 {
        match *self {
            Space::Hyperbolic { .. } => minkowski(v, v).max(0.0).sqrt(),
            _ => norm(v),
        }
    }

    /// Riemannian inner product of two tangent vectors.
    pub fn tangent_dot(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Space::Hyperbolic { .. } => minkowski(a, b),
            _ => dot(a, b),
        }
    }

    /// Orthonormal basis of the tangent space at `p` (Gram-Schmidt on the
    /// projected coordinate axes).
    pub fn tangent_basis(&self, p: &[f64]) -> Vec<Vec<f64>> {
        let m = self.coord_len();
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(self.dim());
        for k in 0..m {
            let mut e = vec![0.0; m];
            e[k] = 1.0;
            let mut v = self.project_tangent(p, &e);
            for b in &basis {
                let c = self.tangent_dot(&v, b);
                v.iter_mut().zip(b).for_each(|(vi, bi)| *vi -= c * bi);
            }
            let n = self.tangent_dot(&v, &v).max(0.0).sqrt();
            if n > 1e-8 {
                basis.push(v.iter().map(|x| x / n).collect());
            }
            if basis.len() == self.dim() {
                break;
            }
        }
        basis
    }

    fn check_tangent(&self, p: &[f64], v: &[f64]) -> Result<()> {
        if v.len() != self.coord_len() {
            return Err(Error::invalid(format!(
                "tangent vector has {} coordinates, space expects {}",
                v.len(),
                self.coord_len()
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("tangent vector has non-finite coordinates"));
        }
        match *self {
            Space::Sphere { radius, .. } => {
                let ip = dot(p, v);
                if ip.abs() > TANGENT_TOL * radius * norm(v).max(1.0) {
                    return Err(Error::invalid(format!("vector is not tangent: <v,p> = {ip:e}")));
                }
            }
            Space::Hyperbolic { .. } => {
                let ip = minkowski(p, v);
                if ip.abs() > TANGENT_TOL * p[0] * norm(v).max(1.0) {
                    return Err(Error::invalid(format!("vector is not tangent: <v,p>_M = {ip:e}")));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

fn check_pair(space: &Space, p: &[f64], q: &[f64]) -> Result<()> {
    space.check_point_with(p, 1e-9)?;
    space.check_point_with(q, 1e-9)
}

/// Geodesic distance `d(p, q)`.
pub fn geodesic_distance(space: &Space, p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != space.coord_len() || q.len() != space.coord_len() {
        return Err(Error::invalid("dimension mismatch in geodesic_distance"));
    }
    Ok(distance_unchecked(space, p, q))
}

/// Distance without validation; callers guarantee matching coordinate lengths.
pub(crate) fn distance_unchecked(space: &Space, p: &[f64], q: &[f64]) -> f64 {
    match *space {
        Space::Euclidean { .. } => p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
        Space::Circle => {
            let d = (p[0] - q[0]).abs().rem_euclid(TAU);
            d.min(TAU - d)
        }
        Space::Sphere { radius, .. } => {
            // 2 atan2(|p - q|, |p + q|) is accurate at both ends of [0, pi].
            let mut diff = 0.0;
            let mut sum = 0.0;
            for (a, b) in p.iter().zip(q) {
                diff += (a - b) * (a - b);
                sum += (a + b) * (a + b);
            }
            radius * 2.0 * diff.sqrt().atan2(sum.sqrt())
        }
        Space::Hyperbolic { .. } => {
            let dv: Vec<f64> = p.iter().zip(q).map(|(a, b)| a - b).collect();
            let chord = minkowski(&dv, &dv).max(0.0).sqrt();
            2.0 * (chord / 2.0).asinh()
        }
    }
}

/// Riemannian exponential `exp_p(v)`.
pub fn exp_map(space: &Space, p: &[f64], v: &[f64]) -> Result<Point> {
    space.check_point_with(p, 1e-9)?;
    space.check_tangent(p, v)?;
    Ok(exp_unchecked(space, p, v))
}

pub(crate) fn exp_unchecked(space: &Space, p: &[f64], v: &[f64]) -> Point {
    match *space {
        Space::Euclidean { .. } => Point(p.iter().zip(v).map(|(a, b)| a + b).collect()),
        Space::Circle => Point::angle(p[0] + v[0]),
        Space::Sphere { radius, .. } => {
            let n = norm(v);
            if n == 0.0 {
                return Point(p.to_vec());
            }
            let theta = n / radius;
            let (s, c) = theta.sin_cos();
            let out: Vec<f64> = p.iter().zip(v).map(|(pi, vi)| c * pi + s * radius * vi / n).collect();
            space.project_point(&out)
        }
        Space::Hyperbolic { .. } => {
            let n = minkowski(v, v).max(0.0).sqrt();
            if n == 0.0 {
                return Point(p.to_vec());
            }
            let out: Vec<f64> = p.iter().zip(v).map(|(pi, vi)| n.cosh() * pi + n.sinh() * vi / n).collect();
            space.project_point(&out)
        }
    }
}

/// Riemannian logarithm `log_p(q)`, the initial velocity of the minimizing
/// geodesic from `p` to `q` in unit time.
///
/// Fails with [`Error::Degenerate`] when `q` is on the cut locus of `p`.
pub fn log_map(space: &Space, p: &[f64], q: &[f64]) -> Result<Vec<f64>> {
    check_pair(space, p, q)?;
    match *space {
        Space::Euclidean { .. } => Ok(q.iter().zip(p).map(|(a, b)| a - b).collect()),
        Space::Circle => {
            let d = wrap_signed(q[0] - p[0]);
            if (d.abs() - PI).abs() <= 1e-12 {
                return Err(Error::Degenerate("antipodal points on the circle".into()));
            }
            Ok(vec![d])
        }
        Space::Sphere { radius, .. } => {
            let theta = distance_unchecked(space, p, q) / radius;
            if theta >= PI - 1e-12 {
                return Err(Error::Degenerate("antipodal points on the sphere".into()));
            }
            let c = dot(p, q) / (radius * radius);
            let u: Vec<f64> = q.iter().zip(p).map(|(qi, pi)| qi - c * pi).collect();
            let un = norm(&u);
            if un == 0.0 || theta == 0.0 {
                return Ok(vec![0.0; p.len()]);
            }
            Ok(u.iter().map(|x| radius * theta * x / un).collect())
        }
        Space::Hyperbolic { .. } => {
            let d = distance_unchecked(space, p, q);
            let c = minkowski(p, q);
            let u: Vec<f64> = q.iter().zip(p).map(|(qi, pi)| qi + c * pi).collect();
            let un = minkowski(&u, &u).max(0.0).sqrt();
            if un == 0.0 || d == 0.0 {
                return Ok(vec![0.0; p.len()]);
            }
            Ok(u.iter().map(|x| d * x / un).collect())
        }
    }
}

/// Uniform 1D grid: periodic on the circle, closed interval on the line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub space: Space,
    pub n: usize,
    pub start: f64,
    pub spacing: f64,
}

impl Grid {
    /// `n` equispaced angles `2 pi i / n`.
    pub fn circle(n: usize) -> Self {
        Grid { space: Space::Circle, n, start: 0.0, spacing: TAU / n as f64 }
    }

    /// `n` nodes spanning `[a, b]`, endpoints included.
    pub fn interval(a: f64, b: f64, n: usize) -> Self {
        Grid { space: Space::Euclidean { dim: 1 }, n, start: a, spacing: (b - a) / (n.max(2) - 1) as f64 }
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self.space, Space::Circle)
    }

    pub fn validate(&self) -> Result<()> {
        match self.space {
            Space::Circle | Space::Euclidean { dim: 1 } => {}
            _ => return Err(Error::invalid("grids live on the circle or a Euclidean interval")),
        }
        if self.n == 0 || !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(Error::invalid("grid needs n >= 1 and a positive spacing"));
        }
        Ok(())
    }

    pub fn node(&self, i: usize) -> f64 {
        self.start + i as f64 * self.spacing
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    pub fn point(&self, i: usize) -> Point {
        if self.is_periodic() {
            Point::angle(self.node(i))
        } else {
            Point(vec![self.node(i)])
        }
    }

    pub fn points(&self) -> Vec<Point> {
        (0..self.n).map(|i| self.point(i)).collect()
    }

    /// Lower node index and weight of the upper node for linear interpolation
    /// (or linear mass splitting) at coordinate `x`.
    pub fn locate(&self, x: f64) -> (usize, usize, f64) {
        if self.is_periodic() {
            let s = wrap_angle(x - self.start) / self.spacing;
            let k = (s.floor() as usize).min(self.n - 1);
            let w = (s - k as f64).clamp(0.0, 1.0);
            (k, (k + 1) % self.n, w)
        } else {
            let s = ((x - self.start) / self.spacing).clamp(0.0, (self.n - 1) as f64);
            let k = (s.floor() as usize).min(self.n.saturating_sub(2));
            let w = (s - k as f64).clamp(0.0, 1.0);
            (k, (k + 1).min(self.n - 1), w)
        }
    }

    /// Piecewise-linear interpolation of nodal values at `x`.
    pub fn interpolate(&self, values: &[f64], x: f64) -> f64 {
        let (k, k1, w) = self.locate(x);
        (1.0 - w) * values[k] + w * values[k1]
    }
}

/// Nonnegative density sampled on a [`Grid`]; node `i` carries mass
/// `values[i] * spacing`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDensity {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl GridDensity {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.n {
            return Err(Error::invalid(format!("expected {} grid values, got {}", grid.n, values.len())));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid(format!("density value at node {k} is negative or not finite")));
        }
        Ok(GridDensity { grid, values })
    }

    /// Density on the `n`-node circle grid from a function of the angle.
    pub fn on_circle(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let grid = Grid::circle(n);
        let values = grid.nodes().into_iter().map(f).collect();
        GridDensity::new(grid, values)
    }

    /// Constant density 1 on the circle; total mass `2 pi`.
    pub fn uniform_circle(n: usize) -> Self {
        GridDensity { grid: Grid::circle(n), values: vec![1.0; n] }
    }

    pub fn n(&self) -> usize {
        self.grid.n
    }

    pub fn node_masses(&self) -> Vec<f64> {
        self.values.iter().map(|v| v * self.grid.spacing).collect()
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.spacing
    }

    /// Total variation norm `|self - other|(M)` of the nodal masses.
    pub fn tv_distance(&self, other: &GridDensity) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::invalid("densities live on different grids"));
        }
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).sum::<f64>() * self.grid.spacing)
    }
}

/// First derivative of nodal values by second-order central differences;
/// one-sided second-order stencils at the ends of an interval.
pub fn grid_gradient(grid: &Grid, values: &[f64]) -> Result<Vec<f64>> {
    let n = grid.n;
    if n < 3 || values.len() != n {
        return Err(Error::invalid(format!(
            "grid_gradient needs n >= 3 matching values (n = {n}, len = {})",
            values.len()
        )));
    }
    let h = grid.spacing;
    let mut out = vec![0.0; n];
    if grid.is_periodic() {
        for i in 0..n {
            out[i] = (values[(i + 1) % n] - values[(i + n - 1) % n]) / (2.0 * h);
        }
    } else {
        out[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h);
        for i in 1..n - 1 {
            out[i] = (values[i + 1] - values[i - 1]) / (2.0 * h);
        }
        out[n - 1] = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * h);
    }
    Ok(out)
}

/// Second derivative of nodal values, second order (needs `n >= 4` on intervals).
pub fn grid_second_derivative(grid: &Grid, values: &[f64]) -> Result<Vec<f64>> {
    let n = grid.n;
    let min = if grid.is_periodic() { 3 } else { 4 };
    if n < min || values.len() != n {
        return Err(Error::invalid(format!("grid_second_derivative needs n >= {min} matching values")));
    }
    let h2 = grid.spacing * grid.spacing;
    let mut out = vec![0.0; n];
    if grid.is_periodic() {
        for i in 0..n {
            out[i] = (values[(i + 1) % n] - 2.0 * values[i] + values[(i + n - 1) % n]) / h2;
        }
    } else {
        out[0] = (2.0 * values[0] - 5.0 * values[1] + 4.0 * values[2] - values[3]) / h2;
        for i in 1..n - 1 {
            out[i] = (values[i + 1] - 2.0 * values[i] + values[i - 1]) / h2;
        }
        out[n - 1] = (2.0 * values[n - 1] - 5.0 * values[n - 2] + 4.0 * values[n - 3] - values[n - 4]) / h2;
    }
    Ok(out)
}

//! The cone `C(M) = M x R+` with metric `dr^2 + r^2 g`.
//!
//! Radial coordinates relate to masses through `m = r^2`. The squared cone
//! distance saturates once the base distance reaches `pi/2`: beyond that the
//! cheapest path goes through the apex.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{distance_unchecked, exp_map, norm, Point, Space};

/// A point `(x, r)` of the cone. All points with `r = 0` are the apex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConePoint {
    pub base: Point,
    pub r: f64,
}

impl ConePoint {
    pub fn new(base: impl Into<Point>, r: f64) -> Result<Self> {
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Error::invalid(format!("cone radius must be finite and >= 0, got {r}")));
        }
        Ok(ConePoint { base: base.into(), r })
    }

    /// Lift of a mass `m` sitting at `x`: radius `sqrt(m)`.
    pub fn from_mass(base: impl Into<Point>, mass: f64) -> Result<Self> {
        if !(mass >= 0.0) {
            return Err(Error::invalid(format!("mass must be >= 0, got {mass}")));
        }
        ConePoint::new(base, mass.sqrt())
    }

    pub fn is_apex(&self) -> bool {
        self.r == 0.0
    }

    /// Equality up to `tol`, treating every apex as the same point.
    pub fn approx_eq(&self, space: &Space, other: &ConePoint, tol: f64) -> bool {
        if self.is_apex() || other.is_apex() {
            return (self.r - other.r).abs() <= tol;
        }
        (self.r - other.r).abs() <= tol && distance_unchecked(space, &self.base, &other.base) <= tol
    }
}

/// Tangent vector at a cone point: angular speed `v_theta` along the unit
/// base direction `direction`, and radial speed `v_r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeTangent {
    pub v_theta: f64,
    pub v_r: f64,
    pub direction: Vec<f64>,
}

/// Cone distance together with its square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeDistance {
    pub distance: f64,
    pub squared: f64,
}

/// `r1^2 + r2^2 - 2 r1 r2 cos(min(d, pi/2))`, written as
/// `(r1 - r2)^2 + 4 r1 r2 sin^2(min(d, pi/2) / 2)` to stay nonnegative.
pub fn cone_distance_sq_from_base(r1: f64, r2: f64, base_distance: f64) -> f64 {
    let half = 0.5 * base_distance.min(FRAC_PI_2);
    let s = half.sin();
    (r1 - r2) * (r1 - r2) + 4.0 * r1 * r2 * s * s
}

pub fn cone_distance(space: &Space, c1: &ConePoint, c2: &ConePoint) -> Result<ConeDistance> {
    if c1.base.len() != space.coord_len() || c2.base.len() != space.coord_len() {
        return Err(Error::invalid("cone points do not live on the given space"));
    }
    let d = if c1.is_apex() || c2.is_apex() { 0.0 } else { distance_unchecked(space, &c1.base, &c2.base) };
    let squared = cone_distance_sq_from_base(c1.r, c2.r, d);
    Ok(ConeDistance { distance: squared.sqrt(), squared })
}

/// Squared cone cost between masses `a` at `x` and `b` at `y`.
///
/// One-homogeneous in `(a, b)`; constant in `d(x, y)` once it exceeds `pi/2`.
pub fn lift_masses(space: &Space, x: &[f64], a: f64, y: &[f64], b: f64) -> Result<f64> {
    if a < 0.0 || b < 0.0 {
        return Err(Error::invalid("masses must be nonnegative"));
    }
    if x.len() != space.coord_len() || y.len() != space.coord_len() {
        return Err(Error::invalid("dimension mismatch in lift_masses"));
    }
    Ok(sigma(a, b, distance_unchecked(space, x, y)))
}

/// Squared cone cost for masses at base distance `d`.
pub fn sigma(a: f64, b: f64, d: f64) -> f64 {
    let half = 0.5 * d.min(FRAC_PI_2);
    let s = half.sin();
    let (ra, rb) = (a.sqrt(), b.sqrt());
    (ra - rb) * (ra - rb) + 4.0 * ra * rb * s * s
}

/// Cone exponential: follow the geodesic from `c` with initial velocity `vt` for time `t`.
///
/// In the plane spanned by the base geodesic and the radial direction the
/// cone is flat, so with `alpha = v_r / r(0)`:
/// `r(t)^2 = r(0)^2 [(1 + alpha t)^2 + v_theta^2 t^2]` and
/// `theta(t) = atan(v_theta t / (1 + alpha t))`.
pub fn cone_exp(space: &Space, c: &ConePoint, t: f64, vt: &ConeTangent) -> Result<ConePoint> {
    if c.is_apex() {
        return Err(Error::Degenerate("cone exponential from the apex".into()));
    }
    let dn = norm(&vt.direction);
    if (dn - 1.0).abs() > 1e-10 {
        return Err(Error::invalid(format!("cone direction must be a unit vector, |u| = {dn}")));
    }
    let alpha = vt.v_r / c.r;
    let s = 1.0 + alpha * t;
    if s <= 0.0 {
        return Err(Error::BranchCut(s));
    }
    let wt = vt.v_theta * t;
    let r = c.r * (s * s + wt * wt).sqrt();
    let theta = wt.atan2(s);
    let step: Vec<f64> = vt.direction.iter().map(|u| theta * u).collect();
    let base = exp_map(space, &c.base, &step)?;
    ConePoint::new(base, r)
}

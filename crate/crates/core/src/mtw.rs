//! Ma-Trudinger-Wang analysis of radial costs `c = l(d)` on constant
//! curvature spaces.
//!
//! Coefficients follow the Lee-Li reduction with `h = (l')^-1`,
//! `A = 1/h'` and `B = s cot h`, `s / h` or `s coth h` (sphere, flat,
//! hyperbolic). A sphere of radius `R` is handled as the unit sphere with the
//! rescaled profile `l_R(s) = l(R s)`, so for the WFR cost
//! `A(s) = 2 R^2 + s^2 / 2`.
//!
//! Note: `A` is `1/h'`, not `1/h`; only the former reproduces the constant
//! coefficients on the spheres of radius 1 and 1/2 and the vanishing tensor of
//! the quadratic cost.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{distance_unchecked, exp_unchecked, Point, Space};

/// Profile of the cost in a space of unit curvature radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostProfile {
    /// `l(s) = -log cos^2 s`, finite for `s < pi/2`.
    Wfr,
    /// `l(s) = s^2 / 2`.
    Quadratic,
}

impl CostProfile {
    pub fn l(self, s: f64) -> f64 {
        match self {
            CostProfile::Wfr => {
                if s.abs() >= FRAC_PI_2 {
                    f64::INFINITY
                } else {
                    -2.0 * s.cos().ln()
                }
            }
            CostProfile::Quadratic => 0.5 * s * s,
        }
    }

    pub fn l_prime(self, s: f64) -> f64 {
        match self {
            CostProfile::Wfr => 2.0 * s.tan(),
            CostProfile::Quadratic => s,
        }
    }

    pub fn l_second(self, s: f64) -> f64 {
        match self {
            CostProfile::Wfr => 2.0 / s.cos().powi(2),
            CostProfile::Quadratic => 1.0,
        }
    }

    /// `(l')^-1`.
    pub fn h(self, s: f64) -> f64 {
        match self {
            CostProfile::Wfr => (0.5 * s).atan(),
            CostProfile::Quadratic => s,
        }
    }

    pub fn h_prime(self, s: f64) -> f64 {
        match self {
            CostProfile::Wfr => 2.0 / (4.0 + s * s),
            CostProfile::Quadratic => 1.0,
        }
    }

    pub fn h_second(self, s: f64) -> f64 {
        match self {
            CostProfile::Wfr => -4.0 * s / (4.0 + s * s).powi(2),
            CostProfile::Quadratic => 0.0,
        }
    }

    /// Largest distance with finite cost.
    fn singular_distance(self) -> f64 {
        match self {
            CostProfile::Wfr => FRAC_PI_2,
            CostProfile::Quadratic => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SpaceKind {
    Euclidean,
    Sphere { radius: f64 },
    Hyperbolic,
}

impl SpaceKind {
    fn scale(self) -> f64 {
        match self {
            SpaceKind::Sphere { radius } => radius,
            _ => 1.0,
        }
    }
}

/// Radial cost `l(R d_1)` on the unit-curvature model of `space_kind`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialCost {
    pub space_kind: SpaceKind,
    pub profile: CostProfile,
    /// Diameter of the unit-curvature model (`pi` for spheres).
    pub diameter: f64,
    /// Upper end of the sampled parameter range.
    pub s_max: f64,
}

impl RadialCost {
    /// `diameter` is ignored on spheres; `s_bound` caps the parameter range.
    pub fn new(space_kind: SpaceKind, profile: CostProfile, diameter: Option<f64>, s_bound: f64) -> Result<Self> {
        if let SpaceKind::Sphere { radius } = space_kind {
            if !(radius > 0.0 && radius.is_finite()) {
                return Err(Error::invalid("sphere radius must be positive and finite"));
            }
        }
        if !(s_bound > 0.0) {
            return Err(Error::invalid("s bound must be positive"));
        }
        let diameter = match space_kind {
            SpaceKind::Sphere { .. } => std::f64::consts::PI,
            _ => diameter.unwrap_or(f64::INFINITY),
        };
        if !(diameter > 0.0) {
            return Err(Error::invalid("diameter must be positive"));
        }
        let mut cost = RadialCost { space_kind, profile, diameter, s_max: f64::INFINITY };
        let reach = cost.reach();
        let edge = if reach.is_finite() { cost.l_prime(reach - 1e-6) } else { f64::INFINITY };
        cost.s_max = s_bound.min(edge);
        Ok(cost)
    }

    /// Distance in the unit picture where either the cost or `B` breaks down.
    fn reach(&self) -> f64 {
        (self.profile.singular_distance() / self.r()).min(self.diameter)
    }

    /// Parameter of [`Self::reach`]; infinite when `l'` blows up there.
    fn singular_parameter(&self) -> f64 {
        let reach = self.reach();
        if !reach.is_finite() || reach * self.r() >= self.profile.singular_distance() {
            return f64::INFINITY;
        }
        self.l_prime(reach)
    }

    pub fn wfr_sphere(radius: f64, s_bound: f64) -> Result<Self> {
        RadialCost::new(SpaceKind::Sphere { radius }, CostProfile::Wfr, None, s_bound)
    }

    pub fn wfr_euclidean(s_bound: f64) -> Result<Self> {
        RadialCost::new(SpaceKind::Euclidean, CostProfile::Wfr, None, s_bound)
    }

    pub fn wfr_hyperbolic(s_bound: f64) -> Result<Self> {
        RadialCost::new(SpaceKind::Hyperbolic, CostProfile::Wfr, None, s_bound)
    }

    fn r(&self) -> f64 {
        self.space_kind.scale()
    }

    pub fn l(&self, s: f64) -> f64 {
        self.profile.l(self.r() * s)
    }

    pub fn l_prime(&self, s: f64) -> f64 {
        self.r() * self.profile.l_prime(self.r() * s)
    }

    pub fn h(&self, s: f64) -> f64 {
        self.profile.h(s / self.r()) / self.r()
    }

    pub fn h_prime(&self, s: f64) -> f64 {
        self.profile.h_prime(s / self.r()) / (self.r() * self.r())
    }

    fn h_second(&self, s: f64) -> f64 {
        self.profile.h_second(s / self.r()) / self.r().powi(3)
    }

    /// Largest `|h(l'(s)) - s|` over the given samples.
    pub fn inversion_error(&self, samples: &[f64]) -> f64 {
        samples.iter().map(|&s| (self.h(self.l_prime(s)) - s).abs()).fold(0.0, f64::max)
    }

    fn check_s(&self, s: f64) -> Result<()> {
        if !(s > 0.0 && s < self.s_max) {
            return Err(Error::Domain(format!("s = {s} outside (0, {})", self.s_max)));
        }
        Ok(())
    }
}

/// `k(h)` in `B = s k(h)` with its first two derivatives.
fn kernel(kind: SpaceKind, x: f64) -> (f64, f64, f64) {
    match kind {
        SpaceKind::Sphere { .. } => {
            let (s, c) = x.sin_cos();
            let cot = c / s;
            let csc2 = 1.0 / (s * s);
            (cot, -csc2, 2.0 * csc2 * cot)
        }
        SpaceKind::Euclidean => (1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x)),
        SpaceKind::Hyperbolic => {
            let (s, c) = (x.sinh(), x.cosh());
            let coth = c / s;
            let csch2 = 1.0 / (s * s);
            (coth, -csch2, 2.0 * csch2 * coth)
        }
    }
}

/// `A(s) = 1/h'(s)` and `B(s)` per space kind.
#[derive(Debug, Clone, Copy)]
pub struct LeeLiFunctions {
    cost: RadialCost,
}

pub fn lee_li_functions(cost: &RadialCost) -> LeeLiFunctions {
    LeeLiFunctions { cost: *cost }
}

impl LeeLiFunctions {
    pub fn a(&self, s: f64) -> Result<f64> {
        self.cost.check_s(s)?;
        Ok(self.a_raw(s))
    }

    pub fn b(&self, s: f64) -> Result<f64> {
        self.cost.check_s(s)?;
        Ok(self.b_raw(s))
    }

    fn a_raw(&self, s: f64) -> f64 {
        1.0 / self.cost.h_prime(s)
    }

    /// Even in `s`; the value at 0 is the limit `1/h'(0)`.
    fn b_raw(&self, s: f64) -> f64 {
        if s == 0.0 {
            return self.a_raw(0.0);
        }
        s * kernel(self.cost.space_kind, self.cost.h(s)).0
    }

    /// `(A, A', A'')` in closed form.
    fn a_derivatives(&self, s: f64) -> (f64, f64, f64) {
        let h1 = self.cost.h_prime(s);
        let h2 = self.cost.h_second(s);
        let h3 = h_third(&self.cost, s);
        let a = 1.0 / h1;
        let a1 = -h2 / (h1 * h1);
        let a2 = -h3 / (h1 * h1) + 2.0 * h2 * h2 / (h1 * h1 * h1);
        (a, a1, a2)
    }

    /// `(B, B', B'')` in closed form by the chain rule.
    fn b_derivatives(&self, s: f64) -> (f64, f64, f64) {
        let h = self.cost.h(s);
        let h1 = self.cost.h_prime(s);
        let h2 = self.cost.h_second(s);
        let (k, k1, k2) = kernel(self.cost.space_kind, h);
        (s * k, k + s * k1 * h1, 2.0 * k1 * h1 + s * (k2 * h1 * h1 + k1 * h2))
    }
}

/// `h'''` in physical units.
fn h_third(cost: &RadialCost, s: f64) -> f64 {
    let r = cost.r();
    let x = s / r;
    let third = match cost.profile {
        // d^2/dx^2 of 2 / (4 + x^2)
        CostProfile::Wfr => (12.0 * x * x - 16.0) / (4.0 + x * x).powi(3),
        CostProfile::Quadratic => 0.0,
    };
    third / r.powi(4)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeRoute {
    #[default]
    ClosedForm,
    /// 5-point central differences with one Richardson step.
    Numeric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MtwCoefficients {
    pub s: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl MtwCoefficients {
    pub fn as_array(&self) -> [f64; 4] {
        [self.alpha, self.beta, self.gamma, self.delta]
    }
}

fn first_derivative(f: &dyn Fn(f64) -> f64, s: f64, h: f64) -> f64 {
    let d = |h: f64| (f(s - 2.0 * h) - 8.0 * f(s - h) + 8.0 * f(s + h) - f(s + 2.0 * h)) / (12.0 * h);
    (16.0 * d(0.5 * h) - d(h)) / 15.0
}

fn second_derivative(f: &dyn Fn(f64) -> f64, s: f64, h: f64) -> f64 {
    let d =
        |h: f64| (-f(s - 2.0 * h) + 16.0 * f(s - h) - 30.0 * f(s) + 16.0 * f(s + h) - f(s + 2.0 * h)) / (12.0 * h * h);
    (16.0 * d(0.5 * h) - d(h)) / 15.0
}

fn coefficients_at(ll: &LeeLiFunctions, s: f64, route: DerivativeRoute) -> MtwCoefficients {
    let ((a, a1, a2), (b, b1, b2)) = match route {
        DerivativeRoute::ClosedForm => (ll.a_derivatives(s), ll.b_derivatives(s)),
        DerivativeRoute::Numeric => {
            let fa = |x: f64| ll.a_raw(x);
            let fb = |x: f64| ll.b_raw(x.abs());
            // stay well clear of a finite singular parameter (antipodes of small spheres)
            let step = (2e-3 * s.max(1.0) * ll.cost.r().max(1.0)).min(1e-2 * (ll.cost.singular_parameter() - s));
            (
                (fa(s), first_derivative(&fa, s, step), second_derivative(&fa, s, step)),
                (fb(s), first_derivative(&fb, s, step), second_derivative(&fb, s, step)),
            )
        }
    };
    let s2 = s * s;
    MtwCoefficients {
        s,
        alpha: (s2 * a2 + 6.0 * (a - b) - 4.0 * s * (a1 - b1)) / s2,
        beta: (s * a1 - 2.0 * (a - b)) / s2,
        gamma: b2,
        delta: b1 / s,
    }
}

/// Coefficients at `0 < s < s_max`, or the `s -> 0` limit at `s = 0`.
pub fn mtw_coefficients(cost: &RadialCost, s: f64) -> Result<MtwCoefficients> {
    mtw_coefficients_with(cost, s, DerivativeRoute::ClosedForm)
}

pub fn mtw_coefficients_with(cost: &RadialCost, s: f64, route: DerivativeRoute) -> Result<MtwCoefficients> {
    let ll = lee_li_functions(cost);
    if s == 0.0 {
        return Ok(limit_at_zero(&ll, route));
    }
    cost.check_s(s)?;
    Ok(coefficients_at(&ll, s, route))
}

/// Richardson extrapolation in `s^2` over `s = 1e-2, 5e-3, 2.5e-3`.
fn limit_at_zero(ll: &LeeLiFunctions, route: DerivativeRoute) -> MtwCoefficients {
    let c: Vec<[f64; 4]> = [1e-2, 5e-3, 2.5e-3].iter().map(|&s| coefficients_at(ll, s, route).as_array()).collect();
    let mut out = [0.0; 4];
    for k in 0..4 {
        let r1 = (4.0 * c[1][k] - c[0][k]) / 3.0;
        let r2 = (4.0 * c[2][k] - c[1][k]) / 3.0;
        out[k] = (16.0 * r2 - r1) / 15.0;
    }
    MtwCoefficients { s: 0.0, alpha: out[0], beta: out[1], gamma: out[2], delta: out[3] }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Inequality {
    /// `beta <= 0`
    Beta,
    /// `gamma <= 0`
    Gamma,
    /// `delta <= 0`
    Delta,
    /// `alpha + delta <= 2 sqrt(beta gamma)`
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub s: f64,
    pub which: Inequality,
    /// Amount by which the inequality fails.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MtwCheck {
    pub weak: bool,
    pub strong: bool,
    pub violations: Vec<Violation>,
    /// Smallest slack over all samples and inequalities (negative when violated).
    pub min_margin: f64,
    pub samples: Vec<MtwCoefficients>,
}

const CONDITION_SLACK: f64 = 1e-9;

/// Left side minus right side of the four inequalities.
fn excesses(c: &MtwCoefficients) -> [(Inequality, f64); 4] {
    let bg = c.beta * c.gamma;
    let bound = if bg >= 0.0 { 2.0 * bg.sqrt() } else { 0.0 };
    [
        (Inequality::Beta, c.beta),
        (Inequality::Gamma, c.gamma),
        (Inequality::Delta, c.delta),
        (Inequality::Mixed, c.alpha + c.delta - bound),
    ]
}

/// Weak and strong conditions on the `s -> 0` limit and `n_samples`
/// log-spaced points in `[1e-2, s_max)`.
pub fn mtw_condition_check(cost: &RadialCost, n_samples: usize) -> Result<MtwCheck> {
    if n_samples < 50 {
        return Err(Error::invalid("at least 50 samples are needed"));
    }
    if !cost.s_max.is_finite() {
        return Err(Error::invalid("the sampled range needs a finite s bound"));
    }
    let samples = sample_points(cost, n_samples);
    let mut coeffs = vec![mtw_coefficients(cost, 0.0)?];
    for &s in &samples {
        coeffs.push(mtw_coefficients(cost, s)?);
    }
    let mut violations = Vec::new();
    let mut min_margin = f64::INFINITY;
    let mut strong = true;
    for c in &coeffs {
        for (which, excess) in excesses(c) {
            min_margin = min_margin.min(-excess);
            if excess > CONDITION_SLACK {
                violations.push(Violation { s: c.s, which, value: excess });
            }
            if excess >= -CONDITION_SLACK {
                strong = false;
            }
        }
    }
    let weak = violations.is_empty();
    Ok(MtwCheck { weak, strong: weak && strong, violations, min_margin, samples: coeffs })
}

fn sample_points(cost: &RadialCost, n: usize) -> Vec<f64> {
    let lo = 1e-2_f64.min(0.5 * cost.s_max);
    // keep the last sample strictly inside the range
    let hi = cost.s_max * (1.0 - 1e-9);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect()
}

/// `exp_x(h(|v|) v / |v|)` for the profile in physical units.
fn j_exp(space: &Space, profile: CostProfile, x: &[f64], v: &[f64]) -> Point {
    let n = space.tangent_norm(v);
    if n == 0.0 {
        return Point(x.to_vec());
    }
    let step = profile.h(n) / n;
    let w: Vec<f64> = v.iter().map(|c| c * step).collect();
    exp_unchecked(space, x, &w)
}

struct TensorProblem<'a> {
    space: &'a Space,
    profile: CostProfile,
    x: &'a [f64],
    u: &'a [f64],
    v: &'a [f64],
    w: &'a [f64],
}

impl TensorProblem<'_> {
    fn validate(&self) -> Result<()> {
        self.space.check_point_with(self.x, 1e-9)?;
        let m = self.space.coord_len();
        for (name, t) in [("u", self.u), ("v", self.v), ("w", self.w)] {
            if t.len() != m || t.iter().any(|c| !c.is_finite()) {
                return Err(Error::invalid(format!("tangent vector {name} has the wrong size or non-finite entries")));
            }
            let p = self.space.project_tangent(self.x, t);
            let off: f64 = p.iter().zip(t).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if off > 1e-9 * (1.0 + self.space.tangent_norm(t)) {
                return Err(Error::invalid(format!("{name} is not tangent at x")));
            }
        }
        Ok(())
    }

    /// `c(exp_x(t u), J-exp_x(v + s w))`, refusing configurations within
    /// `margin` of a singular distance.
    fn eval(&self, t: f64, s: f64, margin: f64) -> Result<f64> {
        let p = exp_unchecked(self.space, self.x, &self.u.iter().map(|c| c * t).collect::<Vec<_>>());
        let vs: Vec<f64> = self.v.iter().zip(self.w).map(|(a, b)| a + s * b).collect();
        let q = j_exp(self.space, self.profile, self.x, &vs);
        let d = distance_unchecked(self.space, &p, &q);
        let cut = match *self.space {
            Space::Sphere { radius, .. } => std::f64::consts::PI * radius,
            _ => f64::INFINITY,
        };
        if d > self.profile.singular_distance() - margin || d > cut - margin {
            return Err(Error::Domain(format!("distance {d} too close to the cost singularity")));
        }
        Ok(self.profile.l(d))
    }

    fn fourth_mixed(&self, h: f64) -> Result<f64> {
        const C: [f64; 5] = [-1.0, 16.0, -30.0, 16.0, -1.0];
        let mut acc = 0.0;
        for (i, ci) in C.iter().enumerate() {
            for (j, cj) in C.iter().enumerate() {
                let t = (i as f64 - 2.0) * h;
                let s = (j as f64 - 2.0) * h;
                acc += ci * cj * self.eval(t, s, FD_MARGIN)?;
            }
        }
        Ok(acc / (144.0 * h.powi(4)))
    }

    fn mixed(&self, w: &[f64]) -> Result<f64> {
        let p = TensorProblem { w, ..*self };
        let h = MIXED_STEP;
        let f = |t: f64, s: f64| p.eval(t, s, FD_MARGIN);
        Ok((f(h, h)? - f(h, -h)? - f(-h, h)? + f(-h, -h)?) / (4.0 * h * h))
    }
}

const FD_STEP: f64 = 1e-2;
const MIXED_STEP: f64 = 1e-3;
const FD_MARGIN: f64 = 1e-3;

/// `-3/2 d^2_t d^2_s c(exp_x(t u), J-exp_x(v + s w))` at `t = s = 0` by nested
/// 5-point differences (step 1e-2) and one Richardson halving.
pub fn mtw_fd_tensor(space: &Space, profile: CostProfile, x: &[f64], u: &[f64], v: &[f64], w: &[f64]) -> Result<f64> {
    let p = TensorProblem { space, profile, x, u, v, w };
    p.validate()?;
    let coarse = p.fourth_mixed(FD_STEP)?;
    let fine = p.fourth_mixed(0.5 * FD_STEP)?;
    Ok(-1.5 * (16.0 * fine - coarse) / 15.0)
}

/// `d_t d_s c(exp_x(t u), J-exp_x(v + s w))` at 0 (central differences, step 1e-3).
pub fn mixed_derivative(
    space: &Space,
    profile: CostProfile,
    x: &[f64],
    u: &[f64],
    v: &[f64],
    w: &[f64],
) -> Result<f64> {
    let p = TensorProblem { space, profile, x, u, v, w };
    p.validate()?;
    p.mixed(w)
}

/// `w` corrected along the direction of steepest change of the mixed
/// derivative until `u` and the result are J-orthogonal.
pub fn j_orthogonalize(
    space: &Space,
    profile: CostProfile,
    x: &[f64],
    v: &[f64],
    u: &[f64],
    w: &[f64],
) -> Result<Vec<f64>> {
    if space.tangent_norm(u) == 0.0 {
        return Err(Error::Domain("u must be nonzero".into()));
    }
    let p = TensorProblem { space, profile, x, u, v, w };
    p.validate()?;
    let m0 = p.mixed(w)?;
    let scale = space.tangent_norm(u) * space.tangent_norm(w).max(1.0);
    if m0.abs() <= 1e-12 * scale {
        return Ok(w.to_vec());
    }
    // gradient of the (nearly linear) functional w -> mixed(w)
    let basis = space.tangent_basis(x);
    let mut dir = vec![0.0; w.len()];
    for e in &basis {
        let a = p.mixed(e)?;
        dir.iter_mut().zip(e).for_each(|(d, ei)| *d += a * ei);
    }
    let dn = space.tangent_norm(&dir);
    if !(dn > 1e-12 * space.tangent_norm(u)) {
        return Err(Error::Domain("mixed derivative does not depend on w".into()));
    }
    dir.iter_mut().for_each(|d| *d /= dn);
    let shifted = |mu: f64| -> Vec<f64> { w.iter().zip(&dir).map(|(a, b)| a - mu * b).collect() };
    // secant iteration on the mixing coefficient
    let (mut mu_a, mut m_a) = (0.0, m0);
    let mut mu_b = m0 / dn;
    let mut m_b = p.mixed(&shifted(mu_b))?;
    for _ in 0..30 {
        if m_b.abs() <= 1e-13 * scale || m_b == m_a {
            break;
        }
        let next = mu_b - m_b * (mu_b - mu_a) / (m_b - m_a);
        (mu_a, m_a) = (mu_b, m_b);
        mu_b = next;
        m_b = p.mixed(&shifted(mu_b))?;
    }
    if m_b.abs() > 1e-6 {
        return Err(Error::Numerical(format!("J-orthogonalization stalled at mixed derivative {m_b:e}")));
    }
    Ok(shifted(mu_b))
}

/// `-3/2 (alpha |u0|^2 |w0|^2 + beta |u0|^2 |w1|^2 + gamma |u1|^2 |w0|^2 + delta |u1|^2 |w1|^2)`
/// with `u0, w0` along `v`, coefficients at `s = R |v|` (physical vectors on a
/// sphere of radius `R`). Only meaningful for J-orthogonal `u, w`.
pub fn mtw_decomposition(cost: &RadialCost, space: &Space, u: &[f64], v: &[f64], w: &[f64]) -> Result<f64> {
    let vn = space.tangent_norm(v);
    if vn < 1e-3 {
        return Err(Error::Domain("decomposition needs |v| >= 1e-3".into()));
    }
    let split = |a: &[f64]| {
        let along = space.tangent_dot(a, v) / vn;
        let total = space.tangent_dot(a, a);
        (along * along, (total - along * along).max(0.0))
    };
    let (u0, u1) = split(u);
    let (w0, w1) = split(w);
    let c = mtw_coefficients(cost, cost.r() * vn)?;
    Ok(-1.5 * (c.alpha * u0 * w0 + c.beta * u0 * w1 + c.gamma * u1 * w0 + c.delta * u1 * w1))
}

/// Weak/strong flags of the WFR cost per sphere radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub radius: f64,
    pub weak: bool,
    pub strong: bool,
    pub beta_at_zero: f64,
    pub min_margin: f64,
}

pub fn radius_sweep(radii: &[f64], s_bound: f64, n_samples: usize) -> Result<Vec<SweepRow>> {
    radii
        .iter()
        .map(|&radius| {
            let check = mtw_condition_check(&RadialCost::wfr_sphere(radius, s_bound)?, n_samples)?;
            Ok(SweepRow {
                radius,
                weak: check.weak,
                strong: check.strong,
                beta_at_zero: check.samples[0].beta,
                min_margin: check.min_margin,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCheckRow {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
    pub fd: f64,
    pub decomposition: f64,
    pub abs_error: f64,
    pub rel_error: f64,
}

impl CrossCheckRow {
    /// Relative error within `rel_tol`, or absolute within `abs_tol` when the
    /// decomposition vanishes.
    pub fn agrees(&self, rel_tol: f64, abs_tol: f64) -> bool {
        if self.decomposition.abs() <= 1e-9 {
            self.abs_error <= abs_tol
        } else {
            self.rel_error <= rel_tol
        }
    }
}

fn random_tangent<R: rand::Rng>(space: &Space, x: &[f64], rng: &mut R, norm: f64) -> Vec<f64> {
    loop {
        let raw: Vec<f64> = (0..x.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let t = space.project_tangent(x, &raw);
        let n = space.tangent_norm(&t);
        if n > 0.1 {
            return t.iter().map(|c| c * norm / n).collect();
        }
    }
}

/// FD tensor against the coefficient decomposition at random J-orthogonal
/// configurations in dimension 2 (`S^2(R)` or the plane).
pub fn mtw_cross_check<R: rand::Rng>(cost: &RadialCost, trials: usize, rng: &mut R) -> Result<Vec<CrossCheckRow>> {
    let space = match cost.space_kind {
        SpaceKind::Sphere { radius } => Space::sphere(2, radius),
        SpaceKind::Euclidean => Space::euclidean(2),
        SpaceKind::Hyperbolic => {
            return Err(Error::invalid("finite-difference cross-check is not available on hyperbolic space"))
        }
    };
    let mut rows = Vec::with_capacity(trials);
    while rows.len() < trials {
        let raw: Vec<f64> = (0..space.coord_len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = match space {
            Space::Sphere { radius, .. } => {
                let n = raw.iter().map(|c| c * c).sum::<f64>().sqrt();
                if n < 0.1 {
                    continue;
                }
                raw.iter().map(|c| c * radius / n).collect()
            }
            _ => raw,
        };
        let (nv, nu, nw) = (rng.gen_range(0.1..2.0), rng.gen_range(0.5..1.5), rng.gen_range(0.5..1.5));
        let v = random_tangent(&space, &x, rng, nv);
        let u = random_tangent(&space, &x, rng, nu);
        let w0 = random_tangent(&space, &x, rng, nw);
        let w = j_orthogonalize(&space, cost.profile, &x, &v, &u, &w0)?;
        let fd = mtw_fd_tensor(&space, cost.profile, &x, &u, &v, &w)?;
        let decomposition = mtw_decomposition(cost, &space, &u, &v, &w)?;
        let abs_error = (fd - decomposition).abs();
        let rel_error = abs_error / decomposition.abs().max(f64::MIN_POSITIVE);
        rows.push(CrossCheckRow { x, u, v, w, fd, decomposition, abs_error, rel_error });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn lee_li_examples() {
        let unit = lee_li_functions(&RadialCost::wfr_sphere(1.0, 10.0).unwrap());
        assert_abs_diff_eq!(unit.b(2.0).unwrap(), 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(unit.a(2.0).unwrap(), 4.0, epsilon = 1e-14);
        let half = lee_li_functions(&RadialCost::wfr_sphere(0.5, 10.0).unwrap());
        assert_abs_diff_eq!(half.b(1.0).unwrap(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(half.a(1.0).unwrap(), 1.0, epsilon = 1e-14);
        for s in [0.1, 0.7, 3.0] {
            assert_abs_diff_eq!(half.a(s).unwrap(), 0.5 * (1.0 + s * s), epsilon = 1e-13);
            assert_abs_diff_eq!(half.b(s).unwrap(), 0.5 * (1.0 - s * s), epsilon = 1e-13);
        }
        let flat = lee_li_functions(&RadialCost::wfr_euclidean(10.0).unwrap());
        assert_abs_diff_eq!(flat.a(1e-6).unwrap(), 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(flat.b(1e-6).unwrap(), 2.0, epsilon = 1e-10);
        assert!(matches!(flat.a(0.0), Err(Error::Domain(_))));
        assert!(matches!(flat.a(11.0), Err(Error::Domain(_))));
    }

    #[test]
    fn closed_form_matches_numeric_inversion_of_l_prime() {
        let cost = RadialCost::wfr_sphere(0.8, 10.0).unwrap();
        for s in [0.05, 0.5, 2.0, 7.0] {
            // bisection for l'(t) = s
            let (mut lo, mut hi) = (0.0, FRAC_PI_2 / 0.8 - 1e-12);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if cost.l_prime(mid) < s {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            assert_abs_diff_eq!(cost.h(s), 0.5 * (lo + hi), epsilon = 1e-12);
        }
    }

    #[test]
    fn inversion_identity() {
        for cost in [
            RadialCost::wfr_sphere(0.5, 10.0).unwrap(),
            RadialCost::wfr_sphere(2.0, 10.0).unwrap(),
            RadialCost::wfr_euclidean(10.0).unwrap(),
            RadialCost::new(SpaceKind::Hyperbolic, CostProfile::Quadratic, None, 10.0).unwrap(),
        ] {
            let reach = 1.5 / cost.r();
            let samples: Vec<f64> = (1..=100).map(|k| reach * k as f64 / 101.0).collect();
            assert!(cost.inversion_error(&samples) <= 1e-10);
        }
    }

    #[test]
    fn constant_coefficients_on_special_spheres() {
        for (r, value) in [(0.5, -1.0), (1.0, 0.0)] {
            let cost = RadialCost::wfr_sphere(r, 10.0).unwrap();
            for s in [0.0, 0.01, 0.3, 0.7, 2.0, 9.0] {
                for x in mtw_coefficients(&cost, s).unwrap().as_array() {
                    assert_abs_diff_eq!(x, value, epsilon = 1e-8);
                }
            }
        }
    }

    #[test]
    fn limits_at_zero() {
        let c = mtw_coefficients(&RadialCost::wfr_sphere(2.0, 10.0).unwrap(), 0.0).unwrap();
        for x in [c.beta, c.gamma, c.delta] {
            assert_abs_diff_eq!(x, 0.25, epsilon = 1e-4);
        }
        let e = mtw_coefficients(&RadialCost::wfr_euclidean(10.0).unwrap(), 0.0).unwrap();
        assert_abs_diff_eq!(e.beta, 1.0 / 3.0, epsilon = 1e-4);
        let h = mtw_coefficients(&RadialCost::wfr_hyperbolic(10.0).unwrap(), 0.0).unwrap();
        assert_abs_diff_eq!(h.beta, 2.0 / 3.0, epsilon = 1e-4);
    }

    #[test]
    fn routes_agree() {
        for cost in [
            RadialCost::wfr_sphere(0.5, 10.0).unwrap(),
            RadialCost::wfr_sphere(0.75, 10.0).unwrap(),
            RadialCost::wfr_sphere(1.5, 10.0).unwrap(),
            RadialCost::wfr_euclidean(10.0).unwrap(),
            RadialCost::wfr_hyperbolic(10.0).unwrap(),
        ] {
            for s in [0.05, 0.4, 1.3, 4.0] {
                let a = mtw_coefficients_with(&cost, s, DerivativeRoute::ClosedForm).unwrap();
                let b = mtw_coefficients_with(&cost, s, DerivativeRoute::Numeric).unwrap();
                for (x, y) in a.as_array().iter().zip(b.as_array()) {
                    assert!((x - y).abs() <= 1e-8 * x.abs().max(1.0), "{cost:?} s={s}: {x} vs {y}");
                }
            }
        }
    }

    #[test]
    fn condition_flags() {
        let half = mtw_condition_check(&RadialCost::wfr_sphere(0.5, 10.0).unwrap(), 200).unwrap();
        assert!(half.weak && half.strong);
        let unit = mtw_condition_check(&RadialCost::wfr_sphere(1.0, 10.0).unwrap(), 200).unwrap();
        assert!(unit.weak && !unit.strong);
        for cost in [
            RadialCost::wfr_sphere(2.0, 10.0).unwrap(),
            RadialCost::wfr_euclidean(10.0).unwrap(),
            RadialCost::wfr_hyperbolic(10.0).unwrap(),
        ] {
            let check = mtw_condition_check(&cost, 60).unwrap();
            assert!(!check.weak);
            assert_eq!(check.violations[0].s, 0.0);
            assert_eq!(check.violations[0].which, Inequality::Beta);
        }
        assert!(mtw_condition_check(&RadialCost::wfr_sphere(0.5, 10.0).unwrap(), 10).is_err());
    }

    #[test]
    fn sampled_range_respects_the_singularity() {
        // on a small sphere the diameter is reached before the cost blows up
        let cost = RadialCost::wfr_sphere(0.25, 1e3).unwrap();
        assert!(cost.s_max < 2.0 * 0.25 * (0.25 * std::f64::consts::PI).tan() + 1e-6);
        assert!(mtw_condition_check(&cost, 50).unwrap().samples.iter().all(|c| c.s < cost.s_max));
    }

    fn sphere_frame(r: f64) -> (Space, Vec<f64>, Vec<f64>, Vec<f64>) {
        (Space::sphere(2, r), vec![0.0, 0.0, r], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0])
    }

    #[test]
    fn fd_tensor_examples() {
        let (s2, x, e1, e2) = sphere_frame(0.5);
        let zero = vec![0.0; 3];
        let v: Vec<f64> = e1.iter().map(|c| 0.8 * c).collect();
        assert!(mtw_fd_tensor(&s2, CostProfile::Wfr, &x, &zero, &v, &e2).unwrap().abs() <= 1e-6);
        let w = j_orthogonalize(&s2, CostProfile::Wfr, &x, &v, &e1, &e2).unwrap();
        let value = mtw_fd_tensor(&s2, CostProfile::Wfr, &x, &e1, &v, &w).unwrap();
        assert!((value - 1.5).abs() <= 2e-3 * 1.5, "{value}");
        let flat = Space::euclidean(3);
        let x = [0.1, -0.2, 0.3];
        let u = [0.3, 1.0, -0.5];
        let v = [1.0, 0.2, 0.1];
        let w = [-0.4, 0.7, 0.9];
        assert!(mtw_fd_tensor(&flat, CostProfile::Quadratic, &x, &u, &v, &w).unwrap().abs() <= 1e-4);
    }

    #[test]
    fn fd_tensor_refuses_the_singularity() {
        let (s2, x, e1, e2) = sphere_frame(1.0);
        let v: Vec<f64> = e1.iter().map(|c| 1e4 * c).collect();
        assert!(matches!(mtw_fd_tensor(&s2, CostProfile::Wfr, &x, &e2, &v, &e2), Err(Error::Domain(_))));
    }

    #[test]
    fn j_orthogonalize_examples() {
        let (s2, x, e1, e2) = sphere_frame(1.0);
        let v: Vec<f64> = e1.iter().map(|c| 0.01 * c).collect();
        let w = j_orthogonalize(&s2, CostProfile::Wfr, &x, &v, &e1, &e2).unwrap();
        for (a, b) in w.iter().zip(&e2) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-8);
        }
        let v = [0.5, 0.3, 0.0];
        let u = [0.2, -0.4, 0.0];
        let w = j_orthogonalize(&s2, CostProfile::Wfr, &x, &v, &u, &u).unwrap();
        assert!(mixed_derivative(&s2, CostProfile::Wfr, &x, &u, &v, &w).unwrap().abs() <= 1e-6);
        let u2 = [0.4, -0.8, 0.0];
        let w2 = j_orthogonalize(&s2, CostProfile::Wfr, &x, &v, &u2, &u).unwrap();
        for (a, b) in w.iter().zip(&w2) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-8);
        }
        assert!(matches!(j_orthogonalize(&s2, CostProfile::Wfr, &x, &v, &[0.0; 3], &u), Err(Error::Domain(_))));
    }
}

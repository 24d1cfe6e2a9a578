//! Entropy functions, their Legendre transforms, and Csiszar divergences
//! between atomic measures.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{distance_unchecked, Point, Space};

/// Points closer than this are treated as the same atom.
pub const ATOM_MERGE_TOL: f64 = 1e-12;

/// Convex, nonnegative `F` with `F(1) = 0` and `F = +inf` on negatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EntropyFunction {
    /// `x log x - x + 1`, giving the Kullback-Leibler divergence.
    #[serde(rename = "kl")]
    Kl,
    /// `|x - 1|`, a finite-recession entropy (`F'_inf = 1`).
    #[serde(rename = "tv")]
    TotalVariation,
}

/// The Kullback-Leibler entropy function.
pub fn make_kl_entropy() -> EntropyFunction {
    EntropyFunction::Kl
}

impl EntropyFunction {
    pub fn name(&self) -> &'static str {
        match self {
            EntropyFunction::Kl => "kl",
            EntropyFunction::TotalVariation => "tv",
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x < 0.0 || x.is_nan() {
            return f64::INFINITY;
        }
        match self {
            EntropyFunction::Kl => {
                if x == 0.0 {
                    1.0
                } else if x.is_infinite() {
                    f64::INFINITY
                } else {
                    x * x.ln() - x + 1.0
                }
            }
            EntropyFunction::TotalVariation => (x - 1.0).abs(),
        }
    }

    /// Legendre transform `F*(s) = sup_t s t - F(t)`.
    pub fn conjugate(&self, s: f64) -> f64 {
        match self {
            EntropyFunction::Kl => s.exp_m1(),
            EntropyFunction::TotalVariation => {
                if s > 1.0 {
                    f64::INFINITY
                } else {
                    s.max(-1.0)
                }
            }
        }
    }

    /// Derivative of `F*` on its domain (right derivative at kinks).
    pub fn conjugate_derivative(&self, s: f64) -> f64 {
        match self {
            EntropyFunction::Kl => s.exp(),
            EntropyFunction::TotalVariation => {
                if s >= -1.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Recession constant `F'_inf = lim F(r) / r`.
    pub fn recession(&self) -> f64 {
        match self {
            EntropyFunction::Kl => f64::INFINITY,
            EntropyFunction::TotalVariation => 1.0,
        }
    }

    /// Upper end of `dom(F*) = (-inf, F'_inf]`.
    pub fn conjugate_domain_upper(&self) -> f64 {
        self.recession()
    }

    /// Whether `dF(0) = -inf` (infinite slope at the origin).
    pub fn slope_at_zero_infinite(&self) -> bool {
        matches!(self, EntropyFunction::Kl)
    }

    /// `nu F(mu / nu)` for a single atom, including the singular case `nu = 0`.
    pub fn atom_term(&self, mu: f64, nu: f64) -> f64 {
        if nu > 0.0 {
            match self {
                EntropyFunction::Kl => {
                    if mu == 0.0 {
                        nu
                    } else {
                        mu * (mu / nu).ln() - mu + nu
                    }
                }
                EntropyFunction::TotalVariation => (mu - nu).abs(),
            }
        } else if mu > 0.0 {
            self.recession() * mu
        } else {
            0.0
        }
    }

    /// Divergence between two mass vectors indexed by the same atoms.
    pub fn divergence_aligned(&self, mu: &[f64], nu: &[f64]) -> f64 {
        mu.iter().zip(nu).map(|(&m, &n)| self.atom_term(m, n)).sum()
    }
}

/// Finite nonnegative combination of Dirac masses on a [`Space`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMeasure")]
pub struct DiscreteMeasure {
    pub space: Space,
    pub points: Vec<Point>,
    pub masses: Vec<f64>,
}

#[derive(Deserialize)]
struct RawMeasure {
    space: Space,
    points: Vec<Point>,
    masses: Vec<f64>,
}

impl TryFrom<RawMeasure> for DiscreteMeasure {
    type Error = Error;

    fn try_from(raw: RawMeasure) -> Result<Self> {
        DiscreteMeasure::new(raw.space, raw.points, raw.masses)
    }
}

impl DiscreteMeasure {
    /// Validates points and masses; atoms closer than [`ATOM_MERGE_TOL`] are merged.
    pub fn new(space: Space, points: Vec<Point>, masses: Vec<f64>) -> Result<Self> {
        space.validate()?;
        if points.len() != masses.len() {
            return Err(Error::invalid(format!("{} points but {} masses", points.len(), masses.len())));
        }
        for (k, p) in points.iter().enumerate() {
            space.check_point_with(p, 1e-9).map_err(|e| Error::invalid(format!("point {k}: {e}")))?;
        }
        if let Some(k) = masses.iter().position(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::invalid(format!("mass {k} is negative or not finite")));
        }
        let mut out_pts: Vec<Point> = Vec::with_capacity(points.len());
        let mut out_mass: Vec<f64> = Vec::with_capacity(points.len());
        for (p, m) in points.into_iter().zip(masses) {
            let p = space.project_point(&p);
            match out_pts.iter().position(|q| distance_unchecked(&space, q, &p) <= ATOM_MERGE_TOL) {
                Some(k) => out_mass[k] += m,
                None => {
                    out_pts.push(p);
                    out_mass.push(m);
                }
            }
        }
        Ok(DiscreteMeasure { space, points: out_pts, masses: out_mass })
    }

    pub fn empty(space: Space) -> Self {
        DiscreteMeasure { space, points: Vec::new(), masses: Vec::new() }
    }

    pub fn dirac(space: Space, point: Point, mass: f64) -> Result<Self> {
        DiscreteMeasure::new(space, vec![point], vec![mass])
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        DiscreteMeasure::new(self.space, self.points.clone(), self.masses.iter().map(|m| m * factor).collect())
    }

    /// Same atoms, new masses (no merging, no reordering).
    pub fn with_masses(&self, masses: Vec<f64>) -> Result<Self> {
        if masses.len() != self.len() {
            return Err(Error::invalid("mass vector length does not match support"));
        }
        if masses.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::invalid("masses must be finite and nonnegative"));
        }
        Ok(DiscreteMeasure { space: self.space, points: self.points.clone(), masses })
    }

    /// Index of the atom at `p`, if any.
    pub fn find(&self, p: &[f64]) -> Option<usize> {
        self.points.iter().position(|q| distance_unchecked(&self.space, q, p) <= ATOM_MERGE_TOL)
    }

    /// Sum of two measures on the same space.
    pub fn add(&self, other: &DiscreteMeasure) -> Result<Self> {
        if self.space != other.space {
            return Err(Error::invalid("measures live on different spaces"));
        }
        let mut pts = self.points.clone();
        pts.extend(other.points.iter().cloned());
        let mut ms = self.masses.clone();
        ms.extend(other.masses.iter().copied());
        DiscreteMeasure::new(self.space, pts, ms)
    }
}

/// Csiszar divergence `D_F(mu | nu)`, including the singular part
/// `F'_inf |mu^perp|` carried by atoms of `mu` outside `supp(nu)`.
pub fn csiszar_divergence(f: EntropyFunction, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    if mu.space != nu.space {
        return Err(Error::invalid("measures live on different spaces"));
    }
    let mut matched = vec![false; mu.len()];
    let mut total = 0.0;
    for (q, &n) in nu.points.iter().zip(&nu.masses) {
        let m = match mu.find(q) {
            Some(k) => {
                matched[k] = true;
                mu.masses[k]
            }
            None => 0.0,
        };
        total += f.atom_term(m, n);
    }
    for (k, &m) in mu.masses.iter().enumerate() {
        if !matched[k] {
            total += f.atom_term(m, 0.0);
        }
    }
    Ok(total)
}

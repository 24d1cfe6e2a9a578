use std::f64::consts::FRAC_PI_2;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::entropy::DiscreteMeasure;
use crate::error::{Error, Result};
use crate::manifold::{distance_unchecked, Point, Space};

/// Ground cost as a function of geodesic distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CostSpec {
    /// `d^2 / 2`.
    Quadratic,
    /// `-log cos^2(min(d, delta pi/2))`; infinite for `delta = 1, d >= pi/2`.
    Wfr { delta: f64 },
}

impl CostSpec {
    pub fn wfr() -> Self {
        CostSpec::Wfr { delta: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if let CostSpec::Wfr { delta } = *self {
            if !(delta > 0.0 && delta <= 1.0) {
                return Err(Error::invalid(format!("wfr delta must lie in (0, 1], got {delta}")));
            }
        }
        Ok(())
    }

    /// Cost at distance `d`.
    pub fn eval(&self, d: f64) -> f64 {
        match *self {
            CostSpec::Quadratic => 0.5 * d * d,
            CostSpec::Wfr { delta } => {
                let cap = delta * FRAC_PI_2;
                if delta >= 1.0 && d >= FRAC_PI_2 {
                    return f64::INFINITY;
                }
                -2.0 * d.min(cap).cos().ln()
            }
        }
    }
}

/// Dense cost matrix between two supports; `f64::INFINITY` marks forbidden pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    pub values: Array2<f64>,
}

impl CostMatrix {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        if values.iter().any(|c| c.is_nan() || *c == f64::NEG_INFINITY) {
            return Err(Error::invalid("cost entries must be real or +inf"));
        }
        Ok(CostMatrix { values })
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows(), self.cols())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[[i, j]]
    }

    pub fn transpose(&self) -> CostMatrix {
        CostMatrix { values: self.values.t().to_owned() }
    }
}

/// Evaluates `cost` on every pair of `supp0 x supp1`.
pub fn cost_matrix(space: &Space, cost: &CostSpec, supp0: &[Point], supp1: &[Point]) -> Result<CostMatrix> {
    cost.validate()?;
    let len = space.coord_len();
    if supp0.iter().chain(supp1).any(|p| p.len() != len) {
        return Err(Error::invalid("support point does not match the space dimension"));
    }
    let values = Array2::from_shape_fn((supp0.len(), supp1.len()), |(i, j)| {
        cost.eval(distance_unchecked(space, &supp0[i], &supp1[j]))
    });
    Ok(CostMatrix { values })
}

/// Direction of a c-transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Input indexed by rows of `C`, output by columns: `w[j] = min_i C[i,j] - z[i]`.
    RowsToCols,
    /// Input indexed by columns, output by rows: `w[i] = min_j C[i,j] - z[j]`.
    ColsToRows,
}

/// c-transform with argmin; ties go to the lowest index.
pub fn c_transform_with_argmin(z: &[f64], c: &CostMatrix, side: Side) -> Result<(Vec<f64>, Vec<usize>)> {
    let (inner, outer) = match side {
        Side::RowsToCols => (c.rows(), c.cols()),
        Side::ColsToRows => (c.cols(), c.rows()),
    };
    if z.len() != inner {
        return Err(Error::invalid(format!("potential has length {}, expected {inner}", z.len())));
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("c-transform input must be finite"));
    }
    let mut out = Vec::with_capacity(outer);
    let mut arg = Vec::with_capacity(outer);
    for k in 0..outer {
        let mut best = f64::INFINITY;
        let mut best_l = usize::MAX;
        for (l, zl) in z.iter().enumerate() {
            let cv = match side {
                Side::RowsToCols => c.get(l, k),
                Side::ColsToRows => c.get(k, l),
            };
            if cv.is_finite() && cv - zl < best {
                best = cv - zl;
                best_l = l;
            }
        }
        if best_l == usize::MAX {
            return Err(Error::Admissibility(format!("no finite cost entry for index {k}")));
        }
        out.push(best);
        arg.push(best_l);
    }
    Ok((out, arg))
}

/// `z^c = min (C - z)` over finite entries.
pub fn c_transform(z: &[f64], c: &CostMatrix, side: Side) -> Result<Vec<f64>> {
    c_transform_with_argmin(z, c, side).map(|(v, _)| v)
}

/// Max-min cost `c_H` between the supports and whether it is finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Admissibility {
    pub c_h: f64,
    pub admissible: bool,
}

/// `c_H = max(max_i min_j C, max_j min_i C)` over positive-mass atoms.
pub fn admissibility(rho0: &DiscreteMeasure, rho1: &DiscreteMeasure, c: &CostMatrix) -> Result<Admissibility> {
    if c.shape() != (rho0.len(), rho1.len()) {
        return Err(Error::invalid("cost matrix shape does not match the supports"));
    }
    let rows: Vec<usize> = (0..rho0.len()).filter(|&i| rho0.masses[i] > 0.0).collect();
    let cols: Vec<usize> = (0..rho1.len()).filter(|&j| rho1.masses[j] > 0.0).collect();
    if rows.is_empty() || cols.is_empty() {
        return Err(Error::invalid("admissibility needs nonempty supports"));
    }
    let mut c_h: f64 = 0.0;
    for &i in &rows {
        c_h = c_h.max(cols.iter().map(|&j| c.get(i, j)).fold(f64::INFINITY, f64::min));
    }
    for &j in &cols {
        c_h = c_h.max(rows.iter().map(|&i| c.get(i, j)).fold(f64::INFINITY, f64::min));
    }
    Ok(Admissibility { c_h, admissible: c_h.is_finite() })
}

/// `WFR^2(a delta_x, b delta_y) = a + b - 2 sqrt(ab) cos(min(d, pi/2))`.
pub fn wfr_two_diracs(space: &Space, a: f64, x: &[f64], b: f64, y: &[f64]) -> Result<f64> {
    if !(a >= 0.0 && b >= 0.0) {
        return Err(Error::invalid("masses must be nonnegative"));
    }
    if x.len() != space.coord_len() || y.len() != space.coord_len() {
        return Err(Error::invalid("dimension mismatch in wfr_two_diracs"));
    }
    let d = distance_unchecked(space, x, y);
    Ok(a + b - 2.0 * (a * b).sqrt() * d.min(FRAC_PI_2).cos())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, PI};

    #[test]
    fn cost_examples() {
        assert_eq!(CostSpec::Quadratic.eval(1.0), 0.5);
        assert_abs_diff_eq!(CostSpec::wfr().eval(FRAC_PI_3), 4f64.ln(), epsilon = 1e-14);
        assert_eq!(CostSpec::wfr().eval(FRAC_PI_2), f64::INFINITY);
        assert_eq!(CostSpec::wfr().eval(PI), f64::INFINITY);
        let half = CostSpec::Wfr { delta: 0.5 };
        for d in [FRAC_PI_4, 1.0, 2.0, PI] {
            assert_abs_diff_eq!(half.eval(d), 2f64.ln(), epsilon = 1e-14);
        }
        assert!(CostSpec::Wfr { delta: 0.0 }.validate().is_err());
        assert!(CostSpec::Wfr { delta: 1.5 }.validate().is_err());
    }

    #[test]
    fn cost_matrix_on_circle_is_symmetric() {
        let pts: Vec<Point> = (0..6).map(|k| Point::angle(k as f64 * 0.7)).collect();
        let c = cost_matrix(&Space::circle(), &CostSpec::wfr(), &pts, &pts).unwrap();
        for i in 0..6 {
            assert_eq!(c.get(i, i), 0.0);
            for j in 0..6 {
                assert_eq!(c.get(i, j), c.get(j, i));
                assert!(c.get(i, j) >= 0.0);
            }
        }
    }

    #[test]
    fn c_transform_examples() {
        let c = CostMatrix::new(array![[0.0, 1.0, 4.0], [1.0, 0.0, 1.0], [4.0, 1.0, 0.0]]).unwrap();
        assert_eq!(c_transform(&[0.0; 3], &c, Side::RowsToCols).unwrap(), vec![0.0; 3]);
        let kappa = 0.3;
        let z = [-1e6, -kappa, -1e6];
        let w = c_transform(&z, &c, Side::ColsToRows).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(w[i], c.get(i, 1) + kappa, epsilon = 1e-12);
        }
        let tie = CostMatrix::new(array![[1.0, 1.0]]).unwrap();
        let (_, arg) = c_transform_with_argmin(&[0.0, 0.0], &tie, Side::ColsToRows).unwrap();
        assert_eq!(arg, vec![0]);
    }

    #[test]
    fn c_transform_rejects_infinite_rows() {
        let c = CostMatrix::new(array![[f64::INFINITY, f64::INFINITY], [0.0, 1.0]]).unwrap();
        assert!(matches!(c_transform(&[0.0, 0.0], &c, Side::ColsToRows), Err(Error::Admissibility(_))));
    }

    #[test]
    fn admissibility_examples() {
        let s = Space::circle();
        let rho = DiscreteMeasure::new(s, vec![Point::angle(0.0), Point::angle(1.0)], vec![1.0, 2.0]).unwrap();
        let c = cost_matrix(&s, &CostSpec::wfr(), &rho.points, &rho.points).unwrap();
        assert_eq!(admissibility(&rho, &rho, &c).unwrap().c_h, 0.0);

        let a = DiscreteMeasure::dirac(s, Point::angle(0.0), 1.0).unwrap();
        let b = DiscreteMeasure::dirac(s, Point::angle(FRAC_PI_3), 1.0).unwrap();
        let c = cost_matrix(&s, &CostSpec::wfr(), &a.points, &b.points).unwrap();
        let adm = admissibility(&a, &b, &c).unwrap();
        assert_abs_diff_eq!(adm.c_h, 4f64.ln(), epsilon = 1e-14);
        assert!(adm.admissible);

        let b = DiscreteMeasure::dirac(s, Point::angle(FRAC_PI_2), 1.0).unwrap();
        let c = cost_matrix(&s, &CostSpec::wfr(), &a.points, &b.points).unwrap();
        let adm = admissibility(&a, &b, &c).unwrap();
        assert_eq!(adm.c_h, f64::INFINITY);
        assert!(!adm.admissible);

        let empty = DiscreteMeasure::empty(s);
        let c = CostMatrix::new(Array2::zeros((0, 1))).unwrap();
        assert!(admissibility(&empty, &a, &c).is_err());
    }

    #[test]
    fn two_dirac_examples() {
        let s = Space::circle();
        assert_eq!(wfr_two_diracs(&s, 2.0, &[1.0], 2.0, &[1.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(wfr_two_diracs(&s, 1.0, &[0.0], 1.0, &[FRAC_PI_3]).unwrap(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(wfr_two_diracs(&s, 1.5, &[0.0], 0.5, &[2.0]).unwrap(), 2.0, epsilon = 1e-14);
    }
}

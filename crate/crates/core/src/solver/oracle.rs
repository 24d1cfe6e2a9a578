//! Brute-force reference minimizer for tiny KL instances.

use ndarray::Array2;

use super::cost::CostMatrix;
use super::objective::{primal_value_unchecked, Plan};
use crate::entropy::{DiscreteMeasure, EntropyFunction};
use crate::error::{Error, Result};

/// Largest `m0 * m1` accepted by [`convex_oracle`].
pub const ORACLE_MAX_ENTRIES: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub plan: Plan,
    pub value: f64,
    /// Sup norm of `gamma - max(0, gamma - grad)`.
    pub stationarity: f64,
    pub sweeps: usize,
}

/// Projected-gradient residual of the KL primal at `gamma`.
pub fn kl_stationarity(gamma: &Array2<f64>, m0: &[f64], m1: &[f64], c: &CostMatrix) -> f64 {
    let g0: Vec<f64> = gamma.rows().into_iter().map(|r| r.sum()).collect();
    let g1: Vec<f64> = gamma.columns().into_iter().map(|r| r.sum()).collect();
    let mut worst: f64 = 0.0;
    for ((i, j), &g) in gamma.indexed_iter() {
        let cij = c.get(i, j);
        if !cij.is_finite() || m0[i] == 0.0 || m1[j] == 0.0 {
            continue;
        }
        let grad = (g0[i] / m0[i]).ln() + (g1[j] / m1[j]).ln() + cij;
        worst = worst.max((g - (g - grad).max(0.0)).abs());
    }
    worst
}

/// Exact cyclic coordinate minimization of the KL-KL primal.
///
/// With `r` and `q` the rest of row `i` and column `j`, the optimal entry
/// solves `(r + t)(q + t) = rho0[i] rho1[j] exp(-C[i,j])`. Entries with
/// infinite cost or touching a massless atom stay at zero.
pub fn convex_oracle(
    rho0: &DiscreteMeasure,
    rho1: &DiscreteMeasure,
    c: &CostMatrix,
    f0: EntropyFunction,
    f1: EntropyFunction,
    iters: usize,
) -> Result<OracleResult> {
    let (m0, m1) = (rho0.len(), rho1.len());
    if m0 * m1 > ORACLE_MAX_ENTRIES {
        return Err(Error::invalid(format!("oracle accepts at most {ORACLE_MAX_ENTRIES} entries, got {}", m0 * m1)));
    }
    if f0 != EntropyFunction::Kl || f1 != EntropyFunction::Kl {
        return Err(Error::invalid("oracle supports KL marginal penalties only"));
    }
    if c.shape() != (m0, m1) {
        return Err(Error::invalid("cost matrix shape does not match the supports"));
    }
    let (a, b) = (&rho0.masses, &rho1.masses);
    let mut gamma = Array2::<f64>::zeros((m0, m1));
    let mut row = vec![0.0; m0];
    let mut col = vec![0.0; m1];
    let mut sweeps = 0;
    let mut stationarity = kl_stationarity(&gamma, a, b, c);
    while sweeps < iters {
        sweeps += 1;
        let mut moved: f64 = 0.0;
        for i in 0..m0 {
            for j in 0..m1 {
                let cij = c.get(i, j);
                if !cij.is_finite() || a[i] == 0.0 || b[j] == 0.0 {
                    continue;
                }
                let old = gamma[[i, j]];
                let r = row[i] - old;
                let q = col[j] - old;
                let p = a[i] * b[j] * (-cij).exp();
                let t = (2.0 * (p - r * q) / ((r + q) + ((r - q) * (r - q) + 4.0 * p).sqrt())).max(0.0);
                gamma[[i, j]] = t;
                row[i] = r + t;
                col[j] = q + t;
                moved = moved.max((t - old).abs());
            }
        }
        // Refresh sums to keep rounding from accumulating.
        for i in 0..m0 {
            row[i] = gamma.row(i).sum();
        }
        for j in 0..m1 {
            col[j] = gamma.column(j).sum();
        }
        stationarity = kl_stationarity(&gamma, a, b, c);
        if stationarity < 1e-13 || moved == 0.0 {
            break;
        }
    }
    let value = primal_value_unchecked(&gamma, a, b, f0, f1, c);
    Ok(OracleResult { plan: Plan { gamma }, value, stationarity, sweeps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{Point, Space};
    use crate::solver::cost::{cost_matrix, CostSpec};
    use approx::assert_abs_diff_eq;

    fn oracle(r0: &DiscreteMeasure, r1: &DiscreteMeasure) -> OracleResult {
        let c = cost_matrix(&Space::circle(), &CostSpec::wfr(), &r0.points, &r1.points).unwrap();
        convex_oracle(r0, r1, &c, EntropyFunction::Kl, EntropyFunction::Kl, 100_000).unwrap()
    }

    /// Golden-section minimization of the single-mass primal.
    fn scalar_min(a: f64, b: f64, c: f64) -> f64 {
        let h = |m: f64| m * (m / a).ln() + a - m + m * (m / b).ln() + b - m + m * c;
        let (mut lo, mut hi) = (1e-14, a.max(b) * 2.0);
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..200 {
            let x1 = hi - phi * (hi - lo);
            let x2 = lo + phi * (hi - lo);
            if h(x1) < h(x2) {
                hi = x2;
            } else {
                lo = x1;
            }
        }
        h(0.5 * (lo + hi))
    }

    #[test]
    fn two_diracs_match_scalar_minimization() {
        let s = Space::circle();
        for &(a, b, d) in &[(1.0, 1.0, 1.0), (0.3, 2.5, 0.2), (4.0, 0.7, 1.4)] {
            let r0 = DiscreteMeasure::dirac(s, Point::angle(0.0), a).unwrap();
            let r1 = DiscreteMeasure::dirac(s, Point::angle(d), b).unwrap();
            let res = oracle(&r0, &r1);
            assert_abs_diff_eq!(res.value, scalar_min(a, b, CostSpec::wfr().eval(d)), epsilon = 1e-8);
            assert!(res.stationarity < 1e-8);
        }
    }

    #[test]
    fn identical_diracs() {
        let r = DiscreteMeasure::dirac(Space::circle(), Point::angle(1.0), 2.0).unwrap();
        assert_abs_diff_eq!(oracle(&r, &r).value, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn rejects_large_instances() {
        let s = Space::circle();
        let r = DiscreteMeasure::new(s, (0..5).map(|k| Point::angle(k as f64)).collect(), vec![1.0; 5]).unwrap();
        let c = cost_matrix(&s, &CostSpec::wfr(), &r.points, &r.points).unwrap();
        let kl = EntropyFunction::Kl;
        assert!(matches!(convex_oracle(&r, &r, &c, kl, kl, 10), Err(Error::InvalidInput(_))));
    }
}

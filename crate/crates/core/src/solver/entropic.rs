//! Entropy-regularized scaling solver with epsilon annealing.
//!
//! The iterates are the full dual potentials `(f, g)`. A kernel
//! `K[i,j] = exp((fb[i] + gb[j] - C[i,j]) / eps)` is built around a snapshot
//! `(fb, gb)` and rebuilt whenever the scalings `exp((f - fb) / eps)` drift
//! too far, so every update is a plain matrix-vector product. Rows whose
//! kernel sum underflows fall back to a log-sum-exp.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::cost::CostMatrix;
use super::objective::{dual_value_unchecked, max_violation, primal_value_unchecked, Plan, PotentialPair, FEAS_TOL};
use crate::entropy::{DiscreteMeasure, EntropyFunction};
use crate::error::{Error, Result};

/// Rebuild the kernel once `|f - fb| / eps` exceeds this.
const ABSORB_THRESHOLD: f64 = 30.0;
const POLISH_ROUNDS: usize = 50;

/// Geometric epsilon schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub eps_start: f64,
    pub eps_final: f64,
    pub decay: f64,
    /// Iteration cap for every stage except the last.
    pub inner_iters: usize,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule { eps_start: 1.0, eps_final: 1e-3, decay: 0.7, inner_iters: 200 }
    }
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_final > 0.0 && self.eps_start >= self.eps_final && self.eps_start.is_finite()) {
            return Err(Error::invalid(format!(
                "need eps_start >= eps_final > 0, got {} and {}",
                self.eps_start, self.eps_final
            )));
        }
        if !(self.decay > 0.0 && self.decay < 1.0) {
            return Err(Error::invalid(format!("decay must lie in (0, 1), got {}", self.decay)));
        }
        if self.inner_iters == 0 {
            return Err(Error::invalid("inner_iters must be positive"));
        }
        Ok(())
    }

    /// The epsilon of every stage, ending exactly at `eps_final`.
    pub fn stages(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut eps = self.eps_start;
        while eps > self.eps_final * (1.0 + 1e-12) {
            out.push(eps);
            eps *= self.decay;
        }
        out.push(self.eps_final);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub schedule: Schedule,
    /// Total iteration budget across all stages.
    pub max_iter: usize,
    /// Stop a stage once the sup-norm change of the potentials drops below this.
    pub tol: f64,
    pub feas_tol: f64,
    /// Improve the projected potentials by alternating exact c-transforms.
    pub polish: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { schedule: Schedule::default(), max_iter: 20_000, tol: 1e-8, feas_tol: FEAS_TOL, polish: true }
    }
}

impl SolverOptions {
    pub fn with_eps_final(mut self, eps_final: f64) -> Self {
        self.schedule.eps_final = eps_final;
        self.schedule.eps_start = self.schedule.eps_start.max(eps_final);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub plan: Plan,
    /// Feasible potentials used for the dual value.
    pub potentials: PotentialPair,
    /// Smooth potentials of the regularized problem at the final epsilon,
    /// before the feasibility projection (may violate constraints by O(eps)).
    pub entropic_potentials: PotentialPair,
    pub primal_value: f64,
    pub dual_value: f64,
    pub gap: f64,
    pub iterations: usize,
    pub epsilon_final: f64,
    pub converged: bool,
    /// Last sup-norm change of the potentials.
    pub residual: f64,
}

/// Marginal prox in potential form: the new potential given `p = eps (log rho - lse)`.
fn aprox(f: EntropyFunction, p: f64, eps: f64) -> f64 {
    match f {
        EntropyFunction::Kl => p / (1.0 + eps),
        EntropyFunction::TotalVariation => p.clamp(-1.0, 1.0),
    }
}

/// Compact problem restricted to atoms that can exchange mass.
struct Active {
    rows: Vec<usize>,
    cols: Vec<usize>,
    /// Row-major `rows.len() x cols.len()` cost.
    cost: Vec<f64>,
    log0: Vec<f64>,
    log1: Vec<f64>,
    m0: Vec<f64>,
    m1: Vec<f64>,
}

impl Active {
    fn new(rho0: &[f64], rho1: &[f64], c: &CostMatrix) -> Self {
        let rows: Vec<usize> = (0..rho0.len())
            .filter(|&i| rho0[i] > 0.0 && (0..rho1.len()).any(|j| rho1[j] > 0.0 && c.get(i, j).is_finite()))
            .collect();
        let cols: Vec<usize> = (0..rho1.len())
            .filter(|&j| rho1[j] > 0.0 && (0..rho0.len()).any(|i| rho0[i] > 0.0 && c.get(i, j).is_finite()))
            .collect();
        let mut cost = Vec::with_capacity(rows.len() * cols.len());
        for &i in &rows {
            for &j in &cols {
                cost.push(c.get(i, j));
            }
        }
        let m0: Vec<f64> = rows.iter().map(|&i| rho0[i]).collect();
        let m1: Vec<f64> = cols.iter().map(|&j| rho1[j]).collect();
        Active {
            log0: m0.iter().map(|m| m.ln()).collect(),
            log1: m1.iter().map(|m| m.ln()).collect(),
            rows,
            cols,
            cost,
            m0,
            m1,
        }
    }

    fn n0(&self) -> usize {
        self.rows.len()
    }

    fn n1(&self) -> usize {
        self.cols.len()
    }
}

struct State<'a> {
    a: &'a Active,
    f: Vec<f64>,
    g: Vec<f64>,
    fb: Vec<f64>,
    gb: Vec<f64>,
    kernel: Vec<f64>,
    eps: f64,
    f0: EntropyFunction,
    f1: EntropyFunction,
}

impl<'a> State<'a> {
    fn absorb(&mut self) {
        self.fb.clone_from(&self.f);
        self.gb.clone_from(&self.g);
        let n1 = self.a.n1();
        let inv = 1.0 / self.eps;
        for i in 0..self.a.n0() {
            let fi = self.fb[i];
            let row = &self.a.cost[i * n1..(i + 1) * n1];
            let krow = &mut self.kernel[i * n1..(i + 1) * n1];
            for j in 0..n1 {
                krow[j] = if row[j].is_finite() { ((fi + self.gb[j] - row[j]) * inv).exp() } else { 0.0 };
            }
        }
    }

    /// `log sum_j exp((g[j] - C[i,j]) / eps)` computed directly.
    fn lse_row(&self, i: usize) -> f64 {
        let n1 = self.a.n1();
        let row = &self.a.cost[i * n1..(i + 1) * n1];
        let inv = 1.0 / self.eps;
        let mx = (0..n1)
            .filter(|&j| row[j].is_finite())
            .map(|j| (self.g[j] - row[j]) * inv)
            .fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = (0..n1).filter(|&j| row[j].is_finite()).map(|j| ((self.g[j] - row[j]) * inv - mx).exp()).sum();
        mx + s.ln()
    }

    fn lse_col(&self, j: usize) -> f64 {
        let n1 = self.a.n1();
        let inv = 1.0 / self.eps;
        let terms = (0..self.a.n0()).map(|i| self.a.cost[i * n1 + j]).enumerate().filter(|(_, c)| c.is_finite());
        let mx = terms.clone().map(|(i, c)| (self.f[i] - c) * inv).fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = terms.map(|(i, c)| ((self.f[i] - c) * inv - mx).exp()).sum();
        mx + s.ln()
    }

    fn update_f(&mut self) {
        let n1 = self.a.n1();
        let inv = 1.0 / self.eps;
        let v: Vec<f64> = (0..n1).map(|j| ((self.g[j] - self.gb[j]) * inv).exp()).collect();
        for i in 0..self.a.n0() {
            let krow = &self.kernel[i * n1..(i + 1) * n1];
            let s: f64 = krow.iter().zip(&v).map(|(k, v)| k * v).sum();
            let lse = if s >= f64::MIN_POSITIVE && s.is_finite() { s.ln() - self.fb[i] * inv } else { self.lse_row(i) };
            self.f[i] = aprox(self.f0, self.eps * (self.a.log0[i] - lse), self.eps);
        }
    }

    fn update_g(&mut self) {
        let n1 = self.a.n1();
        let inv = 1.0 / self.eps;
        let mut acc = vec![0.0; n1];
        for i in 0..self.a.n0() {
            let u = ((self.f[i] - self.fb[i]) * inv).exp();
            let krow = &self.kernel[i * n1..(i + 1) * n1];
            for (a, k) in acc.iter_mut().zip(krow) {
                *a += k * u;
            }
        }
        for j in 0..n1 {
            let s = acc[j];
            let lse = if s >= f64::MIN_POSITIVE && s.is_finite() { s.ln() - self.gb[j] * inv } else { self.lse_col(j) };
            self.g[j] = aprox(self.f1, self.eps * (self.a.log1[j] - lse), self.eps);
        }
    }

    fn needs_absorb(&self) -> bool {
        let lim = ABSORB_THRESHOLD * self.eps;
        self.f.iter().zip(&self.fb).any(|(a, b)| (a - b).abs() > lim)
            || self.g.iter().zip(&self.gb).any(|(a, b)| (a - b).abs() > lim)
    }

    /// One full sweep; returns the sup-norm change of `(f, g)`.
    fn step(&mut self) -> Result<f64> {
        let f_old = self.f.clone();
        let g_old = self.g.clone();
        self.update_f();
        self.update_g();
        if self.f0 == EntropyFunction::Kl && self.f1 == EntropyFunction::Kl {
            translate(&mut self.f, &mut self.g, &self.a.m0, &self.a.m1);
        }
        if self.f.iter().chain(&self.g).any(|x| !x.is_finite()) {
            return Err(Error::Numerical(format!("non-finite potential at eps = {}", self.eps)));
        }
        if self.needs_absorb() {
            self.absorb();
        }
        let df = self.f.iter().zip(&f_old).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let dg = self.g.iter().zip(&g_old).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        Ok(df.max(dg))
    }
}

/// Optimal shift `f + k, g - k` of the KL dual; keeps every `f[i] + g[j]`.
fn translate(f: &mut [f64], g: &mut [f64], m0: &[f64], m1: &[f64]) {
    let a: f64 = f.iter().zip(m0).map(|(z, m)| m * (-z).exp()).sum();
    let b: f64 = g.iter().zip(m1).map(|(z, m)| m * (-z).exp()).sum();
    if a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite() {
        let k = 0.5 * (a / b).ln();
        f.iter_mut().for_each(|z| *z += k);
        g.iter_mut().for_each(|z| *z -= k);
    }
}

/// Min over finite entries of `C[i, j] - z1[j]` for every row (compact indexing).
fn compact_ctransform_rows(a: &Active, z1: &[f64]) -> Vec<f64> {
    let n1 = a.n1();
    (0..a.n0())
        .map(|i| {
            let row = &a.cost[i * n1..(i + 1) * n1];
            (0..n1).filter(|&j| row[j].is_finite()).map(|j| row[j] - z1[j]).fold(f64::INFINITY, f64::min)
        })
        .collect()
}

fn compact_ctransform_cols(a: &Active, z0: &[f64]) -> Vec<f64> {
    let n1 = a.n1();
    let mut out = vec![f64::INFINITY; n1];
    for i in 0..a.n0() {
        let row = &a.cost[i * n1..(i + 1) * n1];
        for j in 0..n1 {
            if row[j].is_finite() {
                out[j] = out[j].min(row[j] - z0[i]);
            }
        }
    }
    out
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Dual ascent for KL marginals over the graph of tight constraints.
///
/// Every connected component of `{(i, j) : f[i] + g[j] = C[i,j]}` can be
/// shifted as a block (`f += k` on its rows, `g -= k` on its columns) without
/// touching its own constraints. The best shift balances the linearized
/// masses of the component; it is clamped at the first constraint to another
/// component, which then merges. Feasibility is kept and the dual never
/// decreases.
fn balance_components(a: &Active, f: &mut [f64], g: &mut [f64]) {
    let (n0, n1) = (a.n0(), a.n1());
    let tight = |c: f64, s: f64| s <= 1e-12 * (1.0 + c.abs());
    for _ in 0..(n0 + n1 + 2) {
        let mut parent: Vec<usize> = (0..n0 + n1).collect();
        for i in 0..n0 {
            for j in 0..n1 {
                let c = a.cost[i * n1 + j];
                if c.is_finite() && tight(c, c - f[i] - g[j]) {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, n0 + j));
                    if ri != rj {
                        parent[ri] = rj;
                    }
                }
            }
        }
        let comp: Vec<usize> = (0..n0 + n1).map(|k| find(&mut parent, k)).collect();
        let mut roots: Vec<usize> = comp.clone();
        roots.sort_unstable();
        roots.dedup();
        let mut moved = false;
        for &root in &roots {
            let rows: Vec<usize> = (0..n0).filter(|&i| comp[i] == root).collect();
            let cols: Vec<usize> = (0..n1).filter(|&j| comp[n0 + j] == root).collect();
            let ma: f64 = rows.iter().map(|&i| a.m0[i] * (-f[i]).exp()).sum();
            let mb: f64 = cols.iter().map(|&j| a.m1[j] * (-g[j]).exp()).sum();
            let target = if mb == 0.0 {
                f64::INFINITY
            } else if ma == 0.0 {
                f64::NEG_INFINITY
            } else {
                0.5 * (ma / mb).ln()
            };
            let k = if target > 0.0 {
                let mut up = target;
                for &i in &rows {
                    for j in (0..n1).filter(|&j| comp[n0 + j] != root) {
                        let c = a.cost[i * n1 + j];
                        if c.is_finite() {
                            up = up.min(c - f[i] - g[j]);
                        }
                    }
                }
                up.max(0.0)
            } else if target < 0.0 {
                let mut down = -target;
                for &j in &cols {
                    for i in (0..n0).filter(|&i| comp[i] != root) {
                        let c = a.cost[i * n1 + j];
                        if c.is_finite() {
                            down = down.min(c - f[i] - g[j]);
                        }
                    }
                }
                -down.max(0.0)
            } else {
                0.0
            };
            if k.is_finite() && k.abs() > 1e-15 * (1.0 + target.abs()) {
                rows.iter().for_each(|&i| f[i] += k);
                cols.iter().for_each(|&j| g[j] -= k);
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
}

/// Block ascent on the unregularized dual: exact c-transforms, then the KL
/// shifts.
fn polish(a: &Active, f: &mut Vec<f64>, g: &mut Vec<f64>, f0: EntropyFunction, f1: EntropyFunction) {
    let value = |f: &[f64], g: &[f64]| dual_value_unchecked(f, g, &a.m0, &a.m1, f0, f1);
    let mut best = value(f, g);
    for _ in 0..POLISH_ROUNDS {
        let mut g2 = compact_ctransform_cols(a, f);
        let mut f2 = compact_ctransform_rows(a, &g2);
        if f0 == EntropyFunction::Kl && f1 == EntropyFunction::Kl {
            translate(&mut f2, &mut g2, &a.m0, &a.m1);
            balance_components(a, &mut f2, &mut g2);
        }
        let v = value(&f2, &g2);
        if !(v > best) {
            break;
        }
        let gain = v - best;
        *f = f2;
        *g = g2;
        best = v;
        if gain <= 1e-15 * (1.0 + best.abs()) {
            break;
        }
    }
}

/// Extends compact potentials to every atom while keeping `z0 + z1 <= C`.
///
/// Atoms with mass but no finite-cost partner get `+inf`; atoms without mass
/// get the c-transform of the other side.
fn extend_potentials(a: &Active, f: &[f64], g: &[f64], rho0: &[f64], rho1: &[f64], c: &CostMatrix) -> PotentialPair {
    let mut z0 = vec![f64::NAN; rho0.len()];
    let mut z1 = vec![f64::NAN; rho1.len()];
    for (k, &i) in a.rows.iter().enumerate() {
        z0[i] = f[k];
    }
    for (k, &j) in a.cols.iter().enumerate() {
        z1[j] = g[k];
    }
    for i in 0..rho0.len() {
        if z0[i].is_nan() && rho0[i] > 0.0 {
            z0[i] = f64::INFINITY;
        }
    }
    for j in 0..rho1.len() {
        if z1[j].is_nan() && rho1[j] > 0.0 {
            z1[j] = f64::INFINITY;
        }
    }
    let min_over = |vals: &mut dyn Iterator<Item = (f64, f64)>| -> f64 {
        vals.filter(|(cv, _)| cv.is_finite())
            .map(|(cv, z)| if z == f64::INFINITY { f64::NEG_INFINITY } else { cv - z })
            .fold(f64::INFINITY, f64::min)
    };
    for i in 0..rho0.len() {
        if z0[i].is_nan() {
            z0[i] = min_over(&mut (0..rho1.len()).filter(|&j| rho1[j] > 0.0).map(|j| (c.get(i, j), z1[j])));
        }
    }
    for j in 0..rho1.len() {
        if z1[j].is_nan() {
            z1[j] = min_over(&mut (0..rho0.len()).map(|i| (c.get(i, j), z0[i])));
        }
    }
    PotentialPair { z0, z1 }
}

/// Removes the leading-order bias of the counting-measure entropy from
/// regularized potentials: an isolated atom of mass `m` carries
/// `z = eps log(m) / (2 + eps)` instead of 0. Atoms without mass are left as is.
pub fn debias_potentials(p: &PotentialPair, masses0: &[f64], masses1: &[f64], eps: f64) -> PotentialPair {
    let fix = |z: &[f64], m: &[f64]| -> Vec<f64> {
        z.iter()
            .zip(m)
            .map(|(&z, &m)| if m > 0.0 && z.is_finite() { z - eps * m.ln() / (2.0 + eps) } else { z })
            .collect()
    };
    PotentialPair { z0: fix(&p.z0, masses0), z1: fix(&p.z1, masses1) }
}

/// Solves the entropic unbalanced problem and reports unregularized values.
///
/// The plan is the entropic optimum at the final epsilon. Potentials are
/// shifted down by half the maximal constraint violation, then (optionally)
/// improved by exact c-transforms, so they are always dual feasible.
pub fn solve_entropic(
    rho0: &DiscreteMeasure,
    rho1: &DiscreteMeasure,
    c: &CostMatrix,
    f0: EntropyFunction,
    f1: EntropyFunction,
    opts: &SolverOptions,
) -> Result<Solution> {
    solve_entropic_masses(&rho0.masses, &rho1.masses, c, f0, f1, opts)
}

/// [`solve_entropic`] on bare mass vectors indexed like the rows and columns of `c`.
pub fn solve_entropic_masses(
    rho0: &[f64],
    rho1: &[f64],
    c: &CostMatrix,
    f0: EntropyFunction,
    f1: EntropyFunction,
    opts: &SolverOptions,
) -> Result<Solution> {
    opts.schedule.validate()?;
    if c.shape() != (rho0.len(), rho1.len()) {
        return Err(Error::invalid("cost matrix shape does not match the supports"));
    }
    if rho0.iter().chain(rho1).any(|m| !(m.is_finite() && *m >= 0.0)) {
        return Err(Error::invalid("masses must be finite and nonnegative"));
    }
    let a = Active::new(rho0, rho1, c);
    let (n0, n1) = (a.n0(), a.n1());
    let mut iterations = 0;
    let mut residual = 0.0;
    let mut converged = true;
    let stages = opts.schedule.stages();
    let mut eps_used = opts.schedule.eps_final;
    let mut f = vec![0.0; n0];
    let mut g = vec![0.0; n1];

    if n0 > 0 && n1 > 0 {
        let mut st = State {
            a: &a,
            f: f.clone(),
            g: g.clone(),
            fb: vec![0.0; n0],
            gb: vec![0.0; n1],
            kernel: vec![0.0; n0 * n1],
            eps: stages[0],
            f0,
            f1,
        };
        for (k, &eps) in stages.iter().enumerate() {
            let last = k + 1 == stages.len();
            let remaining = opts.max_iter.saturating_sub(iterations);
            let budget = if last { remaining } else { opts.schedule.inner_iters.min(remaining) };
            st.eps = eps;
            st.absorb();
            eps_used = eps;
            converged = false;
            for _ in 0..budget {
                residual = st.step()?;
                iterations += 1;
                if residual < opts.tol {
                    converged = true;
                    break;
                }
            }
        }
        f = st.f;
        g = st.g;
    }

    // Plan at the final epsilon.
    let mut gamma = Array2::zeros((rho0.len(), rho1.len()));
    for (ki, &i) in a.rows.iter().enumerate() {
        for (kj, &j) in a.cols.iter().enumerate() {
            let cij = a.cost[ki * n1 + kj];
            if cij.is_finite() {
                gamma[[i, j]] = ((f[ki] + g[kj] - cij) / eps_used).exp();
            }
        }
    }

    let entropic_potentials = extend_potentials(&a, &f, &g, rho0, rho1, c);

    // Feasibility projection, then exact polishing.
    let mut viol = f64::NEG_INFINITY;
    for i in 0..n0 {
        for j in 0..n1 {
            let cij = a.cost[i * n1 + j];
            if cij.is_finite() {
                viol = viol.max(f[i] + g[j] - cij);
            }
        }
    }
    if viol > 0.0 {
        f.iter_mut().for_each(|z| *z -= 0.5 * viol);
        g.iter_mut().for_each(|z| *z -= 0.5 * viol);
    }
    if opts.polish && n0 > 0 && n1 > 0 {
        polish(&a, &mut f, &mut g, f0, f1);
    }
    let potentials = extend_potentials(&a, &f, &g, rho0, rho1, c);
    let v = max_violation(&potentials, c);
    if v > opts.feas_tol {
        return Err(Error::Feasibility { max_violation: v });
    }

    let primal_value = primal_value_unchecked(&gamma, rho0, rho1, f0, f1, c);
    let dual_value = dual_value_unchecked(&potentials.z0, &potentials.z1, rho0, rho1, f0, f1);
    if primal_value.is_nan() || dual_value.is_nan() {
        return Err(Error::Numerical("objective evaluated to NaN".into()));
    }
    Ok(Solution {
        plan: Plan { gamma },
        potentials,
        entropic_potentials,
        primal_value,
        dual_value,
        gap: primal_value - dual_value,
        iterations,
        epsilon_final: eps_used,
        converged,
        residual,
    })
}

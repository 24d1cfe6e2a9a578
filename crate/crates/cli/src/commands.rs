//! Subcommands. Each one returns the `result` object of its report.

use std::path::{Path, PathBuf};

use clap::{Args, Subcommand, ValueEnum};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use uot_core::cone::{cone_distance, ConePoint};
use uot_core::entropy::{DiscreteMeasure, EntropyFunction};
use uot_core::manifold::{geodesic_distance, GridDensity, Point, Space};
use uot_core::monge::{ma_residual, monge_couple_from_potential, monge_objective, pushforward_with, Rebin};
use uot_core::mtw::{
    mtw_coefficients_with, mtw_condition_check, mtw_cross_check, radius_sweep, CostProfile, DerivativeRoute,
    RadialCost, SpaceKind,
};
use uot_core::polar::{polar_factorize, projection_distance, random_volume_preserving, PolarOptions};
use uot_core::solver::{
    admissibility, cost_matrix, debias_potentials, linearized_marginals, solve_entropic, wfr_two_diracs, CostSpec,
    Schedule, SolverOptions,
};

use crate::error::CliError;
use crate::input;
use crate::report::{float, num, nums};
use crate::schema::{self, InputKind};

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Entropic unbalanced transport between two discrete measures.
    Solve(SolveArgs),
    /// Monge couple of a potential on the circle grid, its pushforward and MA residual.
    Monge(MongeArgs),
    /// Polar factorization of a generalized automorphism of the circle.
    Polar(PolarArgs),
    /// MTW coefficients and weak/strong conditions of a radial cost.
    Mtw(MtwArgs),
    /// Finite-difference MTW tensor against the coefficient decomposition.
    MtwFd(MtwFdArgs),
    /// Distance on the cone over a space.
    Conedist(ConeDistArgs),
    /// Closed-form WFR distance between two Dirac masses.
    Twodirac(TwoDiracArgs),
    /// Check an input file and report violations with JSON-pointer paths.
    Validate(ValidateArgs),
    /// Run the configuration embedded in a report again.
    Rerun(RerunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Solve(_) => "solve",
            Command::Monge(_) => "monge",
            Command::Polar(_) => "polar",
            Command::Mtw(_) => "mtw",
            Command::MtwFd(_) => "mtw-fd",
            Command::Conedist(_) => "conedist",
            Command::Twodirac(_) => "twodirac",
            Command::Validate(_) => "validate",
            Command::Rerun(_) => "rerun",
        }
    }
}

/// Report body and exit code of a finished command.
pub struct Outcome {
    pub result: Value,
    pub exit: u8,
}

impl From<Value> for Outcome {
    fn from(result: Value) -> Self {
        Outcome { result, exit: 0 }
    }
}

pub fn run(command: &Command, seed: u64) -> Result<Outcome, CliError> {
    match command {
        Command::Solve(a) => solve(a).map(Into::into),
        Command::Monge(a) => monge(a).map(Into::into),
        Command::Polar(a) => polar(a, seed).map(Into::into),
        Command::Mtw(a) => mtw(a).map(Into::into),
        Command::MtwFd(a) => mtw_fd(a, seed).map(Into::into),
        Command::Conedist(a) => conedist(a).map(Into::into),
        Command::Twodirac(a) => twodirac(a).map(Into::into),
        Command::Validate(a) => validate(a),
        Command::Rerun(_) => Err(CliError::Io("rerun is resolved before dispatch".into())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostArg {
    Wfr,
    Quadratic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntropyArg {
    Kl,
    Tv,
}

impl From<EntropyArg> for EntropyFunction {
    fn from(e: EntropyArg) -> Self {
        match e {
            EntropyArg::Kl => EntropyFunction::Kl,
            EntropyArg::Tv => EntropyFunction::TotalVariation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceArg {
    Circle,
    Sphere,
    Euclidean,
    Hyperbolic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RebinArg {
    Cells,
    Linear,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SolveArgs {
    #[arg(long)]
    pub rho0: PathBuf,
    #[arg(long)]
    pub rho1: PathBuf,
    #[arg(long, value_enum, default_value = "wfr")]
    pub cost: CostArg,
    /// Truncation of the WFR cost at `delta pi/2`; 1 gives the sharp cost.
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    #[arg(long, value_enum, default_value = "kl")]
    pub entropy: EntropyArg,
    #[arg(long, default_value_t = 1.0)]
    pub eps_start: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub eps_final: f64,
    #[arg(long, default_value_t = 0.7)]
    pub decay: f64,
    #[arg(long, default_value_t = 200)]
    pub inner_iters: usize,
    #[arg(long, default_value_t = 20_000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Plan entries below this are left out of `plan_nnz`.
    #[arg(long, default_value_t = 1e-12)]
    pub plan_threshold: f64,
}

fn solve(a: &SolveArgs) -> Result<Value, CliError> {
    let rho0 = input::load_measure(&a.rho0)?;
    let rho1 = input::load_measure(&a.rho1)?;
    if rho0.space != rho1.space {
        return Err(CliError::Io("rho0 and rho1 live on different spaces".into()));
    }
    let spec = match a.cost {
        CostArg::Wfr => CostSpec::Wfr { delta: a.delta },
        CostArg::Quadratic => CostSpec::Quadratic,
    };
    spec.validate()?;
    let c = cost_matrix(&rho0.space, &spec, &rho0.points, &rho1.points)?;
    let opts = SolverOptions {
        schedule: Schedule {
            eps_start: a.eps_start,
            eps_final: a.eps_final,
            decay: a.decay,
            inner_iters: a.inner_iters,
        },
        max_iter: a.max_iter,
        tol: a.tol,
        ..SolverOptions::default()
    };
    let f: EntropyFunction = a.entropy.into();
    let sol = solve_entropic(&rho0, &rho1, &c, f, f, &opts)?;
    let adm = if rho0.mass() > 0.0 && rho1.mass() > 0.0 { Some(admissibility(&rho0, &rho1, &c)?) } else { None };
    let (_, _, lin) = linearized_marginals(&sol.potentials, &rho0, &rho1, f, f, Some((&sol.plan, &c, 1e-10)))?;
    let plan_nnz: Vec<Value> =
        sol.plan.nonzeros(a.plan_threshold).into_iter().map(|(i, j, m)| json!([i, j, num(m)])).collect();
    Ok(json!({
        "value": num(sol.primal_value),
        "dual_value": num(sol.dual_value),
        "gap": num(sol.gap),
        "iterations": sol.iterations,
        "converged": sol.converged,
        "epsilon_final": num(sol.epsilon_final),
        "residual": num(sol.residual),
        "z0": nums(&sol.potentials.z0),
        "z1": nums(&sol.potentials.z1),
        "plan_nnz": plan_nnz,
        "marginal_masses": {
            "rho0": num(rho0.mass()),
            "rho1": num(rho1.mass()),
            "plan": num(sol.plan.mass()),
            "linearized0": num(lin.mass0),
            "linearized1": num(lin.mass1),
        },
        "slackness": lin.slackness.map(num),
        "c_H": adm.map(|x| num(x.c_h)),
        "admissible": adm.map(|x| x.admissible),
    }))
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct MongeArgs {
    #[arg(long)]
    pub rho0: PathBuf,
    #[arg(long)]
    pub rho1: PathBuf,
    /// Potential on the grid nodes, or on scattered angles (resampled by
    /// nearest-node injection). Solved from `rho0`, `rho1` when omitted.
    #[arg(long)]
    pub potential: Option<PathBuf>,
    /// Also evaluate the Monge-Ampere residual.
    #[arg(long)]
    pub check_ma: bool,
    #[arg(long, value_enum, default_value = "cells")]
    pub rebin: RebinArg,
    /// Final regularization of the inner solve, in grid spacings.
    #[arg(long, default_value_t = 0.015)]
    pub eps_per_spacing: f64,
    /// Remove the entropic offset of the solved potential.
    #[arg(long)]
    pub debias: bool,
    #[arg(long, default_value_t = 100_000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

fn grid_measure(d: &GridDensity) -> Result<DiscreteMeasure, CliError> {
    Ok(DiscreteMeasure::new(d.grid.space, d.grid.points(), d.node_masses())?)
}

fn monge(a: &MongeArgs) -> Result<Value, CliError> {
    let r0 = input::load_density(&a.rho0)?;
    let r1 = input::load_density(&a.rho1)?;
    if r0.grid != r1.grid {
        return Err(CliError::Io("rho0 and rho1 live on different grids".into()));
    }
    let (z, solver) = match &a.potential {
        Some(p) => (input::load_potential(p, &r0.grid)?, Value::Null),
        None => {
            let (m0, m1) = (grid_measure(&r0)?, grid_measure(&r1)?);
            let c = cost_matrix(&r0.grid.space, &CostSpec::wfr(), &m0.points, &m1.points)?;
            let opts = SolverOptions { max_iter: a.max_iter, tol: a.tol, ..SolverOptions::default() }
                .with_eps_final(a.eps_per_spacing * r0.grid.spacing);
            let kl = EntropyFunction::Kl;
            let sol = solve_entropic(&m0, &m1, &c, kl, kl, &opts)?;
            let pot = if a.debias {
                debias_potentials(&sol.entropic_potentials, &m0.masses, &m1.masses, sol.epsilon_final)
            } else {
                sol.entropic_potentials.clone()
            };
            let info = json!({
                "dual_value": num(sol.dual_value),
                "value": num(sol.primal_value),
                "epsilon": num(sol.epsilon_final),
                "iterations": sol.iterations,
                "converged": sol.converged,
                "debiased": a.debias,
            });
            (pot.z0, info)
        }
    };
    let tc = monge_couple_from_potential(&z, &r0)?;
    let rebin = match a.rebin {
        RebinArg::Cells => Rebin::Cells,
        RebinArg::Linear => Rebin::Linear,
    };
    let pf = pushforward_with(&tc, &r0, rebin)?;
    let mut out = json!({
        "n": r0.n(),
        "potential_source": if a.potential.is_some() { "file" } else { "solved" },
        "solver": solver,
        "tv": num(pf.density.tv_distance(&r1)?),
        "mass_pushforward": num(pf.density.mass()),
        "mass_rho1": num(r1.mass()),
        "monge_objective": num(monge_objective(&tc, &r0)?),
        "phi": nums(&tc.phi),
        "lam": nums(&tc.lam),
    });
    if a.check_ma {
        let ma = ma_residual(&z, &r0, &r1)?;
        out["ma"] = json!({
            "max": num(ma.max_abs()),
            "mean": num(ma.mean_abs()),
            "near_cut": ma.near_cut,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PolarArgs {
    #[arg(long)]
    pub map: PathBuf,
    /// Declared grid size; must match the map.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long, default_value_t = 0.03)]
    pub eps_per_spacing: f64,
    #[arg(long)]
    pub no_debias: bool,
    #[arg(long, default_value_t = 100_000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long)]
    pub tol_vol: Option<f64>,
    #[arg(long)]
    pub tol_rec: Option<f64>,
    /// Random volume-preserving maps compared against the stabilizer.
    #[arg(long, default_value_t = 0)]
    pub competitors: usize,
    /// Largest node displacement of the competitors' transpositions.
    #[arg(long, default_value_t = 8)]
    pub reach: usize,
}

fn polar(a: &PolarArgs, seed: u64) -> Result<Value, CliError> {
    let g = input::load_map(&a.map)?;
    if let Some(n) = a.grid {
        if n != g.grid.n {
            return Err(CliError::Io(format!("--grid {n} but the map has {} nodes", g.grid.n)));
        }
    }
    let defaults = PolarOptions::default();
    let opts = PolarOptions {
        solver: SolverOptions { max_iter: a.max_iter, tol: a.tol, ..defaults.solver },
        eps_per_spacing: a.eps_per_spacing,
        debias: !a.no_debias,
        tol_vol: a.tol_vol,
        tol_rec: a.tol_rec,
    };
    let pf = polar_factorize(&g, &opts)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut closest = f64::INFINITY;
    for _ in 0..a.competitors {
        let sigma = random_volume_preserving(g.grid, a.reach, &mut rng)?;
        closest = closest.min(projection_distance(&g, &sigma)? - pf.diagnostics.projection_distance);
    }
    Ok(json!({
        "n": g.grid.n,
        "diagnostics": serde_json::to_value(&pf.diagnostics).map_err(|e| CliError::Io(e.to_string()))?,
        "monge_part": { "phi": nums(&pf.monge_part.phi), "lam": nums(&pf.monge_part.lam) },
        "stabilizer_part": { "phi": nums(&pf.stabilizer_part.phi), "lam": nums(&pf.stabilizer_part.lam) },
        "z0": nums(&pf.z0),
        "z1": nums(&pf.z1),
        "competitors": {
            "count": a.competitors,
            "closest_margin": if a.competitors > 0 { num(closest) } else { Value::Null },
        },
    }))
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct MtwArgs {
    #[arg(long, value_enum, default_value = "sphere")]
    pub space: SpaceArg,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    /// Diameter of Euclidean or hyperbolic domains (unbounded by default).
    #[arg(long)]
    pub diameter: Option<f64>,
    #[arg(long, value_enum, default_value = "wfr")]
    pub cost: CostArg,
    #[arg(long, default_value_t = 10.0)]
    #[serde(with = "float")]
    pub s_max: f64,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    /// Use finite differences instead of closed-form derivatives.
    #[arg(long)]
    pub numeric: bool,
    /// Also sweep the sphere radius (WFR cost) over these values.
    #[arg(long, value_delimiter = ',')]
    pub sweep: Vec<f64>,
    /// Write the per-sample coefficients as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

fn radial_cost(
    space: SpaceArg,
    radius: f64,
    diameter: Option<f64>,
    cost: CostArg,
    s_max: f64,
) -> Result<RadialCost, CliError> {
    let kind = match space {
        SpaceArg::Sphere => SpaceKind::Sphere { radius },
        SpaceArg::Euclidean => SpaceKind::Euclidean,
        SpaceArg::Hyperbolic => SpaceKind::Hyperbolic,
        SpaceArg::Circle => {
            return Err(CliError::Io("MTW analysis needs a sphere, Euclidean or hyperbolic space".into()))
        }
    };
    let profile = match cost {
        CostArg::Wfr => CostProfile::Wfr,
        CostArg::Quadratic => CostProfile::Quadratic,
    };
    Ok(RadialCost::new(kind, profile, diameter, s_max)?)
}

fn write_csv(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(row.iter().map(|x| format!("{x:e}"))).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}

fn mtw(a: &MtwArgs) -> Result<Value, CliError> {
    let cost = radial_cost(a.space, a.radius, a.diameter, a.cost, a.s_max)?;
    let check = mtw_condition_check(&cost, a.samples)?;
    let samples = if a.numeric {
        // the s = 0 limit is recomputed along the numeric route too
        std::iter::once(0.0)
            .chain(check.samples.iter().skip(1).map(|c| c.s))
            .map(|s| mtw_coefficients_with(&cost, s, DerivativeRoute::Numeric))
            .collect::<Result<Vec<_>, _>>()?
    } else {
        check.samples.clone()
    };
    // distances h(s) of the sampled parameters
    let distances: Vec<f64> = samples.iter().filter(|c| c.s > 0.0).map(|c| cost.h(c.s)).collect();
    let sweep = {
        let rows = a
            .sweep
            .par_iter()
            .map(|&r| radius_sweep(&[r], a.s_max, a.samples).map(|mut v| v.remove(0)))
            .collect::<Result<Vec<_>, _>>()?;
        rows.iter()
            .map(|r| {
                json!({
                    "radius": num(r.radius),
                    "weak": r.weak,
                    "strong": r.strong,
                    "beta_at_zero": num(r.beta_at_zero),
                    "min_margin": num(r.min_margin),
                })
            })
            .collect::<Vec<_>>()
    };
    if let Some(path) = &a.csv {
        write_csv(
            path,
            &["s", "alpha", "beta", "gamma", "delta"],
            samples.iter().map(|c| vec![c.s, c.alpha, c.beta, c.gamma, c.delta]),
        )?;
    }
    Ok(json!({
        "cost": {
            "space": a.space,
            "radius": num(a.radius),
            "profile": a.cost,
            "diameter": num(cost.diameter),
            "s_max": num(cost.s_max),
        },
        "route": if a.numeric { "numeric" } else { "closed_form" },
        "weak": check.weak,
        "strong": check.strong,
        "min_margin": num(check.min_margin),
        "violations": check.violations.iter().map(|v| json!({"s": num(v.s), "which": v.which, "value": num(v.value)})).collect::<Vec<_>>(),
        "inversion_error": num(cost.inversion_error(&distances)),
        "samples": samples.iter().map(|c| json!({
            "s": num(c.s), "alpha": num(c.alpha), "beta": num(c.beta), "gamma": num(c.gamma), "delta": num(c.delta),
        })).collect::<Vec<_>>(),
        "sweep": sweep,
    }))
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct MtwFdArgs {
    #[arg(long, value_enum, default_value = "sphere")]
    pub space: SpaceArg,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    #[arg(long, value_enum, default_value = "wfr")]
    pub cost: CostArg,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value_t = 2e-3)]
    pub rel_tol: f64,
    /// Used where the decomposition vanishes.
    #[arg(long, default_value_t = 5e-3)]
    pub abs_tol: f64,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

fn mtw_fd(a: &MtwFdArgs, seed: u64) -> Result<Value, CliError> {
    let cost = radial_cost(a.space, a.radius, None, a.cost, f64::INFINITY)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = mtw_cross_check(&cost, a.trials, &mut rng)?;
    if let Some(path) = &a.csv {
        write_csv(
            path,
            &["fd", "decomposition", "abs_error", "rel_error"],
            rows.iter().map(|r| vec![r.fd, r.decomposition, r.abs_error, r.rel_error]),
        )?;
    }
    let agree = rows.iter().all(|r| r.agrees(a.rel_tol, a.abs_tol));
    let max = |f: fn(&uot_core::mtw::CrossCheckRow) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    Ok(json!({
        "trials": rows.len(),
        "all_agree": agree,
        "max_abs_error": num(max(|r| r.abs_error)),
        "max_rel_error": num(max(|r| if r.decomposition.abs() > 1e-9 { r.rel_error } else { 0.0 })),
        "rows": rows.iter().map(|r| json!({
            "x": nums(&r.x), "u": nums(&r.u), "v": nums(&r.v), "w": nums(&r.w),
            "fd": num(r.fd), "decomposition": num(r.decomposition),
            "abs_error": num(r.abs_error), "rel_error": num(r.rel_error),
        })).collect::<Vec<_>>(),
    }))
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ConeDistArgs {
    #[arg(long, value_enum, default_value = "circle")]
    pub space: SpaceArg,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    /// Base point coordinates, comma separated (an angle on the circle).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    pub x: Vec<f64>,
    #[arg(long)]
    pub r1: f64,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    pub y: Vec<f64>,
    #[arg(long)]
    pub r2: f64,
}

fn space_of(kind: SpaceArg, dim: usize, radius: f64) -> Space {
    match kind {
        SpaceArg::Circle => Space::circle(),
        SpaceArg::Sphere => Space::sphere(dim, radius),
        SpaceArg::Euclidean => Space::euclidean(dim),
        SpaceArg::Hyperbolic => Space::hyperbolic(dim),
    }
}

fn conedist(a: &ConeDistArgs) -> Result<Value, CliError> {
    let space = space_of(a.space, a.dim, a.radius);
    space.validate()?;
    let p = ConePoint::new(Point::new(a.x.clone()), a.r1)?;
    let q = ConePoint::new(Point::new(a.y.clone()), a.r2)?;
    let base = geodesic_distance(&space, &a.x, &a.y)?;
    let d = cone_distance(&space, &p, &q)?;
    Ok(json!({ "distance": num(d.distance), "squared": num(d.squared), "base_distance": num(base) }))
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct TwoDiracArgs {
    #[arg(long)]
    pub a: f64,
    #[arg(long)]
    pub b: f64,
    /// Distance between the two atoms.
    #[arg(long)]
    pub d: f64,
    /// Also run the entropic solver on the pair.
    #[arg(long)]
    pub solve: bool,
    #[arg(long, default_value_t = 1e-3)]
    pub eps_final: f64,
}

fn twodirac(a: &TwoDiracArgs) -> Result<Value, CliError> {
    if !(a.d >= 0.0 && a.d.is_finite()) {
        return Err(CliError::Io("--d must be a finite nonnegative distance".into()));
    }
    let line = Space::euclidean(1);
    let value = wfr_two_diracs(&line, a.a, &[0.0], a.b, &[a.d])?;
    let mut out = json!({ "value": num(value) });
    if a.solve {
        let r0 = DiscreteMeasure::dirac(line, Point::new(vec![0.0]), a.a)?;
        let r1 = DiscreteMeasure::dirac(line, Point::new(vec![a.d]), a.b)?;
        let c = cost_matrix(&line, &CostSpec::wfr(), &r0.points, &r1.points)?;
        let kl = EntropyFunction::Kl;
        let sol = solve_entropic(&r0, &r1, &c, kl, kl, &SolverOptions::default().with_eps_final(a.eps_final))?;
        out["solver_value"] = num(sol.primal_value);
        out["relative_error"] = num((sol.primal_value - value).abs() / value.abs().max(f64::MIN_POSITIVE));
    }
    Ok(out)
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ValidateArgs {
    pub path: PathBuf,
    /// Detected from the keys when omitted.
    #[arg(long, value_enum)]
    pub kind: Option<InputKind>,
}

fn validate(a: &ValidateArgs) -> Result<Outcome, CliError> {
    let root = input::read_json(&a.path)?;
    let (kind, violations) = match a.kind.or_else(|| schema::detect(&root)) {
        Some(k) => (Some(k), schema::check(k, &root)),
        None => (
            None,
            vec![schema::Violation { pointer: String::new(), message: "cannot tell the kind of this file".into() }],
        ),
    };
    let valid = violations.is_empty();
    Ok(Outcome {
        result: json!({ "kind": kind, "valid": valid, "violations": violations }),
        exit: if valid { 0 } else { 1 },
    })
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct RerunArgs {
    pub report: PathBuf,
}

/// Command and seed embedded in a report.
pub fn embedded_config(report: &Path) -> Result<(Command, u64), CliError> {
    let root = input::read_json(report)?;
    let bad = |m: &str| CliError::Schema {
        path: report.display().to_string(),
        violations: vec![schema::Violation { pointer: "/config".into(), message: m.into() }],
    };
    let mut config = root.get("config").cloned().ok_or_else(|| bad("missing"))?;
    let seed = config.get("seed").and_then(Value::as_u64).ok_or_else(|| bad("missing seed"))?;
    if let Value::Object(m) = &mut config {
        m.remove("seed");
    }
    let command: Command = serde_json::from_value(config).map_err(|e| bad(&e.to_string()))?;
    if matches!(command, Command::Rerun(_)) {
        return Err(bad("nested rerun"));
    }
    Ok((command, seed))
}

//! Static unbalanced transport: costs, duality, the entropic solver and
//! small exact reference solvers.

mod cost;
mod diagnostics;
mod entropic;
mod objective;
mod oracle;
mod semicoupling;

pub use cost::{
    admissibility, c_transform, c_transform_with_argmin, cost_matrix, wfr_two_diracs, Admissibility, CostMatrix,
    CostSpec, Side,
};
pub use diagnostics::{linearized_marginals, OtOptimalityReport};
pub use entropic::{debias_potentials, solve_entropic, solve_entropic_masses, Schedule, Solution, SolverOptions};
pub use objective::{dual_objective, max_violation, primal_objective, Plan, PotentialPair, FEAS_TOL};
pub use oracle::{convex_oracle, kl_stationarity, OracleResult, ORACLE_MAX_ENTRIES};
pub use semicoupling::{
    semicoupling_value, solve_semicoupling_small, SemiCoupling, SemiCouplingResult, SEMICOUPLING_MAX_ATOMS,
};

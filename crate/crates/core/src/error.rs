use thiserror::Error;

/// Errors raised by geometry, transport and regularity routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Malformed input: dimension mismatch, bad sizes, out-of-range parameters.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Input sits on a degenerate configuration (cut locus, cone apex).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Cone exponential evaluated past the radial branch `1 + alpha t <= 0`.
    #[error("branch cut reached: 1 + alpha t = {0}")]
    BranchCut(f64),

    /// Parameter outside the domain of a scalar function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Supports do not admit finite-cost transport.
    #[error("admissibility error: {0}")]
    Admissibility(String),

    /// Potential pair violates `z0 + z1 <= C`.
    #[error("infeasible potentials: max violation {max_violation:e}")]
    Feasibility { max_violation: f64 },

    /// Target density vanishes where a Monge-Ampere residual is evaluated.
    #[error("singular target density at node {node}")]
    Singularity { node: usize },

    /// Instance too large for a brute-force routine.
    #[error("size exceeded: {0}")]
    SizeExceeded(String),

    /// NaN or overflow detected during an iterative solve.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Admissibility and feasibility failures are reported separately by the CLI.
    pub fn is_admissibility(&self) -> bool {
        matches!(self, Error::Admissibility(_) | Error::Feasibility { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;

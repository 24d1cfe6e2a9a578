//! Unbalanced optimal transport with Csiszar marginal penalties on model
//! manifolds, centred on the Wasserstein-Fisher-Rao cost
//! `c(x, y) = -log cos^2(min(d(x, y), pi/2))`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cone;
pub mod entropy;
pub mod error;
pub mod manifold;
pub mod monge;
pub mod mtw;
pub mod polar;
pub mod solver;

pub use error::{Error, Result};

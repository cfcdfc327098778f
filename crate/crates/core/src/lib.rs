//! Deterministic simulation and analysis of a coupled asset-price /
//! bond-price system with periodically collapsing bubbles.
//!
//! - [`model`]: vector field, Jacobian, trace
//! - [`equilibria`]: fixed points, stability, critical lines, regions, scans
//! - [`integrate`]: adaptive Dormand-Prince integration with event refinement
//!   and the expansion exponent
//! - [`bubbles`]: bubble metrics, super-exponential fits, critical exponents

// `!(a < b)` is used on purpose where NaN must fail the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bubbles;
pub mod equilibria;
pub mod error;
pub mod integrate;
pub mod model;

pub use error::{Error, Result};
pub use model::{JacobianMatrix, ModelParams, State};

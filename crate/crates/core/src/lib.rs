//! Weighted translation semigroups on L²(ℝ₊): operators, the analytic model,
//! spectral estimates and class membership.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod classify;
pub mod cli;
pub mod config;
pub mod error;
pub mod expr;
pub mod l2grid;
pub mod model;
pub mod quadrature;
pub mod sampling;
pub mod semigroup;
pub mod spectral;
pub mod symbol;
pub mod verify;

pub use error::{Error, Result};

//! Achievable-rate maximization for an IRS-assisted MIMO secondary link
//! sharing spectrum with primary receivers under interference constraints.

// `!(x > 0.0)` style checks are there to reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod config;
pub mod error;
pub mod experiments;
pub mod gradients;
pub mod objective;
pub mod projections;
pub mod report;
pub mod solver;

pub use error::{Error, Result};

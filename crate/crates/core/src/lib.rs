//! Stochastic rounding emulation, exact probabilistic oracles and
//! forward-error bounds for the inner product and Horner's rule.

pub mod bounds;
pub mod error;
pub mod fp_core;
pub mod harness;
pub mod kernels;
pub mod oracle;
pub mod sr_arith;

mod ddouble;
mod eft;

pub use error::{Error, Result};
pub use fp_core::{FloatFormat, Theta};
pub use sr_arith::{RngStream, RoundingMode};

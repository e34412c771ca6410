//! Behavioral simulator for low-energy-barrier MTJ p-bits.

// `!(x > 0.0)` is deliberate throughout: NaN has to fail the range checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dbn;
pub mod device;
mod error;
pub mod experiments;
pub mod mitigation;
pub mod seed;
pub mod variation;

pub use error::{Error, Result};

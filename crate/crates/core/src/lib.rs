//! Secrecy performance of fluid reconfigurable intelligent surfaces:
//! correlated fading, element selection, Monte Carlo estimates of the secrecy
//! outage probability and average secrecy capacity, and the moment-matched
//! closed forms they are compared against.

// `!(x > 0.0)` is used on purpose so that NaN fails validation; tabulated
// constants keep the digits they were published with.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod channel;
pub mod control;
pub mod error;
pub mod harness;
pub mod secrecy;
pub mod specfun;
pub mod surface;

pub use error::{Error, Result};

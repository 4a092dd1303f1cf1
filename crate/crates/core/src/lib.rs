//! Complaint-reporting bias analysis: violation prediction, building
//! classification, density hotspots and group comparisons.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classify;
pub mod data;
pub mod error;
pub mod features;
pub mod gbdt;
pub mod geo;
pub mod pipeline;
pub mod rng;
pub mod stats;
pub mod synth;

pub use error::{Error, ErrorKind, Result};
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

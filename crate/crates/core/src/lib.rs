//! Probabilities for the causal ordering of detection events.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod classical;
pub mod detector;
pub mod error;
pub mod numerics;
pub mod order;
pub mod par;
pub mod quantum;
pub mod wiener;

pub use error::{Error, Result};

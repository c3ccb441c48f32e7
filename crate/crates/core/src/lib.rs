//! Stationary and almost periodic processes of moving-average type driven by
//! Lévy bases: characteristic exponents, decreasing rearrangements, distances
//! between laws, explicit perturbation bounds, simulation and limit experiments.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod aperiodicity;
pub mod bounds;
pub mod clt;
pub mod error;
pub mod io;
pub mod kernel;
pub mod levy;
pub mod metrics;
pub mod quad;
pub mod rearrange;
pub mod simulate;
pub mod trig;

pub use error::{Error, Result};

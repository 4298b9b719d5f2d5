// Negated float comparisons are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Link-level simulation and analysis of a bistatic OFDM uplink used for
//! both data transfer and delay-Doppler sensing.

pub mod bounds;
pub mod channel;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod harness;
pub mod link;
pub mod registry;
pub mod sensing;

pub use error::{Error, Result};

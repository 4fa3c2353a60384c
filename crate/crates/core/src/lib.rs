//! Polarization characteristic functions and quasi-probability distributions
//! of two-mode light, the photocount statistics of a polarization tomography
//! setup, and the inversion from measured statistics back to distributions.
//!
//! `no_std` with `alloc`; file formats and the command line live in the
//! `polqpd` crate.
#![no_std]
// `!(x > 0.0)` is used on purpose so NaN is rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod charfn;
pub mod error;
pub mod grid;
pub mod measure;
pub mod numerics;
pub mod pqpd;
pub mod reconstruct;
pub mod states;

pub use error::{Error, Result};

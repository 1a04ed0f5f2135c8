//! Markovian master equations for open quantum systems: Redfield, Davies,
//! and the coarse-grained master equation (CGME) in time-independent and
//! driven form, with bath characterization and error-bound calculators.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]
// NaN-rejecting `!(x > 0.0)` guards are intentional.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod operator;
pub mod quad;
pub mod bath;
pub mod generators;
pub mod models;
pub mod driving;
pub mod evolve;
pub mod diagnostics;

pub use error::{Error, Result};

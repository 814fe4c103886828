//! Numerical laboratory for eigenfunctions of the Laplacian on flat tori.
//!
//! Everything here is `no_std` with `alloc`; floating point goes through
//! `libm` so results are bit-identical across platforms and builds.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod arith;
pub mod budget;
pub mod caps;
pub mod diophantine;
pub mod dsu;
pub mod error;
pub mod expsum;
pub mod lattice;
pub mod nodal;
pub mod report;
pub mod restriction;
pub mod rng;
pub mod stats;
pub mod surface;

pub use budget::Budget;
pub use error::{Error, Result};
pub use num_complex::Complex64;

//! Spectral solver for linear and cubic Schrödinger equations posed on the
//! whole real line.
//!
//! The line is split into a finite interior and two exterior domains that are
//! compactified with `s = 1/x`, so that infinity becomes a collocation point.
//! Each domain carries a Chebyshev grid; domains are glued with value and
//! derivative matching rows. Damping layers and transparent boundary
//! conditions are provided on truncated domains for comparison.
//!
//! The crate is `no_std` and only needs `alloc`.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod cheb;
pub mod error;
pub mod integrators;
pub mod linalg;
pub mod multidomain;
pub mod pml;
pub mod problems;
pub mod tbc;

pub use error::{Error, Result};

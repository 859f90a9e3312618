//! Markovian master equations for multipartite systems coupled to thermal
//! bosonic baths.
//!
//! The crate builds Liouvillian superoperators under Redfield, full-secular,
//! partial-secular and unified (clustered) policies, in global or local form,
//! and computes steady states, propagators, heat currents and symmetry block
//! decompositions. It is `no_std` with `alloc`; the default `std` feature only
//! switches on faster kernels in the linear-algebra backend.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod bath;
pub mod error;
mod expm;
mod linalg;
pub mod liouvillian;
mod math;
pub mod models;
pub mod operators;
#[cfg(feature = "quadrature")]
pub mod quadrature;
pub mod secular;
pub mod solve;
pub mod special;
pub mod spectral;
pub mod symmetry;

pub use error::{Error, Result};
pub use faer::{c64, Mat};
pub use math::EULER_GAMMA;

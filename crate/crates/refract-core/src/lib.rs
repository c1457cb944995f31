//! Refracted spectrally negative Lévy processes.
//!
//! A refracted process moves like a Lévy process `X` while positive and like a
//! second Lévy process `Y` while negative. When `X` passes below zero by a jump
//! from `pre` to `post`, the lower motion starts from `ψ(pre, post)`.
//!
//! The crate covers:
//!
//! * [`levy`]: Laplace exponents, right inverses and compound-Poisson approximants.
//! * [`path`]: exact event-driven simulation of approximants, stable increments
//!   and an Euler scheme for the refraction SDE.
//! * [`landing`] and [`refraction`]: landing functions and the refracted and
//!   dual path engines.
//! * [`scale`]: scale functions, exit probabilities and potential densities.
//! * [`mc`]: resolvent, exit and duality-gap estimators and convergence sweeps.
//! * [`duality`]: deterministic checks for the stable landing pair.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]
#![forbid(unsafe_code)]
// `!(a < b)` style guards are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod duality;
pub mod error;
pub mod landing;
pub mod levy;
pub mod mc;
pub mod num;
pub mod path;
pub mod refraction;
pub mod rng;
pub mod scale;

pub use error::{Error, Result};
pub use num_complex::Complex64;

//! Discriminator rejection sampling (DRS) for small GANs.
//!
//! This crate is `no_std` (it needs `alloc`) and holds everything that is pure
//! computation: a tiny fully-connected network with exact backprop and Adam,
//! the Gaussian-grid target, GAN losses and training loops, the DRS
//! acceptance machinery, exact rejection sampling, and the evaluation metrics
//! used on the 25-Gaussian benchmark. File formats, experiment orchestration
//! and the command line live in the `drslab` crate.
//!
//! All arithmetic is `f64`. Randomness always comes from a caller-provided
//! [`rand::Rng`], so every routine is deterministic given its stream.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod drs;
pub mod error;
pub mod eval;
pub mod loss;
pub mod math;
pub mod nn;
pub mod rng;
pub mod stats;
pub mod target;
pub mod train;

pub use error::{Error, Result};

/// A point in the 2D benchmark space (data space and latent space alike).
pub type Point = [f64; 2];

//! Gradient descent with momentum, Nesterov lookahead and super-acceleration.
//!
//! The lookahead distance `sigma` generalizes Nesterov momentum: the gradient is
//! evaluated at `theta + sigma * m`, i.e. several estimated steps ahead. This
//! crate holds the pure numerical parts of the toolkit:
//!
//! - [`landscape`]: objective functions with analytic gradients and their
//!   verification oracles.
//! - [`optim`]: the optimizer iterations and instrumented trajectory runs.
//! - [`oscillator`]: damped harmonic oscillator surrogates and the closed-form
//!   critical-damping lookahead.
//! - [`fitting`]: timescale extraction from trajectories and numerical sweeps
//!   for the optimal lookahead.
//! - [`mlp`]: a small sigmoid multilayer perceptron exposed as a [`Landscape`].
//!
//! Everything here is `no_std` (with `alloc`); file IO, CLI and serialization
//! formats live in the companion `superaccel-lab` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod fitting;
pub mod landscape;
pub mod linalg;
pub mod mlp;
pub mod optim;
pub mod oscillator;
pub mod rng;

pub use error::{Error, Result};
pub use landscape::Landscape;

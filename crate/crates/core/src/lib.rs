//! Composed fine-tuning workbench.
//!
//! A base predictor is trained through a frozen denoiser that maps arbitrary
//! outputs back onto a set of valid outputs. This crate holds the pure,
//! allocation-only parts of the workbench:
//!
//! - [`valid_set`]: discrete valid output sets, hard projection and adjacency statistics.
//! - [`spline`]: linear splines, their function norm, staircase targets and the explicit
//!   constructions bounding the norm of standard and composed predictors.
//! - [`relu_net`]: two-layer ReLU networks, weight-norm complexity, backprop and training.
//! - [`composed`]: continuous composed training through a frozen learned denoiser.
//! - [`discrete`]: discrete composed objective with the score-function (REINFORCE) estimator.
//! - [`sanstype`]: the SansType pseudocode-to-code toy language.
//!
//! IO, file formats and the command-line harness live in the `composed-lab` crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod composed;
pub mod discrete;
mod error;
pub mod relu_net;
pub mod rng;
pub mod sanstype;
pub mod spline;
pub mod valid_set;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

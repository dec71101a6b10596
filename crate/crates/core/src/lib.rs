//! Permutation tests for feature effects in feed-forward neural networks.
//!
//! The tests use the partial derivatives of a trained network's output with
//! respect to one input as their statistic substrate:
//!
//! * [`permtest::association_test`] asks whether a feature is associated
//!   with the outcome at all;
//! * [`permtest::nonlinearity_test`] asks whether that association is
//!   nonlinear;
//! * [`permtest::combined_protocol`] runs the first and, when it rejects,
//!   the second.
//!
//! Supporting pieces: [`nn`] (networks, SGD, input gradients), [`spline`]
//! and [`additive`] (cubic regression splines and the additive model behind
//! the residual permutations), [`simgen`] (simulation generators and power
//! studies) and [`cli`] (the `gradperm` command-line driver).
//!
//! See the crate's `examples/` directory for one runnable program per
//! capability.

pub mod additive;
pub mod cli;
pub mod data;
pub mod error;
pub mod linalg;
pub mod nn;
pub mod parallel;
pub mod permtest;
pub mod seed;
pub mod simgen;
pub mod spline;

pub use data::Dataset;
pub use error::{Error, Result};
pub use nn::{Network, NetworkConfig, OutputActivation};
pub use permtest::{CombinedResult, TestConfig, TestKind, TestResult, Verdict};
pub use spline::Smoothing;

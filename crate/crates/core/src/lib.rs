//! f-DP accounting for DP-SGD with random shuffling.
//!
//! The crate evaluates and inverts the Berry–Esseen based closed-form bound
//! on the trade-off function of one shuffled epoch, composes it over epochs,
//! computes the asymptotic Gaussian-DP coefficients for shuffling and Poisson
//! subsampling, and validates the analytical bounds with a reproducible Monte
//! Carlo simulation of the optimal adversarial test.

pub mod accountant;
pub mod asymptotics;
pub mod cli;
pub mod error;
pub mod lognormal;
pub mod montecarlo;
pub mod numerics;
pub mod tradeoff;

pub use error::{Error, Result};

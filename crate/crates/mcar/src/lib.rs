//! Tests for the missing-completely-at-random (MCAR) assumption, built on
//! covariances between response indicators and the data columns, together
//! with the machinery to study them: multivariate sample generation,
//! missingness mechanisms (amputation), and a Monte Carlo benchmark
//! harness for empirical size and power.
//!
//! The main entry points are [`ustat::test_an_prime`] (the indicator
//! covariance test that also uses partially observed columns),
//! [`ustat::test_an`] (its predecessor, restricted to fully observed
//! columns), and [`little::little_d2`] (Little's d-squared baseline).

pub mod bench;
pub mod config;
pub mod data;
pub mod error;
pub mod little;
pub mod numerics;
pub mod simgen;
pub mod ustat;

pub use error::{Error, Result};

//! Bayesian optimization driven by acquisition-function generators.
//!
//! A Gaussian-process surrogate ([`gp`]) supplies posterior means and standard
//! deviations to the closed-form acquisitions in [`acquisition`]. A
//! [`policy::PolicySpec`] decides, at every iteration, which acquisition (or
//! blend of acquisitions) scores the candidate grid. [`bo`] runs the loop,
//! [`meta`] tunes blend weights with an outer BO loop, [`benchmarks`] holds the
//! analytic test problems and [`harness`] turns repeated runs into regret
//! curves, CSV, JSON and SVG.

pub mod acquisition;
pub mod benchmarks;
pub mod bo;
pub mod error;
pub mod gp;
pub mod harness;
pub mod meta;
pub mod policy;

pub use error::{Error, Result};

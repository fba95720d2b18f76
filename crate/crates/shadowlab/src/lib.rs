//! Infinite-alphabet one-sided shift spaces in two exact metric models.
//!
//! The library implements the OTW full shift over the positive naturals,
//! enumerations of the finite words (the block construction and a staged
//! construction whose metric defeats Lipschitz shadowing), the OTW and prefix
//! ultrametrics with exact rank arithmetic, constructive shadowing-point
//! algorithms, and a machine-checkable refutation certificate for the failure
//! of Lipschitz shadowing. No distance is ever represented in floating point.

pub mod counterexample;
pub mod enumeration;
pub mod error;
pub mod metrics;
pub mod report;
pub mod sampling;
pub mod shadowing;
pub mod words;

pub use error::{Error, Result};

//! Unbiased counting over fixed collections with detector-guided importance
//! sampling and human screening.
//!
//! A detector produces an approximate count `g(s)` for every unit of a
//! collection. Units are drawn proportionally to `g`, a human supplies the
//! true count `f(s)` for each drawn unit, and importance weights `f/g`
//! correct the detector total. Many regions can be estimated jointly from a
//! single sample, with confidence intervals and optional control variates.
//!
//! Modules:
//! - [`domain`]: units, regions, labels, dataset and region files
//! - [`sampler`]: seedable streams and proportional / uniform draws
//! - [`estimators`]: point estimators, intervals, exact bias and variance
//! - [`calibration`]: isotonic calibration baseline and control variates
//! - [`evaluation`]: synthetic data, metrics and the trial harness
//! - [`session`]: screening sessions and their HTTP service

pub mod calibration;
pub mod domain;
pub mod error;
pub mod estimators;
pub mod evaluation;
pub mod numeric;
pub mod sampler;
pub mod session;

pub use error::{Error, Result};

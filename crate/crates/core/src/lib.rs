//! Benchmark-guided exploratory projection pursuit.
//!
//! Given a dataset `X` and a benchmark dataset `Y` with the same variables,
//! searches for `d`-dimensional orthonormal projections that maximize the
//! integrated distance between the spatial distribution functions of the
//! projected samples.

pub mod benchmark;
pub mod csvio;
pub mod error;
pub mod frame;
pub mod index;
pub mod optimize;
pub mod pipeline;
pub mod sobol;
pub mod spatial;
pub mod svg;

pub use error::{Error, Result};

//! Accelerated multiplicative weights update on products of probability
//! simplices: the simplex geometry under the Shahshahani metric, the
//! acceleration schedule, the optimizers (classic and accelerated
//! multiplicative weights, an entropic accelerated mirror descent baseline),
//! a benchmark objective corpus, and a spectral certifier for instability of
//! the update map at strict saddle points.

pub mod algorithms;
pub mod error;
pub mod geometry;
pub mod objectives;
pub mod schedule;
pub mod spectral;

pub use error::{AmwuError, Result};

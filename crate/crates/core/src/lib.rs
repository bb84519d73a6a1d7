//! Echo state networks with dimensionality-reduced readouts, a genetic
//! hyperparameter search and attractor invariant estimation.

pub mod attractor;
pub mod dimred;
pub mod error;
pub mod experiment;
pub mod hyperopt;
pub mod linalg;
pub mod pipeline;
pub mod readout;
pub mod reservoir;
pub mod rng;
pub mod signals;
pub mod tsa;

pub use error::{Error, Result};

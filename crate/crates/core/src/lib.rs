//! Hybrid time-series estimation of microcanonical observables for the
//! two-dimensional Fermi-Hubbard model.
//!
//! The pipeline compiles Trotterized evolution into native gates, measures
//! Loschmidt amplitudes with a GHZ-style interferometer on a dense
//! statevector, rebuilds the filtered density of states from a cosine-filter
//! time series, and samples product states with Metropolis-Hastings.

pub mod circuit;
pub mod error;
pub mod filter;
pub mod interferometry;
pub mod mitigation;
pub mod model;
pub mod noise;
pub mod resources;
pub mod sampler;
pub mod sim;

pub use error::{Error, Result};

//! Basis-function design embeddings for soft-robot co-design.
//!
//! A flat design vector is decoded into occupancy, multi-material labels,
//! morphed node positions and actuation signals through precomputed Gaussian
//! RBF matrices. Designs are scored by black-box toy simulators and optimized
//! with CMA-ES; an analysis pipeline measures how expressive an encoder is.

pub mod actuation;
pub mod analysis;
pub mod baselines;
pub mod basis;
pub mod cmaes;
pub mod encoding;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod io;
pub mod objectives;
pub mod sim;
pub mod tasks;

pub use error::{Error, Result};

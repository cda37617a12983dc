//! Tools for asynchronous iterations of Boolean maps.
//!
//! An asynchronous iteration updates one component of a Boolean vector per
//! time step, the component being chosen by a strategy sequence. This crate
//! builds the finite graph that governs such iterations, certifies whether
//! the induced dynamical system is chaotic, measures distances and
//! sensitivity in the natural metric, converts orbits into machine-learning
//! datasets, trains small feedforward networks on them, and bridges between
//! Boolean maps and trained networks in both directions.

pub mod bridge;
pub mod codec;
pub mod dynamics;
mod error;
pub mod experiment;
pub mod graph;
pub mod lbfgs;
pub mod metric;
pub mod mlp;
pub mod train;

pub use error::{Error, Result};

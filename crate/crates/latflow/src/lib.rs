//! Numerics for one-parameter diagonal flows on the space of unimodular
//! lattices: sublattice height functions, contraction estimates for flow
//! averages, singular systems of linear forms, and empirical covering
//! surveys of escape sets.

pub mod cli;
pub mod dims;
pub mod diophantine;
pub mod error;
pub mod escape;
pub mod exterior;
pub mod heights;
pub mod intlin;
pub mod lattice;
pub mod manifest;
pub mod mc;
pub mod oracle;
pub mod reduction;
pub mod stats;
pub mod suites;

pub use dims::Dimensions;
pub use error::{Error, Result};
pub use lattice::Lattice;

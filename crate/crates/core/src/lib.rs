//! Equilibria, stability and heteroclinic structure of the Kuramoto model
//! `θ̇_j = Σ_{k∈N(j)} sin(θ_k − θ_j)` on finite graphs.

pub mod cli;
pub mod dynamics;
pub mod equilibria;
pub mod error;
pub mod graphs;
pub mod heteroclinic;
pub mod phasecfg;
pub mod spectral;

pub use error::{Error, Result};
pub use graphs::{generate, Graph, GraphFamily};
pub use phasecfg::Configuration;

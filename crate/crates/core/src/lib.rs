//! Monge transport from the quarter disk to a polar annulus with a vanishing
//! Dirichlet penalty.
//!
//! The crate computes the transport cost by duality, the obstacle constant `K`
//! and curve `Φ`, ray-preserving optimal maps, the penalised functional and its
//! decomposition, a recovery family with a Moser-flow patch, and an independent
//! discrete minimiser over point-cloud assignments.

// `!(x > 0.0)` also rejects NaN, which is the point of every such check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod domain;
pub mod energy;
pub mod error;
pub mod minimizer;
pub mod obstacle;
pub mod raymaps;
pub mod recovery;
pub mod stencil;
pub mod transport1d;

pub use error::{Error, Result};

//! Graph Neural Processes for categorical edge imputation.
//!
//! A model encodes the observed (context) edges of a graph into a single
//! mean-aggregated vector, then decodes a categorical distribution over
//! labels for every edge conditioned on it. Edge descriptions combine
//! eigenvector rows of the context subgraph's normalized Laplacian with
//! endpoint labels and degrees.

pub mod baselines;
pub mod config;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod features;
pub mod gnp;
pub mod graph;
pub mod neural;
pub mod seed;
pub mod spectral;
pub mod synthetic;

pub use error::{Error, Result};

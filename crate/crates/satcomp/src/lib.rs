//! Onboard compression pipeline and downlink mission tooling.
//!
//! The crate covers the full path from synthetic latent tensors to mission
//! arithmetic: a byte-oriented rANS coder over quantized CDF tables
//! ([`rans`]), Gaussian-conditional and factorized entropy models with a
//! seeded latent generator ([`entropy`]), image tiling and the bit-exact
//! per-tile file format ([`tile`]), a concurrent producer/worker coding
//! pipeline with CPU stressors ([`pipeline`]), operator-DAG subgraph
//! partitioning ([`subgraph`]), multi-factor priority scheduling over
//! heterogeneous processors ([`scheduler`]), and downlink-pass capacity and
//! energy accounting ([`mission`]).
//!
//! Start with the runnable programs under `examples/`; the `satcomp` binary
//! exposes the same capabilities as subcommands.

pub mod cli;
pub mod config;
pub mod entropy;
pub mod error;
pub mod mission;
pub mod pipeline;
pub mod rans;
pub mod scheduler;
pub mod subgraph;
pub mod tile;

pub use error::{Error, Result};

//! Reliable facility location with probabilistic facility failures.
//!
//! Every customer is served by an ordered list of open facilities; the
//! level-`r` facility serves only when the `r` nearer ones have failed. The
//! crate provides the cost model, an evolutionary algorithm with memorable
//! local search ([`eamls`]), a genetic algorithm baseline ([`evolve`]), an
//! exhaustive exact solver for small instances ([`oracle`]), a seeded
//! instance generator ([`instgen`]) and a benchmark harness ([`bench`]).

pub mod bench;
pub mod eamls;
pub mod error;
pub mod evolve;
pub mod instgen;
pub mod model;
pub mod oracle;
pub mod report;
pub mod seed;
pub mod stats;

pub use error::{Error, Result};
pub use model::{AllocationRule, Genotype, Instance, ModelConfig, Problem};

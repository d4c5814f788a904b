//! Monotone spin systems on small graphs: models, Glauber-type samplers,
//! and an exact enumeration oracle for transition kernels and dominance.

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod exact;
mod flow;
pub mod graph;
pub mod instances;
pub mod kv;
pub mod models;
pub mod order;
pub mod rng;

pub use error::{Error, Result};

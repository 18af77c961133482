//! Instruction-style text-editing toolkit: dataset construction, heuristic
//! filters, reference metrics, an LLM gateway, an evaluation harness and a
//! pairwise annotation service.

pub mod annotation;
pub mod builder;
pub mod corpus;
pub mod error;
pub mod gateway;
pub mod harness;
pub mod heuristics;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod text;
pub mod verbalizer;

pub use error::{Error, Result};
pub use model::*;

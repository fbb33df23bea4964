//! Raw nanopore signal read mapping.
//!
//! The crate is split along the mapping pipeline:
//!
//! * [`signal_model`]: pore models, synthetic genomes, reads and raw signals.
//! * [`event_pipeline`]: normalization, early quantization, 16-bit fixed-point
//!   conversion and t-test event segmentation.
//! * [`reference_index`]: the seed hash table over reference events.
//! * [`mapper`]: seeding, frequency and seed-and-vote filtering, chaining.
//! * [`sortnet`]: bucketized bitonic sort and streaming merge used by chaining.
//! * [`trace`]: per-step operation counts emitted by the mapper.
//! * [`isp_sim`]: analytical latency/energy model of in-storage execution.
//! * [`eval`]: precision/recall/F1 against ground truth.

pub mod error;
pub mod eval;
pub mod event_pipeline;
pub mod isp_sim;
pub mod mapper;
pub mod reference_index;
pub mod signal_model;
pub mod sortnet;
pub mod trace;

pub use error::{Error, Result};

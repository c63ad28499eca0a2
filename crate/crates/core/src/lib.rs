//! Entity group matching over multi-source record tables.
//!
//! Records are paired up by blocking, scored by a pairwise matcher, and
//! the positive predictions form a match graph. Graph cleanup splits
//! oversized components before every component is read as one entity
//! group. A synthetic data generator and group-level metrics are included
//! for benchmarking.

pub mod blocking;
pub mod cleanup;
pub mod datagen;
pub mod io;
pub mod matcher;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod text;

pub use model::{GroundTruth, RecordId, RecordPair};

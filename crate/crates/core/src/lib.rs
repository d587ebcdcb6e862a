//! Speech-to-gesture-property pipeline.
//!
//! The library predicts, frame by frame at 5 fps, whether a virtual agent
//! should gesture and which gesture properties (category, semantics, phase)
//! apply, then conditions a probabilistic pose generator on the predicted
//! properties.
//!
//! Modules follow the data flow:
//!
//! - [`corpus`]: property schema, annotated recordings, interval-to-frame
//!   rasterization, prevalence statistics, synthetic corpora.
//! - [`features`]: log-mel audio features and frame-aligned text embeddings.
//! - [`windows`]: sliding-window examples and speaker-disjoint folds.
//! - [`models`]: dilated temporal CNN classifiers (existence + per-tier
//!   property heads) with training and checkpointing.
//! - [`eval`]: F1 / Macro F1 metrics, random-guess baseline, cross-validation.
//! - [`flow`]: conditional affine-coupling normalizing flow over pose vectors.
//! - [`pipeline`]: end-to-end speech -> existence -> properties -> pose.

pub mod corpus;
pub mod error;
pub mod features;
pub mod flow;
pub mod eval;
pub mod models;
pub mod pipeline;
pub mod windows;

pub use error::{Error, Result};

//! Sequence classification for transient astronomical light curves.
//!
//! The pipeline: tabular light-curve data is parsed and grouped per object
//! ([`ingest`]), regrouped into five generalized classes, turned into
//! fixed-length masked feature matrices ([`preprocess`]), and classified by a
//! bidirectional LSTM with masked global max pooling and a softmax head
//! ([`model`]). Training is from-scratch backpropagation through time with
//! Adam and early stopping ([`trainer`]); evaluation produces one-vs-rest
//! ROC/PR curves, AUCs and confusion matrices ([`metrics`]). A seeded
//! synthetic generator ([`synthgen`]) provides end-to-end test data without
//! any external dataset.
//!
//! All numerics are `f64` and every seeded path is deterministic: the same
//! seeds produce bit-identical models, histories and reports on one build.

pub mod checkpoint;
pub mod cli;
pub mod gradcheck;
pub mod ingest;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod preprocess;
pub mod synthgen;
pub mod trainer;
